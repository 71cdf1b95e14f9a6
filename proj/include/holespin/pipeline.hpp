#pragma once

#include "holespin/config.hpp"
#include "holespin/elasticity.hpp"
#include "holespin/metrics.hpp"
#include "holespin/scf.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace holespin {

struct StrainOutcome {
    std::optional<StrainField> fd;  // empty for the unstrained scenario
    std::optional<ElasticityResult> elastic;
};

/// Strain on the device FD grid for a scenario (elasticity run, import, uniform injection or none).
StrainOutcome compute_strain(const RunConfig& cfg, const Device& device, const StrainSpec& spec);

/// Min/max per component and the values at the device dot proxy.
nlohmann::json strain_summary(const StrainField& eps, const Vec3& probe);

struct SolveSummary {
    DotMetrics dot;
    std::vector<double> energies_meV;
    double delta_meV = 0.0;  // orbital splitting between the two lowest doublets
    double zeeman_ueV = 0.0;
    std::string warning;
};

SolveSummary summarize(const ConvergedState& state);
nlohmann::json solve_json(const ConvergedState& state, const SolveSummary& s, const StrainField* strain);

struct GOutcome {
    Vec3 gauge_origin = Vec3::Zero();
    std::array<double, 6> splittings_eV{};
    GTensor G;
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    Vec3 g_singular = Vec3::Zero();
    Vec3 consistency = Vec3::Zero();  // singular value / principal value, both ascending
    double linearity_ratio = 0.0;     // splitting(2B) / splitting(B) along the strongest direction
    std::vector<std::string> warnings;
};

/// Gauge origin: configured value or the ground-state centroid.
Vec3 resolve_gauge_origin(const RunConfig& cfg, const ConvergedState& zero_field);

/// Lowest states at field B with the B = 0 state as starting point (self-consistent if configured).
std::vector<SpinorState> states_at_field(const HamiltonianBuilder& builder, const ConvergedState& zero_field,
                                         const MagneticFieldSpec& field, const RunConfig& cfg);

/// g-matrix of the B = 0 doublet via the magnetic operator elements.
Eigen::Matrix3d g_matrix_of(const HamiltonianBuilder& builder, const ConvergedState& zero_field,
                            const KramersDoublet& doublet, const Vec3& gauge_origin, double dB);

/// Both g methods on a converged B = 0 state.
GOutcome compute_g(const HamiltonianBuilder& builder, const ConvergedState& zero_field, const RunConfig& cfg);
nlohmann::json g_json(const GOutcome& g);

struct RabiOutcome {
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero(), g_minus = Eigen::Matrix3d::Zero(), g_plus = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d dg = Eigen::Matrix3d::Zero();
    RabiMap map;
    double max_MHz = 0.0, max_theta = 0.0, max_phi = 0.0;
    double f_90_90_MHz = 0.0;
};

/// g at V0 and V0 +- dV with doublets aligned to the V0 reference, then the Rabi map.
RabiOutcome compute_rabi(const HamiltonianBuilder& builder, const ConvergedState& zero_field, const RunConfig& cfg);
nlohmann::json rabi_json(const RabiOutcome& r, const RabiConfig& cfg);

nlohmann::json matrix_json(const Eigen::Matrix3d& m);
nlohmann::json vec_json(const Vec3& v);

}  // namespace holespin
