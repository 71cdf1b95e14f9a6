#pragma once

#include "holespin/device.hpp"
#include "holespin/eigensolver.hpp"
#include "holespin/hamiltonian.hpp"
#include "holespin/poisson.hpp"

#include <optional>
#include <string>
#include <vector>

namespace holespin {

struct ScfConfig {
    int max_iterations = 100;
    double beta = 0.3;
    int anderson_depth = 5;  // 0 selects plain linear mixing
    double tol = 1e-6;       // V, max-norm of the potential update
    int num_states = 4;
    double hole_count = 1.0;
    double temperature = 4.0;  // K, lead carrier statistics
    int oscillation_window = 15;
    double eigen_tol = 1e-10;
    int eigen_block = 0;  // see EigenOptions
    int eigen_depth = 5;
    int eigen_max_cycles = 60;
    std::uint64_t seed = 0x5eed1234ULL;
    std::string restart_path;  // state file used as warm start when set
    std::string trace_log;     // appends "iteration residual energy" lines when set

    void validate() const;
};

/// Everything needed to build the channel Hamiltonian for a potential and field.
class HamiltonianBuilder {
public:
    HamiltonianBuilder(const Device& device, const CrystalFrame& frame = {}, const StrainField* strain = nullptr);

    const Device& device() const { return *device_; }
    std::shared_ptr<const ChannelLayout> layout() const { return layout_; }
    const KpParameters& params() const { return params_; }
    const CrystalFrame& frame() const { return frame_; }
    bool has_strain() const { return strain_.has_value(); }

    SparseHamiltonian build(const std::vector<double>& potential, const MagneticFieldSpec& field) const;
    /// Only the field-dependent (Zeeman + vector potential) part at `field`.
    SparseHamiltonian magnetic_part(const MagneticFieldSpec& field) const;

private:
    const Device* device_;
    std::shared_ptr<const ChannelLayout> layout_;
    KpParameters params_;
    CrystalFrame frame_;
    double av_ = 0, b_ = 0, d_ = 0;
    std::optional<StrainField> strain_;
    mutable std::optional<SparseHamiltonian> base_;  // kinetic + strain at zero potential
};

struct ConvergedState {
    PotentialField potential;
    std::vector<SpinorState> states;
    std::vector<double> occupations;
    std::vector<double> trace;         // potential residual per iteration, V
    std::vector<double> energy_trace;  // ground energy per iteration, eV
    bool converged = false;
    int iterations = 0;
    BiasPoint bias;
    MagneticFieldSpec field;
};

/// Hole occupations: the hole count is spread evenly over consecutive doublets.
std::vector<double> doublet_occupations(int num_states, double hole_count);

/// Self-consistent Schroedinger-Poisson loop. `warm_start` replaces the bare-Poisson initial guess.
/// Throws ConvergenceError carrying the residual trace on oscillation or when the iteration cap is hit.
ConvergedState scf_solve(const Device& device, const BiasPoint& bias, const MagneticFieldSpec& field,
                         const StrainField* strain, const ScfConfig& cfg, const CrystalFrame& frame = {},
                         const PotentialField* warm_start = nullptr);

/// Same, reusing a prepared builder (strain and frame already bound). `warm_states` seed the first eigensolve.
ConvergedState scf_solve(const HamiltonianBuilder& builder, const BiasPoint& bias, const MagneticFieldSpec& field,
                         const ScfConfig& cfg, const PotentialField* warm_start = nullptr,
                         const std::vector<SpinorState>* warm_states = nullptr);

/// Binary state container; see state_io.cpp for the layout.
void save_state(const std::string& path, const ConvergedState& state);
/// Loads a state; when `expected` is given, its grid and channel must match exactly.
ConvergedState load_state(const std::string& path, const Device* expected = nullptr);

/// Bisects V_plunger in [lo, hi] until the ground energy equals target (eV) within tol.
double find_plunger_bias(const HamiltonianBuilder& builder, BiasPoint bias, const MagneticFieldSpec& field,
                         const ScfConfig& cfg, double target_energy, double lo, double hi, double tol = 1e-5);

}  // namespace holespin
