#pragma once

#include "holespin/eigensolver.hpp"
#include "holespin/hamiltonian.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

namespace holespin {

struct DotMetrics {
    Vec3 lengths = Vec3::Zero();  // l_x, l_y, l_z, nm
    double l_dot = 0.0;
    Vec3 centroid = Vec3::Zero();
    double hh = 0, lh = 0, so = 0;
    std::array<double, 6> components{};
    double splitting_meV = 0.0;
};

/// Weighted standard deviation with the (M-1)/M correction, M = number of non-zero weights;
/// returns l = 2 s_w. A single populated point gives 0.
double weighted_length(const std::vector<double>& coords, const std::vector<double>& weights);

/// Lengths and centroid from the per-axis marginals of the summed spinor density.
DotMetrics dot_length(const SpinorState& state);

struct BandFractions {
    double hh = 0, lh = 0, so = 0;
    std::array<double, 6> components{};
};

BandFractions band_mixing(const SpinorState& state);

/// E_2 - E_1 for the lowest pair. If `warning` is given it receives a note when the next level is closer than 5 dE.
double zeeman_splitting(const std::vector<SpinorState>& states, std::string* warning = nullptr);

/// Unit directions x, y, z, (x+y)/sqrt2, (x+z)/sqrt2, (y+z)/sqrt2.
const std::array<Vec3, 6>& six_directions();

struct GTensor {
    Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
    Vec3 principal = Vec3::Zero();             // ascending principal g-factors
    Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();  // columns, matching `principal`
    bool indefinite = false;
};

/// Solves dE^2 = muB^2 B^2 b^T G b for the six unique entries; splittings in eV, |B| in T.
GTensor reconstruct_g_tensor(const std::array<double, 6>& splittings, double B);

/// Zeeman splitting (eV) predicted by G for direction b at |B|.
double predicted_splitting(const Eigen::Matrix3d& G, const Vec3& b, double B);

/// <psi_a| dH/dB_alpha |psi_b> by central difference of the field-dependent part (Zeeman + vector
/// potential) with step dB (T). With check_linearity the step is halved and a relative change above
/// 1e-3 is rejected.
Eigen::Matrix2cd magnetic_operator_elements(const KramersDoublet& doublet, const SparseHamiltonian& reference,
                                            int axis, const Vec3& gauge_origin, double dB = 1e-3,
                                            bool check_linearity = true);

/// Pauli expansion g_{i alpha} = Tr(sigma_i M_alpha) / muB. A trace part above trace_tol * max(1, max|g|) throws.
Eigen::Matrix3d build_g_matrix(const std::array<Eigen::Matrix2cd, 3>& elements, double trace_tol = 1e-4);

/// Singular values, ascending.
Vec3 g_matrix_singular_values(const Eigen::Matrix3d& g);

Eigen::Matrix3d g_matrix_derivative(const Eigen::Matrix3d& g_minus, const Eigen::Matrix3d& g_plus, double dV);

enum class RabiMode { FixedField, FixedLarmor };

/// EDSR rate in the g-matrix formalism: f_R = muB B V_ac / (2 h g*) |(g b) x (g' b)|, in MHz.
/// `field_or_larmor` is |B| in T (FixedField) or f_L in GHz (FixedLarmor).
double rabi_frequency(const Eigen::Matrix3d& g, const Eigen::Matrix3d& dg, const Vec3& b, double V_ac,
                      double field_or_larmor, RabiMode mode);

struct RabiConfig {
    double V_ac = 1e-3;  // V
    double dV = 1e-3;    // V
    RabiMode mode = RabiMode::FixedLarmor;
    double f_L_GHz = 3.0;
    double B = 0.1;
    int theta_steps = 19;  // 0..180 deg inclusive
    int phi_steps = 37;    // 0..360 deg inclusive

    void validate() const;
};

struct RabiMap {
    std::vector<double> theta_deg, phi_deg;
    std::vector<double> f_MHz;  // theta-major
    RabiMode mode = RabiMode::FixedLarmor;
    double V_ac = 0;

    double at(std::size_t it, std::size_t ip) const { return f_MHz[it * phi_deg.size() + ip]; }
    void write_csv(const std::string& path) const;
};

/// Unit vector for polar angle theta and azimuth phi (degrees).
Vec3 direction_from_angles(double theta_deg, double phi_deg);

RabiMap rabi_map(const Eigen::Matrix3d& g, const Eigen::Matrix3d& dg, const std::vector<double>& theta_deg,
                 const std::vector<double>& phi_deg, const RabiConfig& cfg);
RabiMap rabi_map(const Eigen::Matrix3d& g, const Eigen::Matrix3d& dg, const RabiConfig& cfg);

/// hbar / sqrt(m* m0 Delta) in nm; Delta in meV.
double splitting_dot_length(double delta_meV, double m_star);

/// Polar sections of g_eff(b) = sqrt(b^T G b) in the xy, xz, yz planes: CSV plane,angle_deg,g_eff.
void write_g_polar_csv(const std::string& path, const Eigen::Matrix3d& G, int steps = 72);

}  // namespace holespin
