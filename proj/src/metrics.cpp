#include "holespin/metrics.hpp"

#include "holespin/constants.hpp"
#include "holespin/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace holespin {

namespace {

constexpr double kMuB = PhysicalConstants::bohr_magneton_muB;

std::array<double, 6> component_weights(const SpinorState& s) {
    std::array<double, 6> w{};
    const long n = s.psi.size() / 6;
    for (long c = 0; c < n; ++c)
        for (int b = 0; b < 6; ++b) w[std::size_t(b)] += std::norm(s.psi[6 * c + b]);
    double total = 0;
    for (double x : w) total += x;
    if (!(total > 0)) throw InvalidInput("state has zero norm");
    for (double& x : w) x /= total;
    return w;
}

}  // namespace

double weighted_length(const std::vector<double>& coords, const std::vector<double>& weights) {
    if (coords.size() != weights.size()) throw InvalidInput("weighted_length: size mismatch");
    double W = 0, m1 = 0;
    std::size_t M = 0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (weights[i] < 0) throw InvalidInput("weighted_length: negative weight");
        if (weights[i] > 0) {
            ++M;
            W += weights[i];
            m1 += weights[i] * coords[i];
        }
    }
    if (M == 0 || !(W > 0)) throw InvalidInput("weighted_length: all weights are zero");
    if (M == 1) return 0.0;
    const double mean = m1 / W;
    double m2 = 0;
    for (std::size_t i = 0; i < coords.size(); ++i)
        if (weights[i] > 0) m2 += weights[i] * (coords[i] - mean) * (coords[i] - mean);
    const double s = std::sqrt(m2 / ((double(M) - 1.0) / double(M) * W));
    return 2.0 * s;
}

DotMetrics dot_length(const SpinorState& state) {
    if (!state.layout) throw InvalidInput("dot_length: state has no layout");
    const auto& lay = *state.layout;
    const Grid& g = lay.grid;
    DotMetrics out;
    std::array<std::map<int, double>, 3> marg;
    double total = 0;
    Vec3 c = Vec3::Zero();
    for (std::size_t n = 0; n < lay.size(); ++n) {
        const double w = state.psi.segment<6>(6 * long(n)).squaredNorm();
        const auto ijk = g.ijk(lay.nodes[n]);
        for (int a = 0; a < 3; ++a) marg[std::size_t(a)][ijk[std::size_t(a)]] += w;
        total += w;
        c += w * lay.position(n);
    }
    if (!(total > 0)) throw InvalidInput("dot_length: all weights are zero");
    out.centroid = c / total;
    for (int a = 0; a < 3; ++a) {
        std::vector<double> x, w;
        for (const auto& [i, v] : marg[std::size_t(a)]) {
            x.push_back(g.origin[a] + i * g.spacing[a]);
            w.push_back(v);
        }
        out.lengths[a] = weighted_length(x, w);
    }
    out.l_dot = out.lengths.mean();
    const BandFractions f = band_mixing(state);
    out.hh = f.hh;
    out.lh = f.lh;
    out.so = f.so;
    out.components = f.components;
    return out;
}

BandFractions band_mixing(const SpinorState& state) {
    BandFractions f;
    f.components = component_weights(state);
    const auto& w = f.components;
    f.hh = w[0] + w[3];
    f.lh = w[1] + w[2];
    f.so = w[4] + w[5];
    return f;
}

double zeeman_splitting(const std::vector<SpinorState>& states, std::string* warning) {
    if (states.size() < 2) throw InvalidInput("zeeman_splitting needs at least two states");
    const double dE = std::abs(states[1].energy - states[0].energy);
    if (warning && states.size() >= 3) {
        const double gap = states[2].energy - states[1].energy;
        if (gap <= 5.0 * dE) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "ground doublet not isolated: gap %.6g eV vs splitting %.6g eV", gap, dE);
            *warning = buf;
        }
    }
    return dE;
}

const std::array<Vec3, 6>& six_directions() {
    static const std::array<Vec3, 6> d = [] {
        const double r = 1.0 / std::sqrt(2.0);
        return std::array<Vec3, 6>{Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1),
                                   Vec3(r, r, 0), Vec3(r, 0, r), Vec3(0, r, r)};
    }();
    return d;
}

GTensor reconstruct_g_tensor(const std::array<double, 6>& dE, double B) {
    if (!(B > 0)) throw InvalidInput("reconstruct_g_tensor: |B| must be positive");
    std::array<double, 6> q{};
    for (std::size_t i = 0; i < 6; ++i) {
        if (dE[i] < 0) throw InvalidInput("reconstruct_g_tensor: negative splitting");
        const double r = dE[i] / (kMuB * B);
        q[i] = r * r;
    }
    GTensor t;
    Eigen::Matrix3d& G = t.G;
    G(0, 0) = q[0];
    G(1, 1) = q[1];
    G(2, 2) = q[2];
    G(0, 1) = G(1, 0) = q[3] - 0.5 * (q[0] + q[1]);
    G(0, 2) = G(2, 0) = q[4] - 0.5 * (q[0] + q[2]);
    G(1, 2) = G(2, 1) = q[5] - 0.5 * (q[1] + q[2]);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(G);
    const Vec3 ev = es.eigenvalues();
    const double tol = 1e-9 * std::max(1e-300, ev.cwiseAbs().maxCoeff());
    t.indefinite = ev.minCoeff() < -tol;
    for (int i = 0; i < 3; ++i) t.principal[i] = std::sqrt(std::max(0.0, ev[i]));
    t.axes = es.eigenvectors();
    if (t.axes.determinant() < 0) t.axes.col(2) *= -1.0;
    return t;
}

double predicted_splitting(const Eigen::Matrix3d& G, const Vec3& b, double B) {
    return kMuB * B * std::sqrt(std::max(0.0, b.dot(G * b)) / b.squaredNorm());
}

namespace {

Eigen::Matrix2cd project(const KramersDoublet& d, const SpMatC& M) {
    Eigen::Matrix2cd out;
    const double dV = d.states[0].cell_volume();
    for (int b = 0; b < 2; ++b) {
        const Eigen::VectorXcd Mb = M * d.states[std::size_t(b)].psi;
        for (int a = 0; a < 2; ++a) out(a, b) = d.states[std::size_t(a)].psi.dot(Mb) * dV;
    }
    return out;
}

Eigen::Matrix2cd central_difference(const KramersDoublet& d, const SparseHamiltonian& ref, int axis,
                                    const Vec3& origin, double dB) {
    auto part = [&](double s) {
        SparseHamiltonian H = ref;
        H.matrix.coeffs().setZero();
        MagneticFieldSpec f;
        f.B[axis] = s * dB;
        f.gauge_origin = origin;
        add_magnetic(H, f);
        return H.matrix;
    };
    const SpMatC diff = (part(1.0) - part(-1.0)) / (2.0 * dB);
    return project(d, diff);
}

}  // namespace

Eigen::Matrix2cd magnetic_operator_elements(const KramersDoublet& doublet, const SparseHamiltonian& reference,
                                            int axis, const Vec3& gauge_origin, double dB, bool check_linearity) {
    if (axis < 0 || axis > 2) throw InvalidInput("magnetic_operator_elements: axis must be 0, 1 or 2");
    if (!(dB > 0)) throw InvalidInput("magnetic_operator_elements: dB must be positive");
    const Eigen::Matrix2cd M = central_difference(doublet, reference, axis, gauge_origin, dB);
    if (check_linearity) {
        const Eigen::Matrix2cd Mh = central_difference(doublet, reference, axis, gauge_origin, 0.5 * dB);
        const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-30);
        const double rel = (M - Mh).cwiseAbs().maxCoeff() / scale;
        if (M.cwiseAbs().maxCoeff() > 0 && rel > 1e-3) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "magnetic elements not linear in dB: relative change %.3g", rel);
            throw ConvergenceError(buf, {rel});
        }
    }
    return M;
}

Eigen::Matrix3d build_g_matrix(const std::array<Eigen::Matrix2cd, 3>& elements, double trace_tol) {
    Eigen::Matrix2cd sx, sy, sz;
    sx << 0, 1, 1, 0;
    sy << 0, cplx(0, -1), cplx(0, 1), 0;
    sz << 1, 0, 0, -1;
    const std::array<const Eigen::Matrix2cd*, 3> sig{&sx, &sy, &sz};
    Eigen::Matrix3d g;
    double trace_max = 0;
    for (int a = 0; a < 3; ++a) {
        const auto& M = elements[std::size_t(a)];
        for (int i = 0; i < 3; ++i) g(i, a) = ((*sig[std::size_t(i)]) * M).trace().real() / kMuB;
        trace_max = std::max(trace_max, std::abs(M.trace()) / kMuB);
    }
    const double gmax = g.cwiseAbs().maxCoeff();
    if (gmax > 0 && trace_max > trace_tol * std::max(1.0, gmax)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "g-matrix basis misaligned: identity component %.3g", trace_max);
        throw InvalidInput(buf);
    }
    return g;
}

Vec3 g_matrix_singular_values(const Eigen::Matrix3d& g) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(g);
    Vec3 s = svd.singularValues();
    std::sort(s.data(), s.data() + 3);
    return s;
}

Eigen::Matrix3d g_matrix_derivative(const Eigen::Matrix3d& g_minus, const Eigen::Matrix3d& g_plus, double dV) {
    if (!(dV > 0)) throw InvalidInput("g_matrix_derivative: dV must be positive");
    return (g_plus - g_minus) / (2.0 * dV);
}

double rabi_frequency(const Eigen::Matrix3d& g, const Eigen::Matrix3d& dg, const Vec3& b_in, double V_ac,
                      double field_or_larmor, RabiMode mode) {
    const double nb = b_in.norm();
    if (!(nb > 0)) throw InvalidInput("rabi_frequency: zero field direction");
    const Vec3 b = b_in / nb;
    const Vec3 gb = g * b;
    const double gstar = gb.norm();
    if (gstar < 1e-6) throw InvalidInput("rabi_frequency: effective g below 1e-6, Larmor frequency undefined");
    double B = field_or_larmor;
    if (mode == RabiMode::FixedLarmor) B = PhysicalConstants::planck_h_ev * field_or_larmor * 1e9 / (kMuB * gstar);
    const double cross = gb.cross(dg * b).norm();
    return kMuB * B * V_ac / (2.0 * PhysicalConstants::planck_h_ev * gstar) * cross / 1e6;
}

void RabiConfig::validate() const {
    if (!(dV > 0)) throw InvalidInput("rabi: delta_V must be positive");
    if (!(V_ac >= 0)) throw InvalidInput("rabi: V_ac must be non-negative");
    if (mode == RabiMode::FixedLarmor && !(f_L_GHz > 0)) throw InvalidInput("rabi: f_L must be positive");
    if (mode == RabiMode::FixedField && !(B > 0)) throw InvalidInput("rabi: B must be positive");
    if (theta_steps < 1 || phi_steps < 1) throw InvalidInput("rabi: angle grids need at least one point");
}

Vec3 direction_from_angles(double theta_deg, double phi_deg) {
    const double t = theta_deg * units::pi / 180.0, p = phi_deg * units::pi / 180.0;
    return Vec3(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t));
}

RabiMap rabi_map(const Eigen::Matrix3d& g, const Eigen::Matrix3d& dg, const std::vector<double>& theta,
                 const std::vector<double>& phi, const RabiConfig& cfg) {
    cfg.validate();
    RabiMap m;
    m.theta_deg = theta;
    m.phi_deg = phi;
    m.mode = cfg.mode;
    m.V_ac = cfg.V_ac;
    m.f_MHz.assign(theta.size() * phi.size(), 0.0);
    const double arg = cfg.mode == RabiMode::FixedLarmor ? cfg.f_L_GHz : cfg.B;
    for (std::size_t i = 0; i < theta.size(); ++i)
        for (std::size_t j = 0; j < phi.size(); ++j)
            m.f_MHz[i * phi.size() + j] = rabi_frequency(g, dg, direction_from_angles(theta[i], phi[j]), cfg.V_ac, arg, cfg.mode);
    return m;
}

RabiMap rabi_map(const Eigen::Matrix3d& g, const Eigen::Matrix3d& dg, const RabiConfig& cfg) {
    cfg.validate();
    auto linspace = [](double hi, int n) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) v[std::size_t(i)] = n == 1 ? 0.0 : hi * i / (n - 1);
        return v;
    };
    return rabi_map(g, dg, linspace(180.0, cfg.theta_steps), linspace(360.0, cfg.phi_steps), cfg);
}

void RabiMap::write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot write " + path);
    std::fprintf(f, "theta_deg,phi_deg,f_R_MHz\n");
    for (std::size_t i = 0; i < theta_deg.size(); ++i)
        for (std::size_t j = 0; j < phi_deg.size(); ++j)
            std::fprintf(f, "%.17g,%.17g,%.17g\n", theta_deg[i], phi_deg[j], at(i, j));
    if (std::fclose(f) != 0) throw IoError("failed writing " + path);
}

double splitting_dot_length(double delta_meV, double m_star) {
    if (!(delta_meV > 0)) throw InvalidInput("splitting_dot_length: splitting must be positive");
    if (!(m_star > 0)) throw InvalidInput("splitting_dot_length: effective mass must be positive");
    return std::sqrt(2.0 * units::hbar2_2m0 / (m_star * delta_meV * 1e-3));
}

void write_g_polar_csv(const std::string& path, const Eigen::Matrix3d& G, int steps) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot write " + path);
    std::fprintf(f, "plane,angle_deg,g_eff\n");
    const char* names[3] = {"xy", "xz", "yz"};
    const int axes[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int p = 0; p < 3; ++p)
        for (int s = 0; s <= steps; ++s) {
            const double a = 360.0 * s / steps;
            Vec3 b = Vec3::Zero();
            b[axes[p][0]] = std::cos(a * units::pi / 180.0);
            b[axes[p][1]] = std::sin(a * units::pi / 180.0);
            std::fprintf(f, "%s,%.17g,%.17g\n", names[p], a, std::sqrt(std::max(0.0, b.dot(G * b))));
        }
    if (std::fclose(f) != 0) throw IoError("failed writing " + path);
}

}  // namespace holespin
