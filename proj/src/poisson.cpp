#include "holespin/poisson.hpp"

#include "holespin/constants.hpp"
#include "holespin/errors.hpp"

#include <Eigen/CholmodSupport>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace holespin {

ChargeDensityField ChargeDensityField::zero(const Grid& g) {
    ChargeDensityField f;
    f.grid = g;
    f.quantum.assign(g.size(), 0.0);
    f.dopant.assign(g.size(), 0.0);
    f.semiclassical.assign(g.size(), 0.0);
    return f;
}

std::vector<double> ChargeDensityField::total() const {
    std::vector<double> t(quantum.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = total(i);
    return t;
}

double ChargeDensityField::to_si(double e_per_nm3) { return e_per_nm3 * units::e_per_nm3_to_c_per_m3; }

ChargeDensityField quantum_hole_density(const std::vector<SpinorState>& states, const std::vector<double>& occupations,
                                        const Grid& grid) {
    if (states.size() != occupations.size())
        throw InvalidInput("occupation count does not match the number of states");
    ChargeDensityField f = ChargeDensityField::zero(grid);
    for (std::size_t n = 0; n < states.size(); ++n) {
        const double occ = occupations[n];
        if (!(occ >= 0.0)) throw InvalidInput("occupations must be non-negative");
        if (occ == 0.0) continue;
        const auto& s = states[n];
        if (!s.layout->grid.same_as(grid)) throw InvalidInput("state grid does not match the density grid");
        for (std::size_t c = 0; c < s.layout->size(); ++c)
            f.quantum[s.layout->nodes[c]] += occ * s.psi.segment<6>(long(6 * c)).squaredNorm();
    }
    return f;
}

ChargeDensityField dopant_density(const Grid& grid, const RegionMap& map) {
    ChargeDensityField f = ChargeDensityField::zero(grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (map.materials.at(map.material[i]).role == MaterialRole::Semiconductor)
            f.dopant[i] = map.doping_cm3[i] * units::per_cm3;
    return f;
}

namespace {

constexpr double kCap = 10.0;

/// Signed carrier charge (e/nm^3) and its derivative with respect to phi for a net doping N (nm^-3).
void carrier_charge(double N, double phi, double vt, double& rho, double& drho) {
    rho = drho = 0.0;
    if (N == 0.0) return;
    if (vt <= 0.0) {
        const double f = phi > 0 ? 0.0 : (phi == 0 ? 1.0 : kCap);
        const double g = phi < 0 ? 0.0 : (phi == 0 ? 1.0 : kCap);
        rho = N < 0 ? -N * f : -N * g;
        return;
    }
    if (N < 0) {  // acceptors, holes: p = NA exp(-phi/vt)
        const double x = -phi / vt;
        if (x >= std::log(kCap)) {
            rho = -N * kCap;
        } else {
            rho = -N * std::exp(x);
            drho = -rho / vt;
        }
    } else {  // donors, electrons: charge -n, n = ND exp(phi/vt)
        const double x = phi / vt;
        if (x >= std::log(kCap)) {
            rho = -N * kCap;
        } else {
            rho = -N * std::exp(x);
            drho = rho / vt;
        }
    }
}

}  // namespace

ChargeDensityField semiclassical_density(const std::vector<double>& phi, const Grid& grid, const RegionMap& map,
                                         double temperature) {
    if (phi.size() != grid.size()) throw InvalidInput("potential size does not match the grid");
    ChargeDensityField f = ChargeDensityField::zero(grid);
    const double vt = PhysicalConstants::boltzmann_kB * std::max(temperature, 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (map.role[i] != RegionRole::LeadExtension) continue;
        double rho, drho;
        carrier_charge(map.doping_cm3[i] * units::per_cm3, phi[i], vt, rho, drho);
        f.semiclassical[i] = rho;
    }
    return f;
}

struct PoissonSystem::Cache {
    std::mutex m;
    std::unique_ptr<Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower>> linear;
    Eigen::SparseMatrix<double> coupling;  // free rows x all nodes, Dirichlet columns only
};

PoissonSystem assemble_poisson(const Grid& grid, const RegionMap& map, const DeviceGeometry& geometry,
                               const BiasPoint& bias) {
    bias.validate();
    PoissonSystem P;
    P.cache_ = std::make_shared<PoissonSystem::Cache>();
    P.grid = grid;
    const std::size_t N = grid.size();
    P.eps_r.resize(N);
    P.control_volume.resize(N);
    P.dirichlet.assign(N, 0);
    P.dirichlet_value.assign(N, 0.0);
    P.lead_doping_cm3.assign(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        const auto& m = map.materials.at(map.material[i]);
        P.eps_r[i] = m.role == MaterialRole::Metal ? 1.0 : m.rel_permittivity;
        if (map.role[i] == RegionRole::LeadExtension) P.lead_doping_cm3[i] = map.doping_cm3[i];
        const auto c = grid.ijk(i);
        double v = 1.0;
        for (int d = 0; d < 3; ++d)
            v *= (c[d] == 0 || c[d] == grid.n[d] - 1) ? 0.5 * grid.spacing[d] : grid.spacing[d];
        P.control_volume[i] = v;
    }

    for (const auto& e : geometry.electrodes) {
        const int r = geometry.region_index(e.region);
        std::vector<std::size_t> nodes;
        for (std::size_t i = 0; i < N; ++i)
            if (map.region[i] == r) nodes.push_back(i);
        if (e.face != FaceSelect::Volume && !nodes.empty()) {
            const int axis = (e.face == FaceSelect::XMin || e.face == FaceSelect::XMax) ? 0
                             : (e.face == FaceSelect::YMin || e.face == FaceSelect::YMax) ? 1 : 2;
            const bool lo = e.face == FaceSelect::XMin || e.face == FaceSelect::YMin || e.face == FaceSelect::ZMin;
            int ext = lo ? grid.n[axis] : -1;
            for (auto i : nodes) ext = lo ? std::min(ext, grid.ijk(i)[axis]) : std::max(ext, grid.ijk(i)[axis]);
            std::vector<std::size_t> face;
            for (auto i : nodes)
                if (grid.ijk(i)[axis] == ext) face.push_back(i);
            nodes.swap(face);
        }
        if (nodes.empty()) throw InvalidInput("electrode '" + e.name + "' selects no grid nodes");
        for (auto i : nodes) P.dirichlet[i] = 1;
        P.electrode_nodes_.emplace_back(e.name, std::move(nodes));
    }
    P.set_bias(bias);

    P.free_index.assign(N, -1);
    for (std::size_t i = 0; i < N; ++i)
        if (!P.dirichlet[i]) {
            P.free_index[i] = long(P.free_nodes.size());
            P.free_nodes.push_back(i);
        }
    if (P.free_nodes.size() == N)
        throw InvalidInput("Poisson problem is singular: no Dirichlet (electrode) node anywhere");

    std::vector<Eigen::Triplet<double>> ta, tc;
    const long nf = long(P.free_nodes.size());
    for (std::size_t i = 0; i < N; ++i) {
        const auto c = grid.ijk(i);
        for (int d = 0; d < 3; ++d) {
            auto cn = c;
            cn[d] += 1;
            if (cn[d] >= grid.n[d]) continue;
            const std::size_t j = grid.index(cn[0], cn[1], cn[2]);
            double area = 1.0;
            for (int e = 0; e < 3; ++e)
                if (e != d) area *= (c[e] == 0 || c[e] == grid.n[e] - 1) ? 0.5 * grid.spacing[e] : grid.spacing[e];
            const double eps = 2.0 * P.eps_r[i] * P.eps_r[j] / (P.eps_r[i] + P.eps_r[j]);
            const double w = eps * area / grid.spacing[d];
            const long fi = P.free_index[i], fj = P.free_index[j];
            if (fi >= 0) ta.emplace_back(fi, fi, w);
            if (fj >= 0) ta.emplace_back(fj, fj, w);
            if (fi >= 0 && fj >= 0) {
                ta.emplace_back(fi, fj, -w);
                ta.emplace_back(fj, fi, -w);
            } else if (fi >= 0) {
                tc.emplace_back(fi, long(j), w);
            } else if (fj >= 0) {
                tc.emplace_back(fj, long(i), w);
            }
        }
    }
    P.A.resize(nf, nf);
    P.A.setFromTriplets(ta.begin(), ta.end());
    P.cache_->coupling.resize(nf, long(N));
    P.cache_->coupling.setFromTriplets(tc.begin(), tc.end());
    P.boundary_rhs = P.cache_->coupling * Eigen::Map<const Eigen::VectorXd>(P.dirichlet_value.data(), long(N));
    return P;
}

void PoissonSystem::set_bias(const BiasPoint& bias) {
    bias.validate();
    for (const auto& [name, nodes] : electrode_nodes_) {
        const double v = bias.electrode_voltage(name);
        for (auto i : nodes) dirichlet_value[i] = v;
    }
    if (cache_ && cache_->coupling.rows() > 0)
        boundary_rhs = cache_->coupling * Eigen::Map<const Eigen::VectorXd>(dirichlet_value.data(), long(grid.size()));
}

bool PoissonSystem::has_leads() const {
    for (std::size_t i = 0; i < lead_doping_cm3.size(); ++i)
        if (!dirichlet[i] && lead_doping_cm3[i] != 0.0) return true;
    return false;
}

PotentialField PoissonSystem::solve(const std::vector<double>& rho) const {
    if (!cache_) throw InvalidInput("Poisson system was not assembled");
    if (rho.size() != grid.size()) throw InvalidInput("charge density size does not match the grid");
    const long nf = long(free_nodes.size());
    Eigen::VectorXd b = boundary_rhs;
    for (long f = 0; f < nf; ++f) {
        const std::size_t i = free_nodes[std::size_t(f)];
        b[f] += units::e_over_eps0 * control_volume[i] * rho[i];
    }
    Eigen::VectorXd x;
    {
        std::lock_guard<std::mutex> lock(cache_->m);
        if (!cache_->linear) {
            cache_->linear = std::make_unique<Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower>>(A);
            if (cache_->linear->info() != Eigen::Success) throw InvalidInput("Poisson operator is not positive definite");
        }
        x = cache_->linear->solve(b);
        Eigen::VectorXd r = b - A * x;
        x += cache_->linear->solve(r);
    }
    const double bn = b.norm();
    const double rel = bn > 0 ? (b - A * x).norm() / bn : (A * x).norm();
    if (!(rel <= 1e-10)) throw ConvergenceError("Poisson solve missed the residual tolerance", {rel});
    PotentialField phi{grid, dirichlet_value};
    for (long f = 0; f < nf; ++f) phi.values[free_nodes[std::size_t(f)]] = x[f];
    return phi;
}

double PoissonSystem::residual(const std::vector<double>& phi, const std::vector<double>& rho) const {
    const long nf = long(free_nodes.size());
    Eigen::VectorXd x(nf), b = boundary_rhs;
    for (long f = 0; f < nf; ++f) {
        const std::size_t i = free_nodes[std::size_t(f)];
        x[f] = phi[i];
        b[f] += units::e_over_eps0 * control_volume[i] * rho[i];
    }
    const double bn = b.norm();
    return (A * x - b).norm() / (bn > 0 ? bn : 1.0);
}

PotentialField PoissonSystem::solve_nonlinear(const std::vector<double>& rho_fixed, double temperature,
                                              const std::vector<double>* initial, PoissonSolveInfo* info) const {
    if (!has_leads()) {
        if (info) *info = PoissonSolveInfo{0, 0.0};
        return solve(rho_fixed);
    }
    if (!(temperature > 0)) throw InvalidInput("semiclassical leads need a positive temperature");
    const double vt = PhysicalConstants::boltzmann_kB * temperature;
    const long nf = long(free_nodes.size());
    const double c = units::e_over_eps0;

    std::vector<long> lead_free;
    for (long f = 0; f < nf; ++f)
        if (lead_doping_cm3[free_nodes[std::size_t(f)]] != 0.0) lead_free.push_back(f);

    Eigen::VectorXd b0 = boundary_rhs;
    for (long f = 0; f < nf; ++f) {
        const std::size_t i = free_nodes[std::size_t(f)];
        b0[f] += c * control_volume[i] * rho_fixed[i];
    }
    Eigen::VectorXd x(nf);
    if (initial) {
        for (long f = 0; f < nf; ++f) x[f] = (*initial)[free_nodes[std::size_t(f)]];
    } else {
        const PotentialField lin = solve(rho_fixed);
        for (long f = 0; f < nf; ++f) x[f] = lin.values[free_nodes[std::size_t(f)]];
    }

    auto eval = [&](const Eigen::VectorXd& xv, Eigen::VectorXd& F, Eigen::VectorXd* dq, double& scale) {
        F = A * xv - b0;
        double qn = 0;
        if (dq) dq->setZero(nf);
        for (long f : lead_free) {
            const std::size_t i = free_nodes[std::size_t(f)];
            double rho, drho;
            carrier_charge(lead_doping_cm3[i] * units::per_cm3, xv[f], vt, rho, drho);
            const double q = c * control_volume[i] * rho;
            F[f] -= q;
            qn += q * q;
            if (dq) (*dq)[f] = -c * control_volume[i] * drho;
        }
        scale = b0.norm() + std::sqrt(qn) + 1e-30;
    };

    Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt;
    llt.analyzePattern(A);
    Eigen::VectorXd F, dq, Ft;
    double scale, scale_t;
    eval(x, F, &dq, scale);
    std::vector<double> history;
    const int max_iter = 400;
    auto finish = [&](int it, double res) {
        if (info) *info = PoissonSolveInfo{it, res};
        PotentialField phi{grid, dirichlet_value};
        for (long f = 0; f < nf; ++f) phi.values[free_nodes[std::size_t(f)]] = x[f];
        return phi;
    };
    for (int it = 0; it < max_iter; ++it) {
        const double fn = F.norm();
        history.push_back(fn / scale);
        if (fn <= 1e-10 * scale) return finish(it, fn / scale);
        Eigen::SparseMatrix<double> J = A;
        for (long f : lead_free) J.coeffRef(f, f) += dq[f];
        llt.factorize(J);
        if (llt.info() != Eigen::Success) throw ConvergenceError("Newton Jacobian factorisation failed", history);
        const Eigen::VectorXd dx = -llt.solve(F);
        double t = 1.0;
        Eigen::VectorXd xt;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            xt = x + t * dx;
            eval(xt, Ft, nullptr, scale_t);
            if (Ft.norm() <= (1.0 - 1e-4 * t) * fn) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (dx.cwiseAbs().maxCoeff() < 1e-13) return finish(it, fn / scale);
            throw ConvergenceError("nonlinear Poisson line search failed", history);
        }
        x = xt;
        eval(x, F, &dq, scale);
    }
    throw ConvergenceError("nonlinear Poisson did not converge", history);
}

PotentialField solve_poisson(const PoissonSystem& op, const ChargeDensityField& rho) {
    if (!rho.grid.same_as(op.grid)) throw InvalidInput("charge density grid does not match the operator");
    return op.solve(rho.total());
}

}  // namespace holespin
