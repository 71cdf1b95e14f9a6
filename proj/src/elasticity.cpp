#include "holespin/elasticity.hpp"

#include "holespin/errors.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include <array>
#include <cmath>

namespace holespin {

const char* to_string(CoolingScenario s) {
    switch (s) {
        case CoolingScenario::BC1: return "bc1";
        case CoolingScenario::BC2: return "bc2";
        case CoolingScenario::None: return "none";
        case CoolingScenario::Imported: return "import";
    }
    return "?";
}

void ElasticityConfig::validate() const {
    if (!(T_rt > 0) || !(T_cool >= 0)) throw InvalidInput("temperatures must be positive");
    if ((scenario == CoolingScenario::BC1 || scenario == CoolingScenario::BC2) && !(T_cool < T_rt))
        throw InvalidInput("cooling run requires T_cool < T_rt");
    if (lateral_extension < 0) throw InvalidInput("lateral extension must be non-negative");
    if (coarsen < 1) throw InvalidInput("elastic mesh coarsening factor must be >= 1");
    if (!(tol > 0)) throw InvalidInput("elasticity tolerance must be positive");
    if (scenario == CoolingScenario::Imported && import_path.empty())
        throw InvalidInput("imported strain scenario needs a file path");
}

Matrix6 isotropic_elasticity_matrix(double E_gpa, double nu) {
    if (!(E_gpa > 0)) throw InvalidInput("Young modulus must be positive");
    if (!(nu >= 0.0 && nu < 0.5)) throw InvalidInput("Poisson ratio must lie in [0, 0.5)");
    const double f = E_gpa / ((1 + nu) * (1 - 2 * nu));
    Matrix6 C = Matrix6::Zero();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) C(i, j) = f * (i == j ? 1 - nu : nu);
    for (int i = 3; i < 6; ++i) C(i, i) = E_gpa / (1 + nu);  // 2G
    return C;
}

Vector6 thermal_strain_vector(double alpha, double T_rt, double T_cool) {
    Vector6 v = Vector6::Zero();
    v.head<3>().setConstant(alpha * (T_cool - T_rt));
    return v;
}

namespace {

constexpr int voigt_pair[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};

int voigt_index(int i, int j) {
    if (i == j) return i;
    if (i > j) std::swap(i, j);
    return i == 0 ? (j == 1 ? 3 : 4) : 5;
}

}  // namespace

Matrix6 rotate_stiffness(const Matrix6& C, const Eigen::Matrix3d& R) {
    double c[3][3][3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) {
                    const int J = voigt_index(k, l);
                    c[i][j][k][l] = C(voigt_index(i, j), J) * (J >= 3 ? 0.5 : 1.0);
                }
    Matrix6 out = Matrix6::Zero();
    for (int I = 0; I < 6; ++I)
        for (int J = 0; J < 6; ++J) {
            const int i = voigt_pair[I][0], j = voigt_pair[I][1], k = voigt_pair[J][0], l = voigt_pair[J][1];
            double s = 0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    for (int cc = 0; cc < 3; ++cc)
                        for (int d = 0; d < 3; ++d)
                            s += R(i, a) * R(j, b) * R(k, cc) * R(l, d) * c[a][b][cc][d];
            out(I, J) = s * (J >= 3 ? 2.0 : 1.0);
        }
    return out;
}

Matrix6 ElasticMesh::stiffness(int material) const {
    if (std::size_t(material) < custom_C.size() && custom_C[std::size_t(material)])
        return *custom_C[std::size_t(material)];
    const auto& m = materials.at(material);
    return isotropic_elasticity_matrix(m.young_E, m.poisson_nu);
}

ElasticMesh make_box_mesh(const Vec3& lo, const Vec3& hi, const Vec3& spacing, const MaterialRecord& m) {
    ElasticMesh mesh;
    mesh.materials = MaterialTable::empty();
    mesh.materials.set(m);
    mesh.nodes.origin = lo;
    mesh.nodes.spacing = spacing;
    for (int d = 0; d < 3; ++d) mesh.nodes.n[d] = int(std::lround((hi[d] - lo[d]) / spacing[d])) + 1;
    for (int d = 0; d < 3; ++d)
        if (mesh.nodes.n[d] < 2) throw InvalidInput("box mesh needs at least one cell per direction");
    mesh.cell_material.assign(mesh.num_cells(), 0);
    mesh.fixed.assign(mesh.nodes.size(), 0);
    return mesh;
}

ElasticMesh make_elastic_mesh(const DeviceGeometry& geometry, const Vec3& spacing) {
    geometry.validate();
    ElasticMesh mesh;
    mesh.materials = geometry.materials;
    mesh.nodes.origin = geometry.domain_lo;
    if (!((spacing.array() > 0).all())) throw InvalidInput("elastic mesh spacing must be positive");
    const Vec3 ext = geometry.domain_hi - geometry.domain_lo;
    for (int d = 0; d < 3; ++d) {
        const long cells = std::max(1L, std::lround(ext[d] / spacing[d]));
        mesh.nodes.n[d] = int(cells) + 1;
        mesh.nodes.spacing[d] = ext[d] / double(cells);
    }
    mesh.cell_material.resize(mesh.num_cells());
    const auto& g = mesh.nodes;
    for (int i = 0; i + 1 < g.n[0]; ++i)
        for (int j = 0; j + 1 < g.n[1]; ++j)
            for (int k = 0; k + 1 < g.n[2]; ++k) {
                const Vec3 c = g.position(i, j, k) + 0.5 * g.spacing;
                const int r = geometry.region_at(c);
                if (r < 0) throw InvalidInput("elastic cell centre not covered by any region");
                mesh.cell_material[mesh.cell_index(i, j, k)] =
                    geometry.materials.index_of(geometry.regions[std::size_t(r)].material);
            }
    mesh.fixed.assign(g.size(), 0);
    return mesh;
}

void apply_scenario(ElasticMesh& mesh, const DeviceGeometry& geometry, CoolingScenario scenario) {
    const auto& g = mesh.nodes;
    mesh.fixed.assign(g.size(), 0);
    if (scenario != CoolingScenario::BC1 && scenario != CoolingScenario::BC2) return;
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) mesh.fixed[g.index(i, j, 0)] = 1;
    if (scenario == CoolingScenario::BC1) return;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const auto c = g.ijk(idx);
        bool boundary = false;
        for (int d = 0; d < 3; ++d) boundary = boundary || c[d] == 0 || c[d] == g.n[d] - 1;
        if (!boundary) continue;
        const int r = geometry.region_at(g.position(idx));
        if (r >= 0 && geometry.regions[std::size_t(r)].role == RegionRole::Gate) mesh.fixed[idx] = 1;
    }
}

namespace {

using Matrix24 = Eigen::Matrix<double, 24, 24>;
using Vector24 = Eigen::Matrix<double, 24, 1>;

/// Element stiffness and thermal load of an axis-aligned hexahedron, 2x2x2 Gauss.
void hex_element(const Vec3& h, const Matrix6& C_tensor, const Vector6& eps_th, Matrix24& Ke, Vector24& Fe) {
    Matrix6 C = C_tensor;
    C.rightCols<3>() *= 0.5;  // engineering shear strain input
    Ke.setZero();
    Fe.setZero();
    const double gp = 1.0 / std::sqrt(3.0);
    const double detJ = h.prod() / 8.0;
    Vector6 eth = eps_th;  // normal only, engineering == tensor
    for (int gx = 0; gx < 2; ++gx)
        for (int gy = 0; gy < 2; ++gy)
            for (int gz = 0; gz < 2; ++gz) {
                const double xi[3] = {gx ? gp : -gp, gy ? gp : -gp, gz ? gp : -gp};
                Eigen::Matrix<double, 6, 24> B = Eigen::Matrix<double, 6, 24>::Zero();
                for (int a = 0; a < 8; ++a) {
                    const int s[3] = {(a >> 2) & 1 ? 1 : -1, (a >> 1) & 1 ? 1 : -1, a & 1 ? 1 : -1};
                    double f[3], df[3];
                    for (int d = 0; d < 3; ++d) {
                        f[d] = 0.5 * (1 + s[d] * xi[d]);
                        df[d] = 0.5 * s[d] * 2.0 / h[d];
                    }
                    const double dx = df[0] * f[1] * f[2], dy = f[0] * df[1] * f[2], dz = f[0] * f[1] * df[2];
                    B(0, 3 * a) = dx;
                    B(1, 3 * a + 1) = dy;
                    B(2, 3 * a + 2) = dz;
                    B(3, 3 * a) = dy;
                    B(3, 3 * a + 1) = dx;
                    B(4, 3 * a) = dz;
                    B(4, 3 * a + 2) = dx;
                    B(5, 3 * a + 1) = dz;
                    B(5, 3 * a + 2) = dy;
                }
                Ke.noalias() += detJ * B.transpose() * C * B;
                Fe.noalias() += detJ * B.transpose() * (C * eth);
            }
    Ke = (0.5 * (Ke + Ke.transpose())).eval();
}

}  // namespace

StiffnessSystem assemble_thermoelastic(const ElasticMesh& mesh, const ElasticityConfig& config) {
    const auto& g = mesh.nodes;
    const long N = long(g.size());
    const long ndof = 3 * N;

    // Sparsity: each node couples to its (up to) 27 lattice neighbours.
    std::vector<std::array<int, 27>> rank(static_cast<std::size_t>(N));
    Eigen::SparseMatrix<double, Eigen::RowMajor> K(ndof, ndof);
    Eigen::VectorXi per_row(ndof);
    for (long idx = 0; idx < N; ++idx) {
        const auto c = g.ijk(std::size_t(idx));
        int cnt = 0;
        for (int o = 0; o < 27; ++o) {
            const int di = o / 9 - 1, dj = (o / 3) % 3 - 1, dk = o % 3 - 1;
            if (g.contains(c[0] + di, c[1] + dj, c[2] + dk)) rank[std::size_t(idx)][o] = cnt++;
            else rank[std::size_t(idx)][o] = -1;
        }
        per_row.segment<3>(3 * idx).setConstant(3 * cnt);
    }
    K.reserve(per_row);
    for (long idx = 0; idx < N; ++idx) {
        const auto c = g.ijk(std::size_t(idx));
        for (int p = 0; p < 3; ++p)
            for (int o = 0; o < 27; ++o) {
                if (rank[std::size_t(idx)][o] < 0) continue;
                const long nb = long(g.index(c[0] + o / 9 - 1, c[1] + (o / 3) % 3 - 1, c[2] + o % 3 - 1));
                for (int q = 0; q < 3; ++q) K.insert(3 * idx + p, 3 * nb + q) = 0.0;
            }
    }
    K.makeCompressed();

    StiffnessSystem sys;
    sys.F_th = Eigen::VectorXd::Zero(ndof);
    const int nmat = int(mesh.materials.size());
    std::vector<Matrix24> Ke(static_cast<std::size_t>(nmat));
    std::vector<Vector24> Fe(static_cast<std::size_t>(nmat));
    std::vector<char> used(static_cast<std::size_t>(nmat), 0);
    for (int m : mesh.cell_material) used[std::size_t(m)] = 1;
    for (int m = 0; m < nmat; ++m) {
        if (!used[std::size_t(m)]) continue;
        const Vector6 eth = thermal_strain_vector(mesh.materials.at(m).thermal_alpha, config.T_rt, config.T_cool);
        hex_element(g.spacing, mesh.stiffness(m), eth, Ke[std::size_t(m)], Fe[std::size_t(m)]);
    }

    double* val = K.valuePtr();
    const auto* outer = K.outerIndexPtr();
    for (int i = 0; i + 1 < g.n[0]; ++i)
        for (int j = 0; j + 1 < g.n[1]; ++j)
            for (int k = 0; k + 1 < g.n[2]; ++k) {
                const int m = mesh.cell_material[mesh.cell_index(i, j, k)];
                const Matrix24& ke = Ke[std::size_t(m)];
                const Vector24& fe = Fe[std::size_t(m)];
                std::array<long, 8> node{};
                for (int a = 0; a < 8; ++a) node[a] = long(g.index(i + ((a >> 2) & 1), j + ((a >> 1) & 1), k + (a & 1)));
                for (int a = 0; a < 8; ++a) {
                    for (int p = 0; p < 3; ++p) {
                        sys.F_th[3 * node[a] + p] += fe[3 * a + p];
                        const long row = 3 * node[a] + p;
                        for (int b = 0; b < 8; ++b) {
                            const int o = (((b >> 2) & 1) - ((a >> 2) & 1) + 1) * 9 +
                                          (((b >> 1) & 1) - ((a >> 1) & 1) + 1) * 3 + ((b & 1) - (a & 1) + 1);
                            const int r = rank[std::size_t(node[a])][o];
                            double* dst = val + outer[row] + 3 * r;
                            for (int q = 0; q < 3; ++q) dst[q] += ke(3 * a + p, 3 * b + q);
                        }
                    }
                }
            }
    sys.K = std::move(K);
    sys.fixed_dof.assign(std::size_t(ndof), 0);
    for (long idx = 0; idx < N; ++idx)
        if (mesh.fixed[std::size_t(idx)])
            for (int p = 0; p < 3; ++p) sys.fixed_dof[std::size_t(3 * idx + p)] = 1;
    return sys;
}

DisplacementField solve_displacement(const StiffnessSystem& system, const Grid& grid, double tol) {
    const long ndof = system.K.rows();
    std::vector<long> map(static_cast<std::size_t>(ndof), -1);
    long nfree = 0;
    for (long i = 0; i < ndof; ++i)
        if (!system.fixed_dof[std::size_t(i)]) map[std::size_t(i)] = nfree++;
    if (nfree == ndof) throw InvalidInput("floating structure: no displacement constraint applied");

    DisplacementField out;
    out.grid = grid;
    out.u = Eigen::VectorXd::Zero(ndof);
    if (nfree == 0) return out;

    // Reduced system, lower triangle only, column-major for the solvers.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::size_t(system.K.nonZeros() / 2 + ndof));
    Eigen::VectorXd b(nfree);
    for (long r = 0; r < ndof; ++r) {
        const long rr = map[std::size_t(r)];
        if (rr < 0) continue;
        b[rr] = system.F_th[r];
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(system.K, r); it; ++it) {
            const long cc = map[std::size_t(it.col())];
            if (cc < 0 || cc > rr) continue;
            trip.emplace_back(rr, cc, it.value());
        }
    }
    Eigen::SparseMatrix<double> Kr(nfree, nfree);
    Kr.setFromTriplets(trip.begin(), trip.end());
    trip.clear();
    trip.shrink_to_fit();

    const double bnorm = b.norm();
    if (bnorm == 0.0) return out;
    Eigen::VectorXd x;
    std::vector<double> history;
    if (nfree <= 300000) {
        Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt(Kr);
        if (llt.info() != Eigen::Success)
            throw InvalidInput("stiffness matrix not positive definite: structure is floating or degenerate");
        x = llt.solve(b);
        Eigen::VectorXd r = b - Kr.selfadjointView<Eigen::Lower>() * x;
        // One step of iterative refinement keeps the residual well below 1e-10.
        x += llt.solve(r);
        r = b - Kr.selfadjointView<Eigen::Lower>() * x;
        history.push_back(r.norm() / bnorm);
    } else {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::IncompleteCholesky<double>> cg;
        cg.setTolerance(tol * 0.5);
        cg.setMaxIterations(20000);
        cg.compute(Kr);
        if (cg.info() != Eigen::Success) throw InvalidInput("preconditioner construction failed");
        x = cg.solve(b);
        history.push_back(cg.error());
    }
    const double rel = history.back();
    if (!(rel <= tol)) throw ConvergenceError("displacement solve did not reach the residual tolerance", history);
    for (long i = 0; i < ndof; ++i)
        if (map[std::size_t(i)] >= 0) out.u[i] = x[map[std::size_t(i)]];
    out.residual_history = std::move(history);
    return out;
}

StrainField strain_from_displacement(const DisplacementField& field) {
    const auto& g = field.grid;
    StrainField eps;
    eps.grid = g;
    eps.values.resize(g.size());
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const auto c = g.ijk(idx);
        Eigen::Matrix3d grad;  // grad(a, b) = d u_b / d x_a
        for (int a = 0; a < 3; ++a) {
            auto cp = c, cm = c;
            double h = g.spacing[a];
            if (g.n[a] == 1) {
                grad.row(a).setZero();
                continue;
            }
            if (c[a] == 0) {
                cp[a] += 1;
            } else if (c[a] == g.n[a] - 1) {
                cm[a] -= 1;
            } else {
                cp[a] += 1;
                cm[a] -= 1;
                h *= 2;
            }
            grad.row(a) = (field.at(g.index(cp[0], cp[1], cp[2])) - field.at(g.index(cm[0], cm[1], cm[2]))).transpose() / h;
        }
        const Eigen::Matrix3d e = 0.5 * (grad + grad.transpose());
        eps.values[idx] = {e(0, 0), e(1, 1), e(2, 2), e(0, 1), e(0, 2), e(1, 2)};
    }
    return eps;
}

StressField stress_from_strain(const Matrix6& C, const StrainField& eps, const Vector6& eps_th) {
    StressField s;
    s.grid = eps.grid;
    s.values.resize(eps.values.size());
    for (std::size_t i = 0; i < eps.values.size(); ++i) {
        Vector6 e = Eigen::Map<const Vector6>(eps.values[i].data()) - eps_th;
        Vector6 sig = C * e * 1e9;
        for (int q = 0; q < 6; ++q) s.values[i][q] = sig[q];
    }
    return s;
}

StressField stress_field(const ElasticMesh& mesh, const DeviceGeometry* geometry, const StrainField& eps,
                         const ElasticityConfig& config) {
    const auto& g = mesh.nodes;
    StressField s;
    s.grid = g;
    s.values.resize(g.size());
    std::vector<Matrix6> C(mesh.materials.size());
    std::vector<Vector6> eth(mesh.materials.size());
    for (std::size_t m = 0; m < mesh.materials.size(); ++m) {
        C[m] = mesh.stiffness(int(m));
        eth[m] = thermal_strain_vector(mesh.materials.at(int(m)).thermal_alpha, config.T_rt, config.T_cool);
    }
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        int m;
        if (geometry) {
            const int r = geometry->region_at(g.position(idx));
            m = mesh.materials.index_of(geometry->regions[std::size_t(r)].material);
        } else {
            auto c = g.ijk(idx);
            for (int d = 0; d < 3; ++d) c[d] = std::min(c[d], g.n[d] - 2);
            m = mesh.cell_material[mesh.cell_index(c[0], c[1], c[2])];
        }
        const Vector6 e = Eigen::Map<const Vector6>(eps.values[idx].data()) - eth[std::size_t(m)];
        const Vector6 sig = C[std::size_t(m)] * e * 1e9;
        for (int q = 0; q < 6; ++q) s.values[idx][q] = sig[q];
    }
    return s;
}

StrainField sample_strain_to_fd(const StrainField& eps, const Grid& fd) {
    StrainField out;
    out.grid = fd;
    out.values.resize(fd.size());
    for (std::size_t idx = 0; idx < fd.size(); ++idx) {
        const Vec3 p = fd.position(idx);
        try {
            out.values[idx] = eps.interpolate(p);
        } catch (const InvalidInput&) {
            throw InvalidInput("FD node at (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ", " +
                               std::to_string(p.z()) + ") nm lies outside the elastic mesh");
        }
    }
    return out;
}

ElasticityResult run_cooldown(const DeviceGeometry& geometry, const Vec3& fd_spacing, const ElasticityConfig& config) {
    config.validate();
    if (config.scenario != CoolingScenario::BC1 && config.scenario != CoolingScenario::BC2)
        throw InvalidInput("cool-down run needs scenario bc1 or bc2");
    const DeviceGeometry ext = extend_lateral(geometry, config.lateral_extension);
    ElasticityResult res;
    res.mesh = make_elastic_mesh(ext, fd_spacing * double(config.coarsen));
    apply_scenario(res.mesh, ext, config.scenario);
    const StiffnessSystem sys = assemble_thermoelastic(res.mesh, config);
    res.displacement = solve_displacement(sys, res.mesh.nodes, config.tol);
    res.strain = strain_from_displacement(res.displacement);
    res.stress = stress_field(res.mesh, &ext, res.strain, config);
    return res;
}

}  // namespace holespin
