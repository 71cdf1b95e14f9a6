#include "holespin/hamiltonian.hpp"

#include "holespin/constants.hpp"
#include "holespin/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace holespin {

KpParameters KpParameters::from_material(const MaterialRecord& m) {
    if (m.role != MaterialRole::Semiconductor)
        throw InvalidInput("material '" + m.name + "' carries no k.p parameters");
    KpParameters p;
    p.gamma1 = m.gamma1;
    p.gamma2 = m.gamma2;
    p.gamma3 = m.gamma3;
    p.kappa = m.kappa;
    p.delta0 = m.delta0_SO;
    return p;
}

void KpParameters::validate() const {
    for (double v : {gamma1, gamma2, gamma3, kappa, delta0})
        if (!std::isfinite(v)) throw InvalidInput("k.p parameters must be finite");
    if (delta0 < 0) throw InvalidInput("split-off energy must be non-negative");
}

double KpParameters::L() const { return units::hbar2_2m0 * (gamma1 + 4 * gamma2); }
double KpParameters::M() const { return units::hbar2_2m0 * (gamma1 - 2 * gamma2); }
double KpParameters::N() const { return units::hbar2_2m0 * 6 * gamma3; }

namespace basis {

namespace {

struct Tables {
    Block6 U, Udag;
    std::array<Block6, 3> J, L, sigma;

    Tables() {
        const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0), s6 = std::sqrt(6.0);
        const cplx i(0, 1);
        U.setZero();
        // Rows X up, Y up, Z up, X down, Y down, Z down.
        U(0, 0) = -1.0 / s2;
        U(1, 0) = -i / s2;
        U(2, 1) = 2.0 / s6;
        U(3, 1) = -1.0 / s6;
        U(4, 1) = -i / s6;
        U(0, 2) = 1.0 / s6;
        U(1, 2) = -i / s6;
        U(5, 2) = 2.0 / s6;
        U(3, 3) = 1.0 / s2;
        U(4, 3) = -i / s2;
        U(2, 4) = 1.0 / s3;
        U(3, 4) = 1.0 / s3;
        U(4, 4) = i / s3;
        U(0, 5) = 1.0 / s3;
        U(1, 5) = -i / s3;
        U(5, 5) = -1.0 / s3;
        Udag = U.adjoint();

        Eigen::Matrix3cd l[3];
        for (auto& m : l) m.setZero();
        l[0](1, 2) = -i;
        l[0](2, 1) = i;
        l[1](0, 2) = i;
        l[1](2, 0) = -i;
        l[2](0, 1) = -i;
        l[2](1, 0) = i;
        Eigen::Matrix2cd s[3];
        s[0] << 0, 1, 1, 0;
        s[1] << 0, -i, i, 0;
        s[2] << 1, 0, 0, -1;
        for (int a = 0; a < 3; ++a) {
            L[a].setZero();
            sigma[a].setZero();
            for (int sp = 0; sp < 2; ++sp) L[a].block<3, 3>(3 * sp, 3 * sp) = l[a];
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q)
                    for (int o = 0; o < 3; ++o) sigma[a](3 * p + o, 3 * q + o) = s[a](p, q);
        }

        const double r3 = std::sqrt(3.0) / 2.0;
        for (auto& m : J) m.setZero();
        // J = 3/2 block, m = 3/2, 1/2, -1/2, -3/2.
        const double jp[3] = {r3, 1.0, r3};
        for (int k = 0; k < 3; ++k) {
            J[0](k, k + 1) = J[0](k + 1, k) = jp[k];
            J[1](k, k + 1) = -i * jp[k];
            J[1](k + 1, k) = i * jp[k];
        }
        J[2].diagonal().head<4>() << 1.5, 0.5, -0.5, -1.5;
        J[0](4, 5) = J[0](5, 4) = 0.5;
        J[1](4, 5) = -0.5 * i;
        J[1](5, 4) = 0.5 * i;
        J[2](4, 4) = 0.5;
        J[2](5, 5) = -0.5;
    }
};

const Tables& tables() {
    static const Tables t;
    return t;
}

}  // namespace

const Block6& dkk_to_so() { return tables().U; }
const Block6& J(int axis) { return tables().J.at(std::size_t(axis)); }
const Block6& L_dkk(int axis) { return tables().L.at(std::size_t(axis)); }
const Block6& sigma_dkk(int axis) { return tables().sigma.at(std::size_t(axis)); }

Block6 orbital(const Eigen::Matrix3cd& o) {
    Block6 b = Block6::Zero();
    b.topLeftCorner<3, 3>() = o;
    b.bottomRightCorner<3, 3>() = o;
    return b;
}

Block6 to_so(const Block6& dkk) { return tables().Udag * dkk * tables().U; }

const char* label(int state) {
    static const char* names[6] = {"|3/2,+3/2>", "|3/2,+1/2>", "|3/2,-1/2>", "|3/2,-3/2>", "|1/2,+1/2>",
                                   "|1/2,-1/2>"};
    return names[state];
}

}  // namespace basis

PikusBirPoint pikus_bir(const std::array<double, 6>& e, double av, double b, double d) {
    PikusBirPoint p;
    const cplx i(0, 1);
    p.P = av * (e[0] + e[1] + e[2]);
    p.Q = -0.5 * b * (e[0] + e[1] - 2 * e[2]);
    p.R = 0.5 * std::sqrt(3.0) * b * (e[0] - e[1]) - i * d * e[3];
    p.S = -d * (e[4] - i * e[5]);
    return p;
}

Block6 lk_template(double P, double Q, cplx R, cplx S, double delta) {
    const double s2 = std::sqrt(2.0), s32 = std::sqrt(1.5);
    const cplx Rc = std::conj(R), Sc = std::conj(S);
    Block6 H;
    H << P + Q, -S, R, 0, -S / s2, s2 * R,
        -Sc, P - Q, 0, R, -s2 * Q, s32 * S,
        Rc, 0, P - Q, S, s32 * Sc, s2 * Q,
        0, Rc, Sc, P + Q, -s2 * Rc, -Sc / s2,
        -Sc / s2, -s2 * Q, s32 * S, -s2 * R, P + delta, 0,
        s2 * Rc, s32 * Sc, s2 * Q, -S / s2, 0, P + delta;
    return H;
}

CrystalFrame CrystalFrame::from_axes(const Vec3& x, const Vec3& y, const Vec3& z) {
    CrystalFrame f;
    f.R.row(0) = x.transpose();
    f.R.row(1) = y.transpose();
    f.R.row(2) = z.transpose();
    if ((f.R * f.R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
        throw InvalidInput("crystal axes must be orthonormal (normalise the direction vectors)");
    if (f.R.determinant() < 0) throw InvalidInput("crystal axes must form a right-handed triple");
    return f;
}

bool CrystalFrame::is_identity(double tol) const {
    return (R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol;
}

namespace {

Tensor4 cubic_tensor(double l, double m, double n) {
    Tensor4 t{};
    for (int a = 0; a < 3; ++a) {
        for (int i = 0; i < 3; ++i) t[std::size_t(t4(a, a, i, i))] = (a == i) ? l : m;
        for (int b = 0; b < 3; ++b) {
            if (a == b) continue;
            t[std::size_t(t4(a, b, a, b))] = 0.5 * n;
            t[std::size_t(t4(a, b, b, a))] = 0.5 * n;
        }
    }
    return t;
}

}  // namespace

Tensor4 rotate_tensor(const Tensor4& t, const Eigen::Matrix3d& R) {
    // Four successive single-index contractions.
    Tensor4 cur = t;
    for (int slot = 0; slot < 4; ++slot) {
        Tensor4 next{};
        for (int idx = 0; idx < 81; ++idx) {
            int digits[4] = {idx / 27, (idx / 9) % 3, (idx / 3) % 3, idx % 3};
            double s = 0;
            const int keep = digits[slot];
            for (int p = 0; p < 3; ++p) {
                digits[slot] = p;
                s += R(keep, p) * cur[std::size_t(((digits[0] * 3 + digits[1]) * 3 + digits[2]) * 3 + digits[3])];
            }
            next[std::size_t(idx)] = s;
        }
        cur = next;
    }
    return cur;
}

Tensor4 kinetic_tensor(const KpParameters& p, const CrystalFrame& frame) {
    Tensor4 t = cubic_tensor(p.L(), p.M(), p.N());
    return frame.is_identity() ? t : rotate_tensor(t, frame.R);
}

Tensor4 deformation_tensor(double av, double b, double d, const CrystalFrame& frame) {
    Tensor4 t = cubic_tensor(av - 2 * b, av + b, -std::sqrt(3.0) * d);
    return frame.is_identity() ? t : rotate_tensor(t, frame.R);
}

namespace {

Eigen::Matrix3cd contract(const Tensor4& t, const Eigen::Matrix3d& x) {
    Eigen::Matrix3cd o = Eigen::Matrix3cd::Zero();
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double s = 0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) s += t[std::size_t(t4(a, b, i, j))] * x(i, j);
            o(a, b) = s;
        }
    return o;
}

Eigen::Matrix3d strain_matrix(const std::array<double, 6>& e) {
    Eigen::Matrix3d m;
    m << e[0], e[3], e[4], e[3], e[1], e[5], e[4], e[5], e[2];
    return m;
}

Block6 spin_orbit_block(double delta) {
    Block6 b = Block6::Zero();
    b(4, 4) = b(5, 5) = delta;
    return b;
}

}  // namespace

Block6 zeeman_block(const Vec3& B, double kappa) {
    Block6 z = Block6::Zero();
    for (int a = 0; a < 3; ++a) z += B[a] * basis::J(a);
    return 2.0 * kappa * PhysicalConstants::bohr_magneton_muB * z;
}

Block6 bulk_hamiltonian(const KpParameters& p, const Vec3& k, const std::array<double, 6>& eps, double av,
                        double b, double d, const Vec3& B, const CrystalFrame& frame) {
    const Eigen::Matrix3d kk = k * k.transpose();
    Eigen::Matrix3cd orb = contract(kinetic_tensor(p, frame), kk) +
                           contract(deformation_tensor(av, b, d, frame), strain_matrix(eps));
    return basis::to_so(basis::orbital(orb)) + spin_orbit_block(p.delta0) + zeeman_block(B, p.kappa);
}

Vec3 vector_potential(const MagneticFieldSpec& spec, const Vec3& r) {
    const Vec3 q = r - spec.gauge_origin;
    const Vec3& B = spec.B;
    return -Vec3(B.z() * q.y(), 0.0, B.y() * q.x() - B.x() * q.y());
}

const std::array<std::array<int, 3>, kStencil> kOffsets = {{
    {0, 0, 0},
    {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1},
    {1, 1, 0}, {1, -1, 0}, {-1, 1, 0}, {-1, -1, 0},
    {1, 0, 1}, {1, 0, -1}, {-1, 0, 1}, {-1, 0, -1},
    {0, 1, 1}, {0, 1, -1}, {0, -1, 1}, {0, -1, -1},
}};

std::shared_ptr<const ChannelLayout> ChannelLayout::build(const Grid& grid, const RegionMap& map) {
    return from_nodes(grid, map.channel_nodes);
}

std::shared_ptr<const ChannelLayout> ChannelLayout::from_nodes(const Grid& grid, std::vector<std::size_t> nodes) {
    auto lay = std::make_shared<ChannelLayout>();
    lay->grid = grid;
    if (nodes.empty()) throw InvalidInput("empty channel mask");
    if (!std::is_sorted(nodes.begin(), nodes.end())) throw InvalidInput("channel nodes must be ascending");
    lay->nodes = std::move(nodes);
    lay->channel_index.assign(grid.size(), -1);
    for (std::size_t c = 0; c < lay->nodes.size(); ++c) {
        if (lay->nodes[c] >= grid.size()) throw InvalidInput("channel node outside the grid");
        lay->channel_index[lay->nodes[c]] = long(c);
    }
    const std::size_t n = lay->nodes.size();
    lay->neighbor.resize(n);
    lay->rank.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        const auto ijk = grid.ijk(lay->nodes[c]);
        std::array<std::pair<int, int>, kStencil> present{};
        int cnt = 0;
        for (int o = 0; o < kStencil; ++o) {
            const int i = ijk[0] + kOffsets[o][0], j = ijk[1] + kOffsets[o][1], k = ijk[2] + kOffsets[o][2];
            int nb = -1;
            if (grid.contains(i, j, k)) nb = int(lay->channel_index[grid.index(i, j, k)]);
            lay->neighbor[c][o] = nb;
            lay->rank[c][o] = -1;
            if (nb >= 0) present[std::size_t(cnt++)] = {nb, o};
        }
        std::sort(present.begin(), present.begin() + cnt);
        for (int r = 0; r < cnt; ++r) lay->rank[c][present[std::size_t(r)].second] = r;
    }
    return lay;
}

Block6 SparseHamiltonian::block(std::size_t node, int offset) const {
    Block6 b = Block6::Zero();
    const int r = layout->rank[node][offset];
    if (r < 0) return b;
    const auto* outer = matrix.outerIndexPtr();
    const cplx* val = matrix.valuePtr();
    for (int a = 0; a < 6; ++a)
        for (int c = 0; c < 6; ++c) b(a, c) = val[outer[6 * node + a] + 6 * r + c];
    return b;
}

void SparseHamiltonian::add_block(std::size_t node, int offset, const Block6& b) {
    const int r = layout->rank[node][offset];
    if (r < 0) throw InvalidInput("stencil neighbour outside the channel mask");
    const auto* outer = matrix.outerIndexPtr();
    cplx* val = matrix.valuePtr();
    for (int a = 0; a < 6; ++a)
        for (int c = 0; c < 6; ++c) val[outer[6 * node + a] + 6 * r + c] += b(a, c);
}

double SparseHamiltonian::hermiticity_error() const {
    const SpMatC adj = matrix.adjoint();
    const SpMatC diff = matrix - adj;
    double dmax = 0, hmax = 0;
    for (long k = 0; k < diff.nonZeros(); ++k) dmax = std::max(dmax, std::abs(diff.valuePtr()[k]));
    for (long k = 0; k < matrix.nonZeros(); ++k) hmax = std::max(hmax, std::abs(matrix.valuePtr()[k]));
    return hmax > 0 ? dmax / hmax : 0.0;
}

double SparseHamiltonian::spectrum_lower_bound() const {
    double lo = std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Block6> es;
    for (std::size_t c = 0; c < layout->size(); ++c) {
        Block6 d = block(c, 0) - kinetic_onsite;
        d = 0.5 * (d + d.adjoint()).eval();
        es.compute(d, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues()[0]);
    }
    return lo;
}

void SparseHamiltonian::dump_triplets(const std::string& path) const {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "w"), &std::fclose);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    for (long r = 0; r < matrix.rows(); ++r)
        for (SpMatC::InnerIterator it(matrix, r); it; ++it)
            if (it.value() != cplx(0, 0))
                std::fprintf(f.get(), "%ld %ld %.17g %.17g\n", r, long(it.col()), it.value().real(), it.value().imag());
}

SparseHamiltonian assemble_lk(const Grid& grid, const RegionMap& map, const KpParameters& params,
                              const std::vector<double>& potential, const CrystalFrame& frame) {
    return assemble_lk(ChannelLayout::build(grid, map), params, potential, frame);
}

SparseHamiltonian assemble_lk(std::shared_ptr<const ChannelLayout> layout, const KpParameters& params,
                              const std::vector<double>& potential, const CrystalFrame& frame) {
    params.validate();
    if (!layout || layout->size() == 0) throw InvalidInput("empty channel mask");
    if (!potential.empty() && potential.size() != layout->grid.size())
        throw InvalidInput("potential size does not match the grid");
    const std::size_t n = layout->size();
    const long dim = long(6 * n);

    SparseHamiltonian H;
    H.layout = layout;
    H.params = params;
    H.frame = frame;
    H.kinetic = kinetic_tensor(params, frame);

    Eigen::VectorXi per_row(dim);
    for (std::size_t c = 0; c < n; ++c) {
        int cnt = 0;
        for (int o = 0; o < kStencil; ++o) cnt += layout->neighbor[c][o] >= 0;
        per_row.segment<6>(long(6 * c)).setConstant(6 * cnt);
    }
    H.matrix.resize(dim, dim);
    H.matrix.reserve(per_row);
    std::vector<int> cols;
    for (std::size_t c = 0; c < n; ++c) {
        cols.clear();
        for (int o = 0; o < kStencil; ++o)
            if (layout->neighbor[c][o] >= 0) cols.push_back(layout->neighbor[c][o]);
        std::sort(cols.begin(), cols.end());
        for (int a = 0; a < 6; ++a)
            for (int nb : cols)
                for (int b = 0; b < 6; ++b) H.matrix.insert(long(6 * c + a), long(6 * nb + b)) = cplx(0, 0);
    }
    H.matrix.makeCompressed();

    const Vec3 h = layout->grid.spacing;
    const Tensor4& D = H.kinetic;
    std::array<Block6, kStencil> kin;
    {
        Eigen::Matrix3d x = Eigen::Matrix3d::Zero();
        for (int i = 0; i < 3; ++i) x(i, i) = 2.0 / (h[i] * h[i]);
        kin[0] = basis::to_so(basis::orbital(contract(D, x)));
        for (int o = 1; o < kStencil; ++o) {
            const auto& off = kOffsets[std::size_t(o)];
            x.setZero();
            int axes[2], s[2], na = 0;
            for (int d = 0; d < 3; ++d)
                if (off[d] != 0) {
                    axes[na] = d;
                    s[na++] = off[d];
                }
            if (na == 1) {
                x(axes[0], axes[0]) = -1.0 / (h[axes[0]] * h[axes[0]]);
            } else {
                const double v = -double(s[0] * s[1]) / (4.0 * h[axes[0]] * h[axes[1]]);
                x(axes[0], axes[1]) = v;
                x(axes[1], axes[0]) = v;
            }
            kin[std::size_t(o)] = basis::to_so(basis::orbital(contract(D, x)));
        }
    }
    H.kinetic_onsite = kin[0];
    const Block6 so = spin_orbit_block(params.delta0);
    for (std::size_t c = 0; c < n; ++c) {
        for (int o = 0; o < kStencil; ++o)
            if (layout->neighbor[c][o] >= 0) H.add_block(c, o, kin[std::size_t(o)]);
        Block6 onsite = so;
        if (!potential.empty()) onsite.diagonal().array() += potential[layout->nodes[c]];
        H.add_block(c, 0, onsite);
    }
    return H;
}

PikusBirTerms pikus_bir_terms(const StrainField& eps, const ChannelLayout& layout, double av, double b, double d) {
    if (!eps.grid.same_as(layout.grid, 1e-9)) throw InvalidInput("strain field grid does not match the FD grid");
    PikusBirTerms t;
    t.nodes.reserve(layout.size());
    for (std::size_t node : layout.nodes) t.nodes.push_back(pikus_bir(eps.values[node], av, b, d));
    return t;
}

void add_strain(SparseHamiltonian& H, const PikusBirTerms& pb) {
    if (pb.nodes.size() != H.layout->size()) throw InvalidInput("Pikus-Bir terms do not match the channel");
    for (std::size_t c = 0; c < pb.nodes.size(); ++c) {
        const auto& p = pb.nodes[c];
        if (p.P == 0 && p.Q == 0 && p.R == cplx(0, 0) && p.S == cplx(0, 0)) continue;
        H.add_block(c, 0, lk_template(p.P, p.Q, p.R, p.S, 0.0));
    }
}

void add_strain_tensor(SparseHamiltonian& H, const StrainField& eps, double av, double b, double d) {
    if (!eps.grid.same_as(H.layout->grid, 1e-9)) throw InvalidInput("strain field grid does not match the FD grid");
    const Tensor4 xi = deformation_tensor(av, b, d, H.frame);
    for (std::size_t c = 0; c < H.layout->size(); ++c) {
        const auto& e = eps.values[H.layout->nodes[c]];
        if (std::all_of(e.begin(), e.end(), [](double v) { return v == 0.0; })) continue;
        H.add_block(c, 0, basis::to_so(basis::orbital(contract(xi, strain_matrix(e)))));
    }
}

void add_strain_field(SparseHamiltonian& H, const StrainField& eps, double av, double b, double d) {
    if (H.frame.is_identity()) add_strain(H, pikus_bir_terms(eps, *H.layout, av, b, d));
    else add_strain_tensor(H, eps, av, b, d);
}

void add_zeeman(SparseHamiltonian& H, const MagneticFieldSpec& B, double kappa) {
    if (B.B.isZero(0)) return;
    const Block6 z = zeeman_block(B.B, kappa);
    for (std::size_t c = 0; c < H.layout->size(); ++c) H.add_block(c, 0, z);
}

void add_vector_potential(SparseHamiltonian& H, const MagneticFieldSpec& B) {
    if (B.B.isZero(0)) return;
    const auto& lay = *H.layout;
    const Vec3 h = lay.grid.spacing;
    const double T1 = units::e_over_hbar;
    const cplx i(0, 1);
    for (std::size_t c = 0; c < lay.size(); ++c) {
        const Vec3 r = lay.position(c);
        for (int o = 1; o <= 6; ++o) {
            if (lay.neighbor[c][o] < 0) continue;
            const int j = (o - 1) / 2;
            const double s = (o % 2 == 1) ? 1.0 : -1.0;
            Vec3 mid = r;
            mid[j] += 0.5 * s * h[j];
            const Vec3 A = vector_potential(B, mid);
            Eigen::Matrix3cd orb = Eigen::Matrix3cd::Zero();
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    double acc = 0;
                    for (int q = 0; q < 3; ++q) acc += H.kinetic[std::size_t(t4(a, b, q, j))] * A[q];
                    orb(a, b) = -i * s * T1 * acc / h[j];
                }
            H.add_block(c, o, basis::to_so(basis::orbital(orb)));
        }
    }
}

void add_magnetic(SparseHamiltonian& H, const MagneticFieldSpec& B) {
    add_zeeman(H, B, H.params.kappa);
    add_vector_potential(H, B);
}

}  // namespace holespin
