#include "support.hpp"

#include "holespin/constants.hpp"
#include "holespin/errors.hpp"
#include "holespin/hamiltonian.hpp"

#include <doctest.h>

using namespace holespin;
using testing::block_eigenvalues;
using testing::box_layout;
using testing::dense_eigenvalues;

namespace {

const MaterialRecord kSi = silicon();
const double kMuB = PhysicalConstants::bohr_magneton_muB;

Block6 oracle_6x6(const std::array<double, 6>& e, double delta) {
    return testing::textbook_6x6(e, kSi.def_pot_av, kSi.def_pot_b, kSi.def_pot_d, delta);
}

std::array<double, 6> random_strain(std::mt19937_64& rng, double scale = 3e-3) {
    std::uniform_real_distribution<double> U(-scale, scale);
    return {U(rng), U(rng), U(rng), U(rng), U(rng), U(rng)};
}

KpParameters decoupled() { return KpParameters::from_material(testing::decoupled_silicon()); }

double hh_weight(const Eigen::VectorXcd& v) { return std::norm(v[0]) + std::norm(v[3]); }
double lh_weight(const Eigen::VectorXcd& v) { return std::norm(v[1]) + std::norm(v[2]); }

Eigen::Matrix3cd dkk_orbital_part(const Block6& so) {
    const Block6& U = basis::dkk_to_so();
    const Block6 dkk = U * so * U.adjoint();
    return dkk.topLeftCorner<3, 3>();
}

}  // namespace

TEST_CASE("basis transformation and angular momentum algebra") {
    const Block6& U = basis::dkk_to_so();
    CHECK((U.adjoint() * U - Block6::Identity()).cwiseAbs().maxCoeff() < 1e-14);
    const cplx i(0, 1);
    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3, c = (a + 2) % 3;
        const Block6 comm = basis::J(a) * basis::J(b) - basis::J(b) * basis::J(a);
        CHECK((comm - i * basis::J(c)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((basis::J(a) - basis::J(a).adjoint()).cwiseAbs().maxCoeff() < 1e-15);
    }
    const Block6 J2 = basis::J(0) * basis::J(0) + basis::J(1) * basis::J(1) + basis::J(2) * basis::J(2);
    for (int s = 0; s < 4; ++s) CHECK(J2(s, s).real() == doctest::Approx(15.0 / 4));
    for (int s = 4; s < 6; ++s) CHECK(J2(s, s).real() == doctest::Approx(3.0 / 4));
    CHECK(basis::J(2)(0, 0).real() == doctest::Approx(1.5));
    CHECK(basis::J(2)(3, 3).real() == doctest::Approx(-1.5));
}

TEST_CASE("DKK constants carry the hbar^2/2m0 prefactor") {
    const KpParameters p = KpParameters::from_material(kSi);
    CHECK(p.L() == doctest::Approx(units::hbar2_2m0 * (4.285 + 4 * 0.339)));
    CHECK(p.M() == doctest::Approx(units::hbar2_2m0 * (4.285 - 2 * 0.339)));
    CHECK(p.N() == doctest::Approx(units::hbar2_2m0 * 6 * 1.21));
    KpParameters bad = p;
    bad.delta0 = -1;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("Pikus-Bir terms") {
    const double av = kSi.def_pot_av, b = kSi.def_pot_b, d = kSi.def_pot_d;
    const auto q = pikus_bir({0, 0, -2.5e-3, 0, 0, 0}, av, b, d);
    CHECK(q.Q == doctest::Approx(5.875e-3).epsilon(1e-14));
    CHECK(std::abs(q.Q - 5.875e-3) < 1e-17);
    const auto h = pikus_bir({-1e-3, -1e-3, -1e-3, 0, 0, 0}, av, b, d);
    CHECK(h.P == doctest::Approx(-7.38e-3).epsilon(1e-14));
    CHECK(std::abs(h.Q) < 1e-18);
    CHECK(std::abs(h.R) < 1e-18);
    CHECK(std::abs(h.S) == 0.0);
    const auto s = pikus_bir({0, 0, 0, 0, 0, 1e-3}, av, b, d);
    CHECK(std::abs(s.S) == doctest::Approx(5.32e-3).epsilon(1e-14));
    CHECK(s.S.imag() == doctest::Approx(d * 1e-3).epsilon(1e-14));
    CHECK(s.P == 0.0);
}

TEST_CASE("template matches the textbook 6x6 for random strain") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const auto e = random_strain(rng);
        const auto pb = pikus_bir(e, kSi.def_pot_av, kSi.def_pot_b, kSi.def_pot_d);
        const Block6 lib = lk_template(pb.P, pb.Q, pb.R, pb.S, kSi.delta0_SO);
        CHECK((lib - oracle_6x6(e, kSi.delta0_SO)).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("single-cell FD operator under uniform strain matches the dense oracles") {
    const auto lay = box_layout({1, 1, 1}, Vec3::Constant(1e7));
    const KpParameters p = KpParameters::from_material(kSi);
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        const auto e = random_strain(rng);
        SparseHamiltonian H = assemble_lk(lay, p, {});
        add_strain(H, pikus_bir_terms(StrainField::uniform(lay->grid, e), *lay, kSi.def_pot_av, kSi.def_pot_b,
                                      kSi.def_pot_d));
        const Eigen::VectorXd fd = dense_eigenvalues(H.matrix);
        const Eigen::VectorXd ref = block_eigenvalues(oracle_6x6(e, p.delta0));
        const Eigen::VectorXd tensor = block_eigenvalues(
            bulk_hamiltonian(p, Vec3::Zero(), e, kSi.def_pot_av, kSi.def_pot_b, kSi.def_pot_d));
        CHECK((fd - ref).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((tensor - ref).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("bulk ordering follows the sign of eps_zz") {
    const KpParameters p = KpParameters::from_material(kSi);
    auto ground = [&](double ezz) {
        const Block6 H = bulk_hamiltonian(p, Vec3::Zero(), {0, 0, ezz, 0, 0, 0}, kSi.def_pot_av, kSi.def_pot_b,
                                          kSi.def_pot_d);
        Eigen::SelfAdjointEigenSolver<Block6> es(H);
        Eigen::VectorXcd v0 = es.eigenvectors().col(0), v1 = es.eigenvectors().col(1);
        return std::pair{hh_weight(v0) + hh_weight(v1), lh_weight(v0) + lh_weight(v1)};
    };
    const auto [hh_c, lh_c] = ground(-2.5e-3);
    CHECK(lh_c > hh_c);
    const auto [hh_t, lh_t] = ground(3e-3);
    CHECK(hh_t > lh_t);
}

TEST_CASE("bulk Zeeman splittings of pure HH and LH doublets") {
    const double B = 0.1;
    const double av = kSi.def_pot_av, b = kSi.def_pot_b, d = kSi.def_pot_d;
    KpParameters p = KpParameters::from_material(kSi);
    const auto hh = block_eigenvalues(bulk_hamiltonian(p, Vec3::Zero(), {0, 0, 3e-3, 0, 0, 0}, av, b, d, Vec3(0, 0, B)));
    CHECK((hh[1] - hh[0]) == doctest::Approx(6 * 0.42 * kMuB * B).epsilon(1e-3));
    CHECK((hh[1] - hh[0]) * 1e6 == doctest::Approx(14.59).epsilon(1e-3));
    p.delta0 = 1e3;
    const auto lh = block_eigenvalues(bulk_hamiltonian(p, Vec3::Zero(), {0, 0, -2.5e-3, 0, 0, 0}, av, b, d, Vec3(0, 0, B)));
    CHECK((lh[1] - lh[0]) == doctest::Approx(2 * 0.42 * kMuB * B).epsilon(1e-3));
    CHECK((lh[1] - lh[0]) * 1e6 == doctest::Approx(4.86).epsilon(1e-3));
    CHECK(zeeman_block(Vec3::Zero(), -0.42).isZero(0));
}

TEST_CASE("decoupled 1D box reproduces the infinite-well energy") {
    const double L = 10.0, h = 0.5;
    const int n = int(std::lround(L / h)) - 1;
    const auto lay = box_layout({n, 1, 1}, Vec3(h, 1e4, 1e4));
    const KpParameters p = decoupled();
    const SparseHamiltonian H = assemble_lk(lay, p, {});
    const Eigen::VectorXd ev = dense_eigenvalues(H.matrix);
    const double analytic = p.gamma1 * units::hbar2_2m0 * units::pi * units::pi / (L * L);
    CHECK(analytic * 1e3 == doctest::Approx(16.1).epsilon(0.005));
    CHECK(ev[0] == doctest::Approx(analytic).epsilon(0.01));
    for (int s = 1; s < 4; ++s) CHECK(ev[s] == doctest::Approx(ev[0]).epsilon(1e-12));
    CHECK(ev[4] == doctest::Approx(4 * analytic).epsilon(0.02));
}

TEST_CASE("assembly invariants on a small box") {
    const auto lay = box_layout({4, 3, 3}, Vec3(0.5, 0.6, 0.4));
    const KpParameters p = KpParameters::from_material(kSi);
    const Grid& g = lay->grid;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-0.05, 0.05);
    std::vector<double> phi(g.size());
    for (auto& v : phi) v = U(rng);
    StrainField eps{g, {}};
    for (std::size_t n = 0; n < g.size(); ++n) eps.values.push_back(random_strain(rng));

    SparseHamiltonian H = assemble_lk(lay, p, phi);
    CHECK(H.hermiticity_error() <= 1e-13);
    add_strain_field(H, eps, kSi.def_pot_av, kSi.def_pot_b, kSi.def_pot_d);
    CHECK(H.hermiticity_error() <= 1e-13);

    SUBCASE("Kramers degeneracy at zero field") {
        const Eigen::VectorXd ev = dense_eigenvalues(H.matrix);
        double worst = 0;
        for (long s = 0; s + 1 < ev.size(); s += 2) worst = std::max(worst, ev[s + 1] - ev[s]);
        CHECK(worst <= 1e-10);
    }
    SUBCASE("constant potential shifts the spectrum") {
        std::vector<double> shifted = phi;
        for (auto& v : shifted) v += 0.037;
        SparseHamiltonian H2 = assemble_lk(lay, p, shifted);
        add_strain_field(H2, eps, kSi.def_pot_av, kSi.def_pot_b, kSi.def_pot_d);
        const Eigen::VectorXd d = dense_eigenvalues(H2.matrix) - dense_eigenvalues(H.matrix);
        CHECK((d.array() - 0.037).abs().maxCoeff() < 1e-12);
    }
    SUBCASE("template and tensor strain routes agree in the crystal frame") {
        SparseHamiltonian A = assemble_lk(lay, p, phi), T = assemble_lk(lay, p, phi);
        add_strain(A, pikus_bir_terms(eps, *lay, kSi.def_pot_av, kSi.def_pot_b, kSi.def_pot_d));
        add_strain_tensor(T, eps, kSi.def_pot_av, kSi.def_pot_b, kSi.def_pot_d);
        CHECK(Eigen::MatrixXcd(A.matrix - T.matrix).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("magnetic terms stay Hermitian, are linear in B and vanish at B = 0") {
        const Vec3 origin = lay->position(lay->size() / 2);
        SparseHamiltonian Z = H;
        add_magnetic(Z, {Vec3::Zero(), origin});
        CHECK(Eigen::MatrixXcd(Z.matrix - H.matrix).cwiseAbs().maxCoeff() == 0.0);
        const Vec3 B1(0.1, -0.05, 0.2), B2(-0.03, 0.07, 0.01);
        SparseHamiltonian H1 = H, H2 = H, H12 = H;
        add_zeeman(H1, {B1, origin}, p.kappa);
        CHECK(H1.hermiticity_error() <= 1e-13);
        add_vector_potential(H1, {B1, origin});
        CHECK(H1.hermiticity_error() <= 1e-13);
        add_magnetic(H2, {B2, origin});
        add_magnetic(H12, {B1 + B2, origin});
        const Eigen::MatrixXcd lin = Eigen::MatrixXcd(H12.matrix - H1.matrix - H2.matrix + H.matrix);
        CHECK(lin.cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("vector potential selects the field components of the gauge") {
    const auto lay = box_layout({3, 3, 3}, Vec3::Constant(0.5));
    const KpParameters p = KpParameters::from_material(kSi);
    const SparseHamiltonian H0 = assemble_lk(lay, p, {});
    const Vec3 origin = Vec3::Zero();
    const std::size_t node = lay->grid.index(0, 2, 1);
    auto hop = [&](const Vec3& B, int offset) {
        SparseHamiltonian H = H0;
        add_vector_potential(H, {B, origin});
        return dkk_orbital_part(H.block(node, offset) - H0.block(node, offset));
    };
    CHECK(vector_potential({Vec3(0.3, 0, 0), origin}, Vec3(1, 2, 3)).isApprox(Vec3(0, 0, 0.6)));
    CHECK(vector_potential({Vec3(0, 0, 0.3), origin}, Vec3(1, 2, 3)).isApprox(Vec3(-0.6, 0, 0)));
    CHECK(vector_potential({Vec3(0, 0.3, 0), origin}, Vec3(1, 2, 3)).isApprox(Vec3(0, 0, -0.3)));

    const Eigen::Matrix3cd bx = hop(Vec3(0.1, 0, 0), 1);  // +x hop, A = (0, 0, B_x y)
    CHECK(std::abs(bx(0, 2)) > 0.0);
    CHECK(std::abs(bx(2, 0)) > 0.0);
    const double sx = bx.cwiseAbs().maxCoeff();
    for (int a = 0; a < 3; ++a) CHECK(std::abs(bx(a, a)) < 1e-12 * sx);
    CHECK(std::abs(bx(0, 1)) + std::abs(bx(1, 2)) < 1e-12 * sx);

    const Eigen::Matrix3cd bz = hop(Vec3(0, 0, 0.1), 1);  // +x hop, A = (-B_z y, 0, 0)
    for (int a = 0; a < 3; ++a) CHECK(std::abs(bz(a, a)) > 0.0);
    CHECK(std::abs(bz(0, 1)) + std::abs(bz(0, 2)) + std::abs(bz(1, 2)) < 1e-12 * bz.cwiseAbs().maxCoeff());

    const Eigen::Matrix3cd bx_z = hop(Vec3(0.1, 0, 0), 5);  // +z hop sees A_z D_zz
    CHECK(std::abs(bx_z(2, 2)) > 0.0);
    CHECK(std::abs(bx_z(0, 2)) < 1e-12 * bx_z.cwiseAbs().maxCoeff());

    SparseHamiltonian H = H0;
    add_vector_potential(H, {Vec3::Zero(), origin});
    CHECK(Eigen::MatrixXcd(H.matrix - H0.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("crystal orientation") {
    const KpParameters p = KpParameters::from_material(kSi);
    const double av = kSi.def_pot_av, b = kSi.def_pot_b, d = kSi.def_pot_d;
    const double r = 1 / std::sqrt(2.0);
    const CrystalFrame f110 = CrystalFrame::from_axes(Vec3(r, r, 0), Vec3(-r, r, 0), Vec3(0, 0, 1));

    SUBCASE("identity axes leave the assembly unchanged") {
        const auto lay = box_layout({3, 3, 2}, Vec3::Constant(0.5));
        const CrystalFrame id = CrystalFrame::from_axes(Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ());
        CHECK(id.is_identity());
        const SparseHamiltonian A = assemble_lk(lay, p, {}), B = assemble_lk(lay, p, {}, id);
        CHECK(Eigen::MatrixXcd(A.matrix - B.matrix).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zone-centre spectrum under hydrostatic strain is rotation invariant") {
        const std::array<double, 6> hyd{-1e-3, -1e-3, -1e-3, 0, 0, 0};
        const auto ref = block_eigenvalues(bulk_hamiltonian(p, Vec3::Zero(), hyd, av, b, d));
        for (int t = 0; t < 5; ++t) {
            const Eigen::Matrix3d R =
                Eigen::Quaterniond(Eigen::Vector4d::Random()).normalized().toRotationMatrix();
            const CrystalFrame f = CrystalFrame::from_axes(R.row(0), R.row(1), R.row(2));
            const auto rot = block_eigenvalues(bulk_hamiltonian(p, Vec3::Zero(), hyd, av, b, d, Vec3::Zero(), f));
            CHECK((rot - ref).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
    SUBCASE("[110] channel keeps the eps_zz HH-LH splitting") {
        const std::array<double, 6> ezz{0, 0, -2.5e-3, 0, 0, 0};
        const auto a = block_eigenvalues(bulk_hamiltonian(p, Vec3::Zero(), ezz, av, b, d));
        const auto c = block_eigenvalues(bulk_hamiltonian(p, Vec3::Zero(), ezz, av, b, d, Vec3::Zero(), f110));
        CHECK((a[2] - a[0]) == doctest::Approx(c[2] - c[0]).epsilon(1e-12));
        CHECK((a - c).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("rotated kinetic tensor equals the crystal one at the rotated wave vector") {
        const Vec3 k_dev(0.3, -0.1, 0.2);
        const Vec3 k_cr = f110.R.transpose() * k_dev;
        const auto dev = block_eigenvalues(bulk_hamiltonian(p, k_dev, {}, av, b, d, Vec3::Zero(), f110));
        const auto cr = block_eigenvalues(bulk_hamiltonian(p, k_cr, {}, av, b, d));
        CHECK((dev - cr).cwiseAbs().maxCoeff() < 1e-14);
    }
    CHECK_THROWS_AS(CrystalFrame::from_axes(Vec3(1, 1, 0), Vec3(-1, 1, 0), Vec3(0, 0, 1)), InvalidInput);
    CHECK_THROWS_AS(CrystalFrame::from_axes(Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitZ()), InvalidInput);
}

TEST_CASE("layout and block bookkeeping") {
    const auto lay = box_layout({3, 2, 2}, Vec3::Constant(0.5));
    CHECK(lay->size() == 12);
    const std::size_t c = lay->grid.index(1, 0, 0);
    CHECK(lay->neighbor[c][1] == int(lay->grid.index(2, 0, 0)));
    CHECK(lay->neighbor[c][4] == -1);
    SparseHamiltonian H = assemble_lk(lay, KpParameters{}, {});
    CHECK(H.dim() == 72);
    const Block6 before = H.block(c, 0);
    H.add_onsite(c, Block6::Identity());
    CHECK((H.block(c, 0) - before - Block6::Identity()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(H.spectrum_lower_bound() <= dense_eigenvalues(H.matrix)[0] + 1e-12);
}
