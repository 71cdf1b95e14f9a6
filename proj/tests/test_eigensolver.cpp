#include "support.hpp"

#include "holespin/constants.hpp"
#include "holespin/eigensolver.hpp"
#include "holespin/errors.hpp"

#include <doctest.h>

using namespace holespin;
using testing::box_layout;

namespace {

/// Strained box with a random potential; Kramers degenerate, no accidental degeneracies.
SparseHamiltonian toy_box(std::array<int, 3> n, std::uint64_t seed = 5) {
    const auto lay = box_layout(n, Vec3(0.5, 0.6, 0.4));
    const MaterialRecord si = silicon();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-0.02, 0.02);
    std::vector<double> phi(lay->grid.size());
    for (auto& v : phi) v = U(rng);
    SparseHamiltonian H = assemble_lk(lay, KpParameters::from_material(si), phi);
    StrainField eps{lay->grid, {}};
    eps.values.assign(lay->grid.size(), {1e-3, -5e-4, -2e-3, 3e-4, 0, 2e-4});
    add_strain_field(H, eps, si.def_pot_av, si.def_pot_b, si.def_pot_d);
    return H;
}

EigenOptions iterative(int count) {
    EigenOptions o;
    o.count = count;
    o.tol = 1e-10;
    return o;
}

Eigen::Matrix2cd random_unitary(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::Matrix2cd A;
    for (int i = 0; i < 4; ++i) A(i) = cplx(nd(rng), nd(rng));
    return Eigen::HouseholderQR<Eigen::Matrix2cd>(A).householderQ();
}

}  // namespace

TEST_CASE("iterative eigenpairs agree with dense diagonalisation") {
    const SparseHamiltonian H = toy_box({5, 4, 4});
    REQUIRE(H.dim() == 480);
    const EigenResult r = lowest_eigenpairs(H.matrix, iterative(6));
    const Eigen::VectorXd ref = testing::dense_eigenvalues(H.matrix);
    CHECK(r.cycles >= 1);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(r.values[i] - ref[i]) <= 1e-10);
    for (double res : r.residuals) CHECK(res <= 1e-10);
}

TEST_CASE("1D well ladder scales as n^2") {
    const double L = 10.0, h = 0.05;
    const int n = int(std::lround(L / h)) - 1;
    const auto lay = box_layout({n, 1, 1}, Vec3(h, 1e4, 1e4));
    const SparseHamiltonian H = assemble_lk(lay, KpParameters::from_material(testing::decoupled_silicon()), {});
    const EigenResult r = lowest_eigenpairs(H.matrix, iterative(12));
    for (int level = 0; level < 3; ++level) {
        const double ratio = r.values[4 * level] / r.values[0];
        CHECK(ratio == doctest::Approx((level + 1) * (level + 1)).epsilon(0.01));
        for (int s = 1; s < 4; ++s) CHECK(std::abs(r.values[4 * level + s] - r.values[4 * level]) <= 1e-9);
    }
}

TEST_CASE("spectral properties of the iterative solver") {
    const SparseHamiltonian H = toy_box({8, 6, 6});
    const EigenResult a = lowest_eigenpairs(H.matrix, iterative(4));

    SUBCASE("Kramers pairs are degenerate") {
        CHECK(std::abs(a.values[1] - a.values[0]) <= 1e-9);
        CHECK(std::abs(a.values[3] - a.values[2]) <= 1e-9);
        CHECK(a.values[2] - a.values[1] > 1e-4);
    }
    SUBCASE("the seed does not change the eigenvalues") {
        EigenOptions o = iterative(4);
        o.seed = 77;
        const EigenResult b = lowest_eigenpairs(H.matrix, o);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(b.values[i] - a.values[i]) <= 1e-10);
    }
    SUBCASE("a constant diagonal shift moves every eigenvalue") {
        const double c = 0.37;
        SpMatC I(H.matrix.rows(), H.matrix.cols());
        I.setIdentity();
        const SpMatC shifted = H.matrix + cplx(c) * I;
        const EigenResult b = lowest_eigenpairs(shifted, iterative(4));
        for (int i = 0; i < 4; ++i) CHECK(std::abs(b.values[i] - a.values[i] - c) <= 1e-10);
    }
    SUBCASE("eigenvectors are orthonormal") {
        const Eigen::MatrixXcd O = a.vectors.adjoint() * a.vectors;
        CHECK((O - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("lowest_states normalises with the volume element") {
        const auto st = lowest_states(H, 4);
        for (const auto& s : st) CHECK(s.norm2() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(st[0].inner(st[2])) <= 1e-10);
        CHECK(st[0].energy == doctest::Approx(a.values[0]).epsilon(1e-12));
    }
}

TEST_CASE("invalid requests and non-convergence") {
    const SparseHamiltonian H = toy_box({5, 4, 4});
    EigenOptions o = iterative(0);
    CHECK_THROWS_AS(lowest_eigenpairs(H.matrix, o), InvalidInput);
    o = iterative(481);
    CHECK_THROWS_AS(lowest_eigenpairs(H.matrix, o), InvalidInput);
    CHECK_THROWS_AS(lowest_states(H, 1), InvalidInput);

    o = iterative(4);
    o.tol = 1e-30;
    o.max_cycles = 2;
    try {
        lowest_eigenpairs(H.matrix, o);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.history().size() == 8);
        CHECK(std::string(e.what()).find("2 cycles") != std::string::npos);
    }
}

TEST_CASE("doublet alignment") {
    const SparseHamiltonian H = toy_box({8, 6, 6});
    const auto st = lowest_states(H, 4);
    const KramersDoublet ground = make_doublet(st[0], st[1]);

    SUBCASE("aligning a doublet to itself is the identity") {
        const KramersDoublet a = align_doublet(ground, ground);
        CHECK((a.rotation - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("a random unitary mixing is undone") {
        const Eigen::Matrix2cd U = random_unitary(11);
        const KramersDoublet mixed = rotate_doublet(ground, U);
        const KramersDoublet back = align_doublet(mixed, ground);
        for (int j = 0; j < 2; ++j) {
            const double err = (back.states[j].psi - ground.states[j].psi).norm() / ground.states[j].psi.norm();
            CHECK(err <= 1e-10);
        }
        CHECK((back.rotation - U.adjoint()).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("an orthogonal doublet is rejected") {
        CHECK_THROWS_AS(align_doublet(make_doublet(st[2], st[3]), ground), InvalidInput);
    }
}

TEST_CASE("ground doublet density on the fin is mirror symmetric in y") {
    const Device dev = testing::test_fin(1.0);
    const SparseHamiltonian H =
        assemble_lk(dev.grid, dev.map, KpParameters::from_material(silicon()), std::vector<double>{});
    const auto st = lowest_states(H, 2);
    const ChannelLayout& lay = *H.layout;
    const Grid& g = lay.grid;
    std::vector<double> rho(g.size(), 0.0);
    for (std::size_t c = 0; c < lay.size(); ++c)
        for (const auto& s : st) rho[lay.nodes[c]] += s.psi.segment(long(6 * c), 6).squaredNorm();
    const double peak = *std::max_element(rho.begin(), rho.end());
    double worst = 0;
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k)
                worst = std::max(worst, std::abs(rho[g.index(i, j, k)] - rho[g.index(i, g.n[1] - 1 - j, k)]));
    CHECK(worst <= 1e-6 * peak);
}
