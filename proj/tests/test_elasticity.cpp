#include "support.hpp"

#include "holespin/elasticity.hpp"
#include "holespin/errors.hpp"

#include <doctest.h>

#include <fstream>

using namespace holespin;

namespace {

constexpr double kTrt = 300.0, kTcool = 4.0;

ElasticityConfig cooling() {
    ElasticityConfig c;
    c.T_rt = kTrt;
    c.T_cool = kTcool;
    return c;
}

double max_abs_stress(const StressField& s, const std::vector<std::size_t>& nodes) {
    double m = 0;
    for (auto n : nodes)
        for (double v : s.values[n]) m = std::max(m, std::abs(v));
    return m;
}

std::vector<std::size_t> all_nodes(const Grid& g) {
    std::vector<std::size_t> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
}

DisplacementField displacement_from(const Grid& g, const std::function<Vec3(const Vec3&)>& f) {
    DisplacementField d;
    d.grid = g;
    d.u.resize(3 * long(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) d.u.segment<3>(3 * long(i)) = f(g.position(i));
    return d;
}

}  // namespace

TEST_CASE("isotropic stiffness") {
    const Matrix6 C0 = isotropic_elasticity_matrix(100.0, 0.0);
    CHECK((C0.topLeftCorner<3, 3>() - 100.0 * Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix6 C = isotropic_elasticity_matrix(169.0, 0.27);
    CHECK(C(0, 0) == doctest::Approx(169.0 * 0.73 / (1.27 * 0.46)));
    CHECK(C(0, 0) == doctest::Approx(211.3).epsilon(1e-3));
    CHECK((C - C.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(isotropic_elasticity_matrix(169.0, 0.5), InvalidInput);
    CHECK_THROWS_AS(isotropic_elasticity_matrix(-1.0, 0.2), InvalidInput);
}

TEST_CASE("isotropic stiffness is invariant under rotation") {
    const Matrix6 C = isotropic_elasticity_matrix(169.0, 0.27);
    const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    CHECK((rotate_stiffness(C, R) - C).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("thermal strain of the cool-down") {
    const Vector6 si = thermal_strain_vector(2.6e-6, kTrt, kTcool);
    for (int i = 0; i < 3; ++i) CHECK(si[i] == doctest::Approx(-7.696e-4).epsilon(1e-12));
    CHECK(si.tail<3>().isZero());
    CHECK(thermal_strain_vector(2.6e-6, 300, 300).isZero());
    CHECK(thermal_strain_vector(9.35e-6, kTrt, kTcool)[0] == doctest::Approx(-2.7676e-3).epsilon(1e-12));
}

TEST_CASE("single free element: symmetric stiffness, rigid translations in the null space") {
    ElasticMesh mesh = make_box_mesh(Vec3::Zero(), Vec3(1, 1.5, 2), Vec3(1, 1.5, 2), silicon());
    const StiffnessSystem sys = assemble_thermoelastic(mesh, cooling());
    const Eigen::MatrixXd K(sys.K);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int dir = 0; dir < 3; ++dir) {
        Eigen::VectorXd t = Eigen::VectorXd::Zero(24);
        for (int a = 0; a < 8; ++a) t[3 * a + dir] = 1.0;
        CHECK((K * t).cwiseAbs().maxCoeff() < 1e-12 * K.cwiseAbs().maxCoeff());
    }
    CHECK_THROWS_AS(solve_displacement(sys, mesh.nodes), InvalidInput);
}

TEST_CASE("fully clamped element stays put") {
    ElasticMesh mesh = make_box_mesh(Vec3::Zero(), Vec3::Ones(), Vec3::Ones(), silicon());
    mesh.fixed.assign(mesh.nodes.size(), 1);
    const auto u = solve_displacement(assemble_thermoelastic(mesh, cooling()), mesh.nodes);
    CHECK(u.u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("free contraction with minimal constraints is stress free") {
    const MaterialRecord si = silicon();
    ElasticMesh mesh = make_box_mesh(Vec3::Zero(), Vec3(4, 4, 4), Vec3::Ones(), si);
    const auto cfg = cooling();
    StiffnessSystem sys = assemble_thermoelastic(mesh, cfg);
    const Grid& g = mesh.nodes;
    const std::size_t a = g.index(0, 0, 0), b = g.index(4, 0, 0), c = g.index(0, 4, 0);
    for (int p = 0; p < 3; ++p) sys.fixed_dof[3 * a + p] = 1;
    sys.fixed_dof[3 * b + 1] = sys.fixed_dof[3 * b + 2] = 1;
    sys.fixed_dof[3 * c + 2] = 1;
    const auto u = solve_displacement(sys, g);
    const double aT = si.thermal_alpha * (kTcool - kTrt);
    double err = 0;
    for (std::size_t n = 0; n < g.size(); ++n) err = std::max(err, (u.at(n) - aT * (g.position(n) - g.position(a))).norm());
    CHECK(err < 1e-12);
    const StrainField eps = strain_from_displacement(u);
    const StressField s = stress_field(mesh, nullptr, eps, cfg);
    CHECK(max_abs_stress(s, all_nodes(g)) <= 1e-3 * si.young_E * 1e9 * std::abs(aT));
}

TEST_CASE("clamped cube reaches the fully constrained thermal stress") {
    const MaterialRecord si = silicon();
    ElasticMesh mesh = make_box_mesh(Vec3::Zero(), Vec3(4, 4, 4), Vec3::Ones(), si);
    const Grid& g = mesh.nodes;
    std::vector<std::size_t> interior;
    for (std::size_t n = 0; n < g.size(); ++n) {
        const auto c = g.ijk(n);
        bool edge = false;
        for (int d = 0; d < 3; ++d) edge = edge || c[d] == 0 || c[d] == g.n[d] - 1;
        mesh.fixed[n] = edge;
        if (!edge) interior.push_back(n);
    }
    const auto cfg = cooling();
    const auto u = solve_displacement(assemble_thermoelastic(mesh, cfg), g);
    CHECK(u.u.cwiseAbs().maxCoeff() < 1e-14);
    const StressField s = stress_field(mesh, nullptr, strain_from_displacement(u), cfg);
    const double expected = si.young_E * 1e9 * si.thermal_alpha * (kTrt - kTcool) / (1 - 2 * si.poisson_nu);
    CHECK(expected == doctest::Approx(282.7e6).epsilon(1e-3));
    for (auto n : interior)
        for (int q = 0; q < 3; ++q) CHECK(std::abs(s.values[n][q] - expected) <= 0.01 * expected);
}

TEST_CASE("two-material stack: thermal load sits on the interface layer") {
    MaterialRecord top = titanium_nitride();
    const MaterialRecord bottom = silicon();
    ElasticMesh mesh = make_box_mesh(Vec3::Zero(), Vec3(4, 4, 4), Vec3::Ones(), bottom);
    mesh.materials.set(top);
    const Grid& g = mesh.nodes;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 2; k < 4; ++k) mesh.cell_material[mesh.cell_index(i, j, k)] = 1;
    const auto cfg = cooling();
    const StiffnessSystem sys = assemble_thermoelastic(mesh, cfg);
    auto sigma_th = [&](const MaterialRecord& m) {
        return (isotropic_elasticity_matrix(m.young_E, m.poisson_nu) *
                thermal_strain_vector(m.thermal_alpha, cfg.T_rt, cfg.T_cool))[2];
    };
    const double expected_fz = g.spacing.x() * g.spacing.y() * (sigma_th(bottom) - sigma_th(top));
    for (int i = 1; i < 4; ++i)
        for (int j = 1; j < 4; ++j)
            for (int k = 1; k < 4; ++k) {
                const std::size_t n = g.index(i, j, k);
                const Vec3 f = sys.F_th.segment<3>(3 * long(n));
                if (k == 2) {
                    CHECK(f.z() == doctest::Approx(expected_fz).epsilon(1e-10));
                    CHECK(std::abs(f.x()) + std::abs(f.y()) < 1e-12 * std::abs(expected_fz));
                } else {
                    CHECK(f.norm() < 1e-12 * std::abs(expected_fz));
                }
            }
}

TEST_CASE("strain from analytic displacements") {
    Grid g;
    g.n = {5, 6, 7};
    g.spacing = Vec3(0.5, 0.7, 0.3);
    const double c = 2e-3;
    auto check = [&](const StrainField& e, std::array<double, 6> want) {
        double err = 0;
        for (const auto& v : e.values)
            for (int q = 0; q < 6; ++q) err = std::max(err, std::abs(v[q] - want[q]));
        return err;
    };
    CHECK(check(strain_from_displacement(displacement_from(g, [&](const Vec3& r) { return Vec3(0, 0, c * r.z()); })),
                {0, 0, c, 0, 0, 0}) < 1e-15);
    CHECK(check(strain_from_displacement(
                    displacement_from(g, [&](const Vec3& r) -> Vec3 { return Vec3(c * r.y(), c * r.x(), 0) / 2; })),
                {0, 0, 0, c / 2, 0, 0}) < 1e-15);
    const auto u = displacement_from(g, [&](const Vec3& r) -> Vec3 { return Vec3(r.y() * r.z(), r.x() * r.x(), r.z()) * c; });
    auto shifted = u;
    for (std::size_t n = 0; n < g.size(); ++n) shifted.u.segment<3>(3 * long(n)) += Vec3(0.3, -1.2, 7.0);
    const auto e0 = strain_from_displacement(u), e1 = strain_from_displacement(shifted);
    double diff = 0;
    for (std::size_t n = 0; n < g.size(); ++n)
        for (int q = 0; q < 6; ++q) diff = std::max(diff, std::abs(e0.values[n][q] - e1.values[n][q]));
    CHECK(diff < 1e-13);
}

TEST_CASE("stress from strain") {
    Grid g;
    g.n = {2, 2, 2};
    const Matrix6 C = isotropic_elasticity_matrix(150.0, 0.0);
    const StressField s = stress_from_strain(C, StrainField::uniform(g, {0, 0, 1e-3, 0, 0, 0}));
    CHECK(s.values[0][2] == doctest::Approx(150e9 * 1e-3));
    CHECK(s.values[0][0] == 0.0);
    const Vector6 eth = thermal_strain_vector(2.6e-6, kTrt, kTcool);
    const StressField z = stress_from_strain(C, StrainField::uniform(g, {eth[0], eth[1], eth[2], 0, 0, 0}), eth);
    for (double v : z.values[3]) CHECK(v == 0.0);
}

TEST_CASE("resampling strain onto the FD lattice") {
    Grid coarse;
    coarse.n = {5, 5, 5};
    coarse.spacing = Vec3::Constant(1.0);
    StrainField lin{coarse, {}};
    for (std::size_t n = 0; n < coarse.size(); ++n) {
        const Vec3 r = coarse.position(n);
        lin.values.push_back({1e-3 * r.z(), 2e-3, -r.z() * 5e-4 + r.x() * 1e-4, 0, 0, 0});
    }
    Grid fine;
    fine.n = {9, 9, 9};
    fine.spacing = Vec3::Constant(0.5);
    const StrainField s = sample_strain_to_fd(lin, fine);
    for (std::size_t n = 0; n < fine.size(); ++n) {
        const Vec3 r = fine.position(n);
        CHECK(s.values[n][0] == doctest::Approx(1e-3 * r.z()).epsilon(1e-12));
        CHECK(s.values[n][1] == doctest::Approx(2e-3).epsilon(1e-14));
        CHECK(std::abs(s.values[n][2] - (-r.z() * 5e-4 + r.x() * 1e-4)) < 1e-15);
    }
    const StrainField same = sample_strain_to_fd(lin, coarse);
    CHECK(same.values == lin.values);
    Grid outside = fine;
    outside.origin = Vec3(-0.5, 0, 0);
    CHECK_THROWS_AS(sample_strain_to_fd(lin, outside), InvalidInput);
}

TEST_CASE("strain CSV round trip and parse errors") {
    const std::string dir = testing::scratch_dir("strain_csv");
    Grid g;
    g.n = {3, 4, 2};
    g.spacing = Vec3(0.5, 0.25, 1.0);
    g.origin = Vec3(1.0, -2.0, 0.5);
    StrainField e{g, {}};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1e-2, 1e-2);
    for (std::size_t n = 0; n < g.size(); ++n) e.values.push_back({U(rng), U(rng), U(rng), U(rng), U(rng), U(rng)});
    const std::string path = dir + "/eps.csv";
    export_strain(path, e);
    const StrainField back = import_strain(path);
    CHECK(back.grid.same_as(g));
    CHECK(back.values == e.values);
    CHECK_NOTHROW(import_strain(path, g));
    Grid other = g;
    other.spacing.x() = 0.4;
    CHECK_THROWS_AS(import_strain(path, other), InvalidInput);

    const std::string bad = dir + "/bad.csv";
    {
        std::ifstream in(path);
        std::ofstream out(bad);
        std::string line;
        int n = 0;
        while (std::getline(in, line)) {
            if (++n == 4) line += ",0.5";
            out << line << '\n';
        }
    }
    try {
        import_strain(bad);
        FAIL("malformed file accepted");
    } catch (const IoError& err) {
        CHECK(std::string(err.what()).find("line 4") != std::string::npos);
    }
    CHECK_THROWS_AS(import_strain(dir + "/missing.csv"), IoError);
}

TEST_CASE("cool-down of the coarse test fin: signs and mirror symmetry") {
    const DeviceGeometry geom = make_finfet(test_fin_dimensions());
    ElasticityConfig cfg = cooling();
    cfg.lateral_extension = 4.0;
    const Vec3 dot = geom.dot_proxy;

    cfg.scenario = CoolingScenario::BC1;
    const ElasticityResult bc1 = run_cooldown(geom, Vec3::Constant(1.0), cfg);
    CHECK(bc1.strain.interpolate(dot)[2] < 0.0);

    const Grid& g = bc1.strain.grid;
    const int imid = int(std::lround((dot.x() - g.origin.x()) / g.spacing.x()));
    REQUIRE(std::abs(g.position(imid, 0, 0).x() - dot.x()) < 1e-9);
    double on_plane = 0, off_plane = 0;
    for (int j = 0; j < g.n[1]; ++j)
        for (int k = 0; k < g.n[2]; ++k) {
            const auto& v = bc1.strain.values[g.index(imid, j, k)];
            on_plane = std::max({on_plane, std::abs(v[3]), std::abs(v[4])});
            const auto& w = bc1.strain.values[g.index(imid - 3, j, k)];
            off_plane = std::max({off_plane, std::abs(w[3]), std::abs(w[4])});
        }
    CHECK(on_plane < 1e-12);
    CHECK(off_plane > 1e-5);

    cfg.scenario = CoolingScenario::BC2;
    const ElasticityResult bc2 = run_cooldown(geom, Vec3::Constant(1.0), cfg);
    CHECK(bc2.strain.interpolate(dot)[2] > 0.0);
}

TEST_CASE("elasticity configuration checks") {
    ElasticityConfig c;
    c.T_cool = 400;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = ElasticityConfig{};
    c.coarsen = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = ElasticityConfig{};
    c.scenario = CoolingScenario::None;
    CHECK_THROWS_AS(run_cooldown(make_finfet(test_fin_dimensions()), Vec3::Constant(1.0), c), InvalidInput);
}
