#include "support.hpp"

#include "holespin/constants.hpp"
#include "holespin/errors.hpp"

#include <doctest.h>

using namespace holespin;

namespace {

DeviceGeometry single_box(const Vec3& hi, const std::string& material, RegionRole role) {
    DeviceGeometry g;
    g.domain_hi = hi;
    g.regions.push_back({"body", BoxShape{Vec3::Zero(), hi}, material, 0.0, role, std::nullopt});
    return g;
}

/// Oxide box holding a channel prism.
DeviceGeometry prism_device(const PrismShape& p, const Vec3& hi) {
    DeviceGeometry g = single_box(hi, "SiO2", RegionRole::Oxide);
    g.regions.push_back({"fin", p, "Si", 0.0, RegionRole::Channel, std::nullopt});
    return g;
}

bool in_triangle(double y, double z, const PrismShape& p) {
    // Barycentric test against the apex triangle (base corners and apex).
    const Eigen::Vector2d a(p.y_center - 0.5 * p.base_width, p.z_base), b(p.y_center + 0.5 * p.base_width, p.z_base),
        c(p.y_center, p.z_base + p.height), q(y, z);
    auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) { return u.x() * v.y() - u.y() * v.x(); };
    const double area = cross(b - a, c - a);
    const double l1 = cross(b - q, c - q) / area, l2 = cross(c - q, a - q) / area, l3 = cross(a - q, b - q) / area;
    const double tol = 1e-9;
    return l1 >= -tol && l2 >= -tol && l3 >= -tol;
}

}  // namespace

TEST_CASE("physical constants are mutually consistent") {
    CHECK(bohr_magneton_consistency() < 1e-9);
    CHECK(units::hbar2_2m0 == doctest::Approx(0.0380998).epsilon(1e-5));
}

TEST_CASE("material records carry the tabulated constants") {
    MaterialTable t;
    CHECK(t.at("SiO2").young_E == 73.0);
    CHECK(t.at("TiN").thermal_alpha == 9.35e-6);
    CHECK(t.at("Si").def_pot_b == -2.35);
    MaterialRecord bad = silicon();
    bad.poisson_nu = 0.5;
    CHECK_THROWS_AS(t.set(bad), InvalidInput);
    bad = silicon();
    bad.young_E = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    CHECK_THROWS_AS(t.index_of("Ge"), InvalidInput);
}

TEST_CASE("10 nm silicon cube at 0.5 nm has 21^3 silicon nodes") {
    const auto [grid, map] = build_grid(single_box(Vec3::Constant(10), "Si", RegionRole::Channel), Vec3::Constant(0.5));
    CHECK(grid.n == std::array<int, 3>{21, 21, 21});
    CHECK(map.channel_nodes.size() == grid.size());
    for (int m : map.material) CHECK(map.materials.at(m).name == "Si");
}

TEST_CASE("grid indexing is z fastest and round-trips") {
    Grid g;
    g.n = {3, 4, 5};
    CHECK(g.index(0, 0, 1) == 1);
    CHECK(g.index(0, 1, 0) == 5);
    CHECK(g.index(1, 0, 0) == 20);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto c = g.ijk(i);
        CHECK(g.index(c[0], c[1], c[2]) == i);
    }
}

TEST_CASE("material lookup follows the region map") {
    const Device dev = testing::test_fin(0.5);
    const Grid& g = dev.grid;
    const auto& geom = dev.geometry;
    auto node_at = [&](const Vec3& p) {
        const Vec3 r = (p - g.origin).cwiseQuotient(g.spacing);
        return std::array<int, 3>{int(std::lround(r.x())), int(std::lround(r.y())), int(std::lround(r.z()))};
    };
    const Vec3 top = geom.domain_hi;
    const Vec3 in_gate(0.5 * top.x(), 0.5 * top.y(), top.z() - 0.5);
    CHECK(material_lookup(g, dev.map, node_at(in_gate)).name == "TiN");
    CHECK(material_lookup(g, dev.map, node_at(in_gate)).thermal_alpha == 9.35e-6);
    const Vec3 in_oxide(0.5 * top.x(), 0.5, 3.0);
    CHECK(material_lookup(g, dev.map, node_at(in_oxide)).young_E == 73.0);
    CHECK_THROWS_AS(material_lookup(g, dev.map, {-1, 0, 0}), std::out_of_range);
    CHECK_THROWS_AS(material_lookup(g, dev.map, {g.n[0], 0, 0}), std::out_of_range);
}

TEST_CASE("Geo1 channel cross-section is about 260 nm^2") {
    const FinFetDimensions d = geo1_dimensions();
    const Device dev = Device::build(make_finfet(d), Vec3::Constant(0.5));
    const Grid& g = dev.grid;
    const int i = g.n[0] / 2;
    std::size_t count = 0;
    for (int j = 0; j < g.n[1]; ++j)
        for (int k = 0; k < g.n[2]; ++k) count += dev.map.channel_mask[g.index(i, j, k)];
    const double area = double(count) * g.spacing.y() * g.spacing.z();
    const double row = d.fin_base * g.spacing.z();
    MESSAGE("Geo1 mid-channel cross-section " << area << " nm^2");
    CHECK(std::abs(area - 260.0) <= row);
}

TEST_CASE("sharp-apex prism mask matches a point-in-triangle test and narrows with height") {
    PrismShape p{0.0, 4.0, 5.0, 1.0, 6.0, 8.0, 0.0};
    const auto [grid, map] = build_grid(prism_device(p, Vec3(4, 10, 8)), Vec3::Constant(0.25));
    std::vector<int> row(std::size_t(grid.n[2]), 0);
    const int i = grid.n[0] / 2;
    for (int j = 0; j < grid.n[1]; ++j)
        for (int k = 0; k < grid.n[2]; ++k) {
            const Vec3 r = grid.position(i, j, k);
            const bool mask = map.channel_mask[grid.index(i, j, k)] != 0;
            CHECK(mask == in_triangle(r.y(), r.z(), p));
            row[std::size_t(k)] += mask;
        }
    const int k0 = int(std::lround(p.z_base / grid.spacing.z()));
    for (int k = k0 + 1; k < grid.n[2]; ++k) CHECK(row[std::size_t(k)] <= row[std::size_t(k - 1)]);
    CHECK(row[std::size_t(k0)] > 0);
}

TEST_CASE("channel volume converges to the prism volume") {
    PrismShape p{0.0, 6.0, 5.0, 1.0, 6.0, 8.0, 2.0};
    const double exact = (p.x1 - p.x0) * p.height * 0.5 * (p.base_width + p.top_width);
    const DeviceGeometry geom = prism_device(p, Vec3(6, 10, 8));
    const double e1 = std::abs(Device::build(geom, Vec3::Constant(1.0)).channel_volume() - exact);
    const double e05 = std::abs(Device::build(geom, Vec3::Constant(0.5)).channel_volume() - exact);
    const double e025 = std::abs(Device::build(geom, Vec3::Constant(0.25)).channel_volume() - exact);
    CHECK(e05 < e1);
    CHECK(e025 < e05);
}

TEST_CASE("equal-priority overlap is rejected with both names") {
    DeviceGeometry g = single_box(Vec3::Constant(4), "Si", RegionRole::Channel);
    g.regions[0].priority = 1;
    g.regions.push_back({"cap", BoxShape{Vec3(0, 0, 2), Vec3(4, 4, 4)}, "SiO2", 0.0, RegionRole::Oxide, 1});
    try {
        build_grid(g, Vec3::Constant(1.0));
        FAIL("overlap not detected");
    } catch (const InvalidInput& e) {
        const std::string msg = e.what();
        CHECK(msg.find("body") != std::string::npos);
        CHECK(msg.find("cap") != std::string::npos);
    }
    g.regions[1].priority = 2;
    CHECK_NOTHROW(build_grid(g, Vec3::Constant(1.0)));
}

TEST_CASE("uncovered nodes and empty channels are rejected") {
    DeviceGeometry g = single_box(Vec3::Constant(4), "Si", RegionRole::Channel);
    g.domain_hi = Vec3::Constant(5);
    CHECK_THROWS_AS(build_grid(g, Vec3::Constant(1.0)), InvalidInput);
    CHECK_THROWS_AS(build_grid(single_box(Vec3::Constant(4), "SiO2", RegionRole::Oxide), Vec3::Constant(1.0)),
                    InvalidInput);
    CHECK_THROWS_AS(build_grid(single_box(Vec3::Constant(4), "Si", RegionRole::Channel), Vec3(1, 0, 1)),
                    InvalidInput);
}

TEST_CASE("fin device mask is mirror symmetric in y") {
    const Device dev = testing::test_fin(0.5);
    const Grid& g = dev.grid;
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k)
                REQUIRE(dev.map.channel_mask[g.index(i, j, k)] == dev.map.channel_mask[g.index(i, g.n[1] - 1 - j, k)]);
}

TEST_CASE("fin geometry validation") {
    FinFetDimensions d = test_fin_dimensions();
    d.plunger_length += 1.0;
    CHECK_THROWS_AS(make_finfet(d), InvalidInput);
    d = test_fin_dimensions();
    d.fin_top = d.fin_base + 1.0;
    CHECK_THROWS_AS(make_finfet(d), InvalidInput);
}

TEST_CASE("lateral extension stretches boxes touching the y faces") {
    const DeviceGeometry g = make_finfet(test_fin_dimensions());
    const DeviceGeometry e = extend_lateral(g, 5.0);
    CHECK(e.domain_lo.y() == doctest::Approx(g.domain_lo.y() - 5.0));
    CHECK(e.domain_hi.y() == doctest::Approx(g.domain_hi.y() + 5.0));
    const auto& gate = std::get<BoxShape>(e.regions[std::size_t(e.region_index("gate_plunger"))].shape);
    CHECK(gate.lo.y() == doctest::Approx(e.domain_lo.y()));
    CHECK_THROWS_AS(extend_lateral(g, -1.0), InvalidInput);
}

TEST_CASE("bias point resolves electrode voltages") {
    BiasPoint b;
    b.V_plunger = -0.2;
    b.workfunction_offset["plunger"] = 0.05;
    CHECK(b.electrode_voltage("plunger") == doctest::Approx(-0.15));
    CHECK(b.electrode_voltage("left") == 0.0);
    CHECK_THROWS_AS(b.electrode_voltage("gate9"), InvalidInput);
    b.V_left = std::nan("");
    CHECK_THROWS_AS(b.validate(), InvalidInput);
}
