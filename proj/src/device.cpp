#include "holespin/device.hpp"

#include "holespin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace holespin {

void MaterialRecord::validate() const {
    auto fail = [&](const std::string& msg) { throw InvalidInput("material '" + name + "': " + msg); };
    if (name.empty()) throw InvalidInput("material record without name");
    if (!(young_E > 0.0)) fail("Young modulus must be positive");
    if (!(poisson_nu >= 0.0 && poisson_nu < 0.5)) fail("Poisson ratio must lie in [0, 0.5)");
    if (!std::isfinite(thermal_alpha)) fail("thermal expansion must be finite");
    if (role == MaterialRole::Semiconductor) {
        for (double v : {gamma1, gamma2, gamma3, delta0_SO, kappa, def_pot_av, def_pot_b, def_pot_d})
            if (!std::isfinite(v)) fail("k.p parameters must be finite");
    }
    if (role != MaterialRole::Metal && !(rel_permittivity >= 1.0)) fail("relative permittivity must be >= 1");
}

MaterialRecord silicon() {
    MaterialRecord m;
    m.name = "Si";
    m.young_E = 169.0;
    m.thermal_alpha = 2.6e-6;
    m.poisson_nu = 0.27;
    m.gamma1 = 4.285;
    m.gamma2 = 0.339;
    m.gamma3 = 1.21;
    m.delta0_SO = 0.044;
    m.kappa = -0.42;
    m.def_pot_av = 2.46;
    m.def_pot_b = -2.35;
    m.def_pot_d = -5.32;
    m.rel_permittivity = 11.7;
    m.role = MaterialRole::Semiconductor;
    return m;
}

MaterialRecord silicon_dioxide() {
    MaterialRecord m;
    m.name = "SiO2";
    m.young_E = 73.0;
    m.thermal_alpha = 0.49e-6;
    m.poisson_nu = 0.17;
    m.rel_permittivity = 3.9;
    m.role = MaterialRole::Oxide;
    return m;
}

MaterialRecord titanium_nitride() {
    MaterialRecord m;
    m.name = "TiN";
    m.young_E = 43.0;
    m.thermal_alpha = 9.35e-6;
    m.poisson_nu = 0.33;
    m.rel_permittivity = 1.0;
    m.role = MaterialRole::Metal;
    return m;
}

MaterialTable::MaterialTable() {
    set(silicon());
    set(silicon_dioxide());
    set(titanium_nitride());
}

MaterialTable MaterialTable::empty() {
    MaterialTable t;
    t.records_.clear();
    return t;
}

int MaterialTable::set(const MaterialRecord& record) {
    record.validate();
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].name == record.name) {
            records_[i] = record;
            return int(i);
        }
    }
    records_.push_back(record);
    return int(records_.size() - 1);
}

int MaterialTable::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < records_.size(); ++i)
        if (records_[i].name == name) return int(i);
    throw InvalidInput("unknown material '" + name + "'");
}

bool MaterialTable::contains(const std::string& name) const {
    return std::any_of(records_.begin(), records_.end(), [&](const auto& r) { return r.name == name; });
}

const char* to_string(RegionRole role) {
    switch (role) {
        case RegionRole::Channel: return "channel";
        case RegionRole::Substrate: return "substrate";
        case RegionRole::Oxide: return "oxide";
        case RegionRole::Gate: return "gate";
        case RegionRole::LeadExtension: return "lead-extension";
    }
    return "?";
}

RegionRole region_role_from_string(const std::string& s) {
    for (auto r : {RegionRole::Channel, RegionRole::Substrate, RegionRole::Oxide, RegionRole::Gate,
                   RegionRole::LeadExtension})
        if (s == to_string(r)) return r;
    throw InvalidInput("unknown region role '" + s + "'");
}

const char* to_string(FaceSelect f) {
    switch (f) {
        case FaceSelect::Volume: return "volume";
        case FaceSelect::XMin: return "xmin";
        case FaceSelect::XMax: return "xmax";
        case FaceSelect::YMin: return "ymin";
        case FaceSelect::YMax: return "ymax";
        case FaceSelect::ZMin: return "zmin";
        case FaceSelect::ZMax: return "zmax";
    }
    return "?";
}

FaceSelect face_from_string(const std::string& s) {
    for (auto f : {FaceSelect::Volume, FaceSelect::XMin, FaceSelect::XMax, FaceSelect::YMin, FaceSelect::YMax,
                   FaceSelect::ZMin, FaceSelect::ZMax})
        if (s == to_string(f)) return f;
    throw InvalidInput("unknown electrode face '" + s + "'");
}

bool shape_contains(const Shape& shape, const Vec3& p, double eps) {
    if (const auto* b = std::get_if<BoxShape>(&shape)) {
        return (p.array() >= b->lo.array() - eps).all() && (p.array() <= b->hi.array() + eps).all();
    }
    const auto& t = std::get<PrismShape>(shape);
    if (p.x() < t.x0 - eps || p.x() > t.x1 + eps) return false;
    const double s = (p.z() - t.z_base) / t.height;
    if (s < -eps || s > 1.0 + eps) return false;
    const double sc = std::clamp(s, 0.0, 1.0);
    const double half = 0.5 * (t.base_width + (t.top_width - t.base_width) * sc);
    return std::abs(p.y() - t.y_center) <= half + eps;
}

namespace {

int effective_priority(const Region& r, std::size_t idx) { return r.priority ? *r.priority : int(idx); }

}  // namespace

int DeviceGeometry::region_at(const Vec3& p) const {
    int best = -1, rival = -1;
    int best_prio = 0;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (!shape_contains(regions[i].shape, p)) continue;
        const int prio = effective_priority(regions[i], i);
        if (best < 0 || prio > best_prio) {
            best = int(i);
            best_prio = prio;
            rival = -1;
        } else if (prio == best_prio) {
            rival = int(i);
        }
    }
    if (rival >= 0) {
        std::ostringstream os;
        os << "regions '" << regions[std::size_t(best)].name << "' and '" << regions[std::size_t(rival)].name
           << "' overlap with equal priority " << best_prio << " at (" << p.x() << ", " << p.y() << ", " << p.z()
           << ") nm";
        throw InvalidInput(os.str());
    }
    return best;
}

int DeviceGeometry::region_index(const std::string& name) const {
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (regions[i].name == name) return int(i);
    throw InvalidInput("unknown region '" + name + "'");
}

void DeviceGeometry::validate() const {
    if (!((domain_hi.array() > domain_lo.array()).all())) throw InvalidInput("device domain must have positive extent");
    if (regions.empty()) throw InvalidInput("device has no regions");
    for (const auto& r : regions) {
        if (!materials.contains(r.material))
            throw InvalidInput("region '" + r.name + "' uses unknown material '" + r.material + "'");
        if (!std::isfinite(r.doping_cm3)) throw InvalidInput("region '" + r.name + "' has non-finite doping");
        if (const auto* b = std::get_if<BoxShape>(&r.shape)) {
            if (!((b->hi.array() > b->lo.array()).all()))
                throw InvalidInput("box region '" + r.name + "' has non-positive extent");
        } else {
            const auto& t = std::get<PrismShape>(r.shape);
            if (!(t.x1 > t.x0) || !(t.height > 0) || !(t.base_width > 0) || t.top_width < 0)
                throw InvalidInput("prism region '" + r.name + "' has invalid dimensions");
        }
        if (r.role == RegionRole::Channel &&
            materials.at(r.material).role != MaterialRole::Semiconductor)
            throw InvalidInput("channel region '" + r.name + "' must be a semiconductor");
    }
    for (const auto& e : electrodes) {
        region_index(e.region);
    }
}

FinFetDimensions geo1_dimensions() { return FinFetDimensions{}; }

FinFetDimensions test_fin_dimensions() {
    FinFetDimensions d;
    d.channel_length = 12.0;
    d.lead_gate_length = 3.0;
    d.plunger_length = 3.0;
    d.gap_length = 1.5;
    d.sd_length = 1.0;
    d.substrate_height = 2.0;
    d.fin_base = 8.0;
    d.fin_top = 2.0;
    d.fin_height = 6.0;
    d.oxide_thickness = 1.5;
    d.gate_thickness = 2.0;
    d.lateral_margin = 3.0;
    return d;
}

DeviceGeometry make_finfet(const FinFetDimensions& d, const MaterialTable& materials) {
    const double gates = 2 * d.lead_gate_length + 2 * d.gap_length + d.plunger_length;
    if (std::abs(gates - d.channel_length) > 1e-9)
        throw InvalidInput("gate lengths and gaps must add up to the channel length");
    if (d.fin_top > d.fin_base) throw InvalidInput("fin top width exceeds base width");
    const double width = d.fin_base + 2 * d.lateral_margin;
    const double x_end = d.channel_length + 2 * d.sd_length;
    const double z_top = d.substrate_height + d.fin_height + d.oxide_thickness + d.gate_thickness;
    const double yc = 0.5 * width;
    const double zs = d.substrate_height;
    const double xc0 = d.sd_length, xc1 = d.sd_length + d.channel_length;
    if (d.fin_base + 2 * d.oxide_thickness > width + 1e-9)
        throw InvalidInput("oxide wrap wider than the device; increase the lateral margin");

    DeviceGeometry g;
    g.materials = materials;
    g.domain_lo = Vec3::Zero();
    g.domain_hi = Vec3(x_end, width, z_top);

    auto box = [](Vec3 lo, Vec3 hi) { return Shape(BoxShape{lo, hi}); };
    auto add = [&](std::string name, Shape s, std::string mat, double dop, RegionRole role) {
        g.regions.push_back(Region{std::move(name), std::move(s), std::move(mat), dop, role, std::nullopt});
    };
    const std::string ox = "SiO2";
    add("substrate", box(Vec3(0, 0, 0), Vec3(x_end, width, zs)), "Si", d.substrate_doping_cm3,
        RegionRole::Substrate);
    add("encapsulation", box(Vec3(0, 0, zs), Vec3(x_end, width, z_top)), ox, 0.0, RegionRole::Oxide);

    const double zg = zs + d.oxide_thickness;
    double x = xc0;
    add("gate_left", box(Vec3(x, 0, zg), Vec3(x + d.lead_gate_length, width, z_top)), d.gate_material, 0.0,
        RegionRole::Gate);
    x += d.lead_gate_length + d.gap_length;
    add("gate_plunger", box(Vec3(x, 0, zg), Vec3(x + d.plunger_length, width, z_top)), d.gate_material, 0.0,
        RegionRole::Gate);
    x += d.plunger_length + d.gap_length;
    add("gate_right", box(Vec3(x, 0, zg), Vec3(x + d.lead_gate_length, width, z_top)), d.gate_material, 0.0,
        RegionRole::Gate);

    PrismShape wrap{xc0, xc1, yc, zs, d.fin_height + d.oxide_thickness, d.fin_base + 2 * d.oxide_thickness,
                    d.fin_top + 2 * d.oxide_thickness};
    add("oxide_wrap", wrap, ox, 0.0, RegionRole::Oxide);
    PrismShape fin{xc0, xc1, yc, zs, d.fin_height, d.fin_base, d.fin_top};
    add("fin", fin, "Si", d.channel_doping_cm3, RegionRole::Channel);

    // Source and drain extensions own their interface planes with the channel.
    PrismShape src = fin;
    src.x0 = 0.0;
    src.x1 = xc0;
    PrismShape drn = fin;
    drn.x0 = xc1;
    drn.x1 = x_end;
    add("source", src, "Si", d.sd_doping_cm3, RegionRole::LeadExtension);
    add("drain", drn, "Si", d.sd_doping_cm3, RegionRole::LeadExtension);

    g.electrodes = {{"left", "gate_left", FaceSelect::Volume},
                    {"plunger", "gate_plunger", FaceSelect::Volume},
                    {"right", "gate_right", FaceSelect::Volume},
                    {"source", "source", FaceSelect::XMin},
                    {"drain", "drain", FaceSelect::XMax}};

    // Prism centroid height for a trapezoid: h (B + 2b) / (3 (B + b)).
    const double zc = d.fin_height * (d.fin_base + 2 * d.fin_top) / (3.0 * (d.fin_base + d.fin_top));
    g.dot_proxy = Vec3(0.5 * (xc0 + xc1), yc, zs + zc);
    g.validate();
    return g;
}

DeviceGeometry extend_lateral(const DeviceGeometry& g, double extension) {
    if (extension < 0) throw InvalidInput("lateral extension must be non-negative");
    DeviceGeometry out = g;
    const double y0 = g.domain_lo.y(), y1 = g.domain_hi.y();
    out.domain_lo.y() -= extension;
    out.domain_hi.y() += extension;
    for (auto& r : out.regions) {
        if (auto* b = std::get_if<BoxShape>(&r.shape)) {
            if (std::abs(b->lo.y() - y0) < 1e-9) b->lo.y() -= extension;
            if (std::abs(b->hi.y() - y1) < 1e-9) b->hi.y() += extension;
        }
    }
    return out;
}

bool Grid::same_as(const Grid& o, double tol) const {
    return n == o.n && (origin - o.origin).cwiseAbs().maxCoeff() <= tol &&
           (spacing - o.spacing).cwiseAbs().maxCoeff() <= tol;
}

std::pair<Grid, RegionMap> build_grid(const DeviceGeometry& geometry, const Vec3& spacing) {
    geometry.validate();
    if (!((spacing.array() > 0).all())) throw InvalidInput("grid spacings must be positive");
    Grid grid;
    grid.origin = geometry.domain_lo;
    grid.spacing = spacing;
    const Vec3 ext = geometry.domain_hi - geometry.domain_lo;
    for (int d = 0; d < 3; ++d) {
        const double cells = ext[d] / spacing[d];
        grid.n[d] = int(std::floor(cells + 1e-9)) + 1;
        if (grid.n[d] < 2) throw InvalidInput("grid spacing larger than the device extent");
    }
    RegionMap map;
    map.materials = geometry.materials;
    const std::size_t N = grid.size();
    map.region.assign(N, -1);
    map.material.assign(N, -1);
    map.doping_cm3.assign(N, 0.0);
    map.role.assign(N, RegionRole::Oxide);
    map.channel_mask.assign(N, 0);
    map.channel_index.assign(N, -1);
    std::vector<int> mat_index(geometry.regions.size());
    for (std::size_t r = 0; r < geometry.regions.size(); ++r)
        mat_index[r] = geometry.materials.index_of(geometry.regions[r].material);

    for (std::size_t idx = 0; idx < N; ++idx) {
        const Vec3 p = grid.position(idx);
        const int r = geometry.region_at(p);
        if (r < 0) {
            std::ostringstream os;
            os << "node at (" << p.x() << ", " << p.y() << ", " << p.z() << ") nm is not covered by any region";
            throw InvalidInput(os.str());
        }
        const auto& reg = geometry.regions[std::size_t(r)];
        map.region[idx] = r;
        map.material[idx] = mat_index[std::size_t(r)];
        map.doping_cm3[idx] = reg.doping_cm3;
        map.role[idx] = reg.role;
        if (reg.role == RegionRole::Channel) {
            map.channel_mask[idx] = 1;
            map.channel_index[idx] = long(map.channel_nodes.size());
            map.channel_nodes.push_back(idx);
        }
    }
    if (map.channel_nodes.empty()) throw InvalidInput("channel mask is empty");
    return {grid, std::move(map)};
}

const MaterialRecord& material_lookup(const Grid& grid, const RegionMap& map, std::array<int, 3> node) {
    if (!grid.contains(node[0], node[1], node[2])) throw std::out_of_range("node outside the grid");
    return map.materials.at(map.material[grid.index(node[0], node[1], node[2])]);
}

void BiasPoint::validate() const {
    for (double v : {V_plunger, V_left, V_right, V_source, V_drain})
        if (!std::isfinite(v)) throw InvalidInput("bias voltages must be finite");
    for (const auto& [k, v] : workfunction_offset)
        if (!std::isfinite(v)) throw InvalidInput("workfunction offset for '" + k + "' must be finite");
}

double BiasPoint::electrode_voltage(const std::string& name) const {
    double v;
    if (name == "plunger") v = V_plunger;
    else if (name == "left") v = V_left;
    else if (name == "right") v = V_right;
    else if (name == "source") v = V_source;
    else if (name == "drain") v = V_drain;
    else throw InvalidInput("unknown electrode '" + name + "'");
    auto it = workfunction_offset.find(name);
    return it == workfunction_offset.end() ? v : v + it->second;
}

Device Device::build(const DeviceGeometry& g, const Vec3& spacing) {
    auto [grid, map] = build_grid(g, spacing);
    return Device{g, grid, std::move(map)};
}

double Device::channel_volume() const { return double(map.channel_nodes.size()) * grid.cell_volume(); }

}  // namespace holespin
