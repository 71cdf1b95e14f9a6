#include "holespin/config.hpp"

#include "holespin/errors.hpp"
#include "holespin/manifest.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace holespin {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

/// Object view that remembers which keys were read so leftovers can be rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }
    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() == 0) finish();
    }
    Section(const Section&) = delete;

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }
    const json* find(const std::string& key) { return has(key) ? &j_.at(key) : nullptr; }

    double number(const std::string& key, double def) {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_number()) fail(key_path(key), "expected a number");
        return v->get<double>();
    }
    int integer(const std::string& key, int def) {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_number_integer()) fail(key_path(key), "expected an integer");
        return v->get<int>();
    }
    bool boolean(const std::string& key, bool def) {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_boolean()) fail(key_path(key), "expected true or false");
        return v->get<bool>();
    }
    std::string string(const std::string& key, const std::string& def) {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_string()) fail(key_path(key), "expected a string");
        return v->get<std::string>();
    }
    Vec3 vec3(const std::string& key, const Vec3& def) {
        const json* v = find(key);
        return v ? to_vec3(*v, key_path(key)) : def;
    }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(key_path(it.key()), "unknown key");
        seen_.clear();
        for (auto it = j_.begin(); it != j_.end(); ++it) seen_.insert(it.key());
    }

    static Vec3 to_vec3(const json& v, const std::string& path) {
        if (!v.is_array() || v.size() != 3) fail(path, "expected an array of three numbers");
        Vec3 out;
        for (int i = 0; i < 3; ++i) {
            if (!v[std::size_t(i)].is_number()) fail(path, "expected an array of three numbers");
            out[i] = v[std::size_t(i)].get<double>();
        }
        return out;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

const json kEmpty = json::object();

const json& section_json(const json& root, const std::string& key) {
    return root.contains(key) ? root.at(key) : kEmpty;
}

template <class F>
void wrap(const std::string& path, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidInput& e) {
        fail(path, e.what());
    }
}

void read_dimensions(Section& s, FinFetDimensions& d) {
    d.channel_length = s.number("channel_length_nm", d.channel_length);
    d.lead_gate_length = s.number("lead_gate_length_nm", d.lead_gate_length);
    d.plunger_length = s.number("plunger_length_nm", d.plunger_length);
    d.gap_length = s.number("gap_length_nm", d.gap_length);
    d.sd_length = s.number("sd_length_nm", d.sd_length);
    d.substrate_height = s.number("substrate_height_nm", d.substrate_height);
    d.fin_base = s.number("fin_base_nm", d.fin_base);
    d.fin_top = s.number("fin_top_nm", d.fin_top);
    d.fin_height = s.number("fin_height_nm", d.fin_height);
    d.oxide_thickness = s.number("oxide_thickness_nm", d.oxide_thickness);
    d.gate_thickness = s.number("gate_thickness_nm", d.gate_thickness);
    d.lateral_margin = s.number("lateral_margin_nm", d.lateral_margin);
    d.channel_doping_cm3 = s.number("channel_doping_cm3", d.channel_doping_cm3);
    d.sd_doping_cm3 = s.number("sd_doping_cm3", d.sd_doping_cm3);
    d.substrate_doping_cm3 = s.number("substrate_doping_cm3", d.substrate_doping_cm3);
    d.gate_material = s.string("gate_material", d.gate_material);
}

MaterialRole material_role_from_string(const std::string& s, const std::string& path) {
    if (s == "semiconductor") return MaterialRole::Semiconductor;
    if (s == "oxide") return MaterialRole::Oxide;
    if (s == "metal") return MaterialRole::Metal;
    fail(path, "unknown material role '" + s + "' (semiconductor, oxide, metal)");
}

void read_materials(const json& j, MaterialTable& table) {
    if (!j.is_object()) fail("materials", "expected an object keyed by material name");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string path = "materials." + it.key();
        Section s(it.value(), path);
        MaterialRecord m;
        if (table.contains(it.key())) {
            m = table.at(it.key());
        } else {
            m.name = it.key();
            if (!s.has("role")) fail(path, "new materials must declare a role");
        }
        if (s.has("role")) m.role = material_role_from_string(s.string("role", ""), s.key_path("role"));
        m.young_E = s.number("young_E_GPa", m.young_E);
        m.thermal_alpha = s.number("thermal_alpha_per_K", m.thermal_alpha);
        m.poisson_nu = s.number("poisson_nu", m.poisson_nu);
        m.gamma1 = s.number("gamma1", m.gamma1);
        m.gamma2 = s.number("gamma2", m.gamma2);
        m.gamma3 = s.number("gamma3", m.gamma3);
        m.delta0_SO = s.number("delta0_eV", m.delta0_SO);
        m.kappa = s.number("kappa", m.kappa);
        m.def_pot_av = s.number("a_v_eV", m.def_pot_av);
        m.def_pot_b = s.number("b_eV", m.def_pot_b);
        m.def_pot_d = s.number("d_eV", m.def_pot_d);
        m.rel_permittivity = s.number("rel_permittivity", m.rel_permittivity);
        wrap(path, [&] { table.set(m); });
    }
}

Shape read_shape(const json& j, const std::string& path) {
    Section s(j, path);
    const std::string type = s.string("type", "");
    if (type == "box") {
        BoxShape b;
        if (!s.has("lo_nm") || !s.has("hi_nm")) fail(path, "box needs lo_nm and hi_nm");
        b.lo = s.vec3("lo_nm", Vec3::Zero());
        b.hi = s.vec3("hi_nm", Vec3::Zero());
        return b;
    }
    if (type == "prism") {
        PrismShape p;
        p.x0 = s.number("x0_nm", p.x0);
        p.x1 = s.number("x1_nm", p.x1);
        p.y_center = s.number("y_center_nm", p.y_center);
        p.z_base = s.number("z_base_nm", p.z_base);
        p.height = s.number("height_nm", p.height);
        p.base_width = s.number("base_width_nm", p.base_width);
        p.top_width = s.number("top_width_nm", p.top_width);
        return p;
    }
    fail(s.key_path("type"), "expected 'box' or 'prism'");
}

DeviceGeometry read_custom_geometry(Section& dev, const MaterialTable& materials) {
    DeviceGeometry g;
    g.materials = materials;
    if (!dev.has("domain")) fail("device", "custom geometry needs a domain");
    {
        Section d(dev.raw("domain"), "device.domain");
        g.domain_lo = d.vec3("lo_nm", Vec3::Zero());
        g.domain_hi = d.vec3("hi_nm", Vec3::Zero());
    }
    if (!dev.has("regions") || !dev.raw("regions").is_array()) fail("device.regions", "expected an array");
    const json& regions = dev.raw("regions");
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const std::string path = "device.regions[" + std::to_string(i) + "]";
        Section r(regions[i], path);
        Region reg;
        reg.name = r.string("name", "");
        if (reg.name.empty()) fail(path, "region needs a name");
        if (!r.has("shape")) fail(path, "region needs a shape");
        reg.shape = read_shape(r.raw("shape"), path + ".shape");
        reg.material = r.string("material", "");
        reg.doping_cm3 = r.number("doping_cm3", 0.0);
        wrap(path + ".role", [&] { reg.role = region_role_from_string(r.string("role", "oxide")); });
        if (r.has("priority")) reg.priority = r.integer("priority", 0);
        g.regions.push_back(std::move(reg));
    }
    if (dev.has("electrodes")) {
        const json& el = dev.raw("electrodes");
        if (!el.is_array()) fail("device.electrodes", "expected an array");
        for (std::size_t i = 0; i < el.size(); ++i) {
            const std::string path = "device.electrodes[" + std::to_string(i) + "]";
            Section e(el[i], path);
            ElectrodeSpec spec;
            spec.name = e.string("name", "");
            spec.region = e.string("region", "");
            wrap(path + ".face", [&] { spec.face = face_from_string(e.string("face", "volume")); });
            g.electrodes.push_back(spec);
        }
    }
    g.dot_proxy = dev.vec3("dot_proxy_nm", 0.5 * (g.domain_lo + g.domain_hi));
    wrap("device", [&] { g.validate(); });
    return g;
}

void read_device(const json& root, RunConfig& cfg, const MaterialTable& materials) {
    Section dev(section_json(root, "device"), "device");
    cfg.preset = dev.string("preset", "test_fin");
    if (cfg.preset == "test_fin") cfg.dims = test_fin_dimensions();
    else if (cfg.preset == "geo1") cfg.dims = geo1_dimensions();
    else if (cfg.preset != "custom") fail("device.preset", "expected test_fin, geo1 or custom");

    if (cfg.preset == "custom") {
        cfg.geometry = read_custom_geometry(dev, materials);
    } else {
        if (dev.has("dimensions")) {
            Section d(dev.raw("dimensions"), "device.dimensions");
            read_dimensions(d, cfg.dims);
        }
        wrap("device.dimensions", [&] { cfg.geometry = make_finfet(cfg.dims, materials); });
    }
    if (dev.has("crystal_axes")) {
        Section a(dev.raw("crystal_axes"), "device.crystal_axes");
        const Vec3 x = a.vec3("x", Vec3::UnitX()), y = a.vec3("y", Vec3::UnitY()), z = a.vec3("z", Vec3::UnitZ());
        wrap("device.crystal_axes", [&] { cfg.frame = CrystalFrame::from_axes(x, y, z); });
    }
}

StrainSpec read_strain(const json& root, const std::string& base_dir) {
    Section s(section_json(root, "strain"), "strain");
    StrainSpec spec;
    wrap("strain.scenario", [&] { spec = parse_strain_scenario(s.string("scenario", "none")); });
    if (spec.mode == StrainMode::Import) {
        fs::path p(spec.path);
        if (p.is_relative()) p = fs::path(base_dir) / p;
        spec.path = p.lexically_normal().string();
    }
    if (s.has("uniform")) {
        if (spec.mode != StrainMode::Uniform) fail("strain.uniform", "only valid with scenario 'uniform'");
        const json& u = s.raw("uniform");
        if (!u.is_array() || u.size() != 6) fail("strain.uniform", "expected six numbers (xx, yy, zz, xy, xz, yz)");
        for (std::size_t i = 0; i < 6; ++i) {
            if (!u[i].is_number()) fail("strain.uniform", "expected six numbers (xx, yy, zz, xy, xz, yz)");
            spec.uniform[i] = u[i].get<double>();
        }
    } else if (spec.mode == StrainMode::Uniform) {
        fail("strain.uniform", "scenario 'uniform' needs the six components");
    }
    return spec;
}

void read_sweep(const json& root, RunConfig& cfg, const std::string& base_dir) {
    if (!root.contains("sweep")) return;
    Section s(root.at("sweep"), "sweep");
    SweepConfig sw;
    const std::string axis = s.string("axis", "bias");
    if (axis == "bias") sw.axis = SweepAxis::Bias;
    else if (axis == "b_direction") sw.axis = SweepAxis::BDirection;
    else if (axis == "geometry") sw.axis = SweepAxis::Geometry;
    else if (axis == "strain") sw.axis = SweepAxis::Strain;
    else fail("sweep.axis", "expected bias, b_direction, geometry or strain");
    if (!s.has("points") || !s.raw("points").is_array() || s.raw("points").empty())
        fail("sweep.points", "expected a non-empty array");
    const json& pts = s.raw("points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string path = "sweep.points[" + std::to_string(i) + "]";
        const json& v = pts[i];
        SweepPoint p;
        p.dims = cfg.dims;
        p.strain = cfg.strain;
        switch (sw.axis) {
        case SweepAxis::Bias:
            if (!v.is_number()) fail(path, "expected a plunger voltage");
            p.V_plunger = v.get<double>();
            p.label = "V_plunger=" + v.dump();
            break;
        case SweepAxis::BDirection:
            if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
                fail(path, "expected [theta_deg, phi_deg]");
            p.theta_deg = v[0].get<double>();
            p.phi_deg = v[1].get<double>();
            p.label = "theta=" + v[0].dump() + ",phi=" + v[1].dump();
            break;
        case SweepAxis::Geometry: {
            if (cfg.preset == "custom") fail(path, "geometry sweeps need a fin preset");
            Section g(v, path);
            p.label = g.string("label", "geometry_" + std::to_string(i));
            read_dimensions(g, p.dims);
            break;
        }
        case SweepAxis::Strain: {
            if (!v.is_string()) fail(path, "expected a strain scenario string");
            const json sub = {{"scenario", v}};
            if (v.get<std::string>() == "uniform") fail(path, "uniform strain cannot be swept by name");
            p.strain = read_strain(json{{"strain", sub}}, base_dir);
            p.label = v.get<std::string>();
            break;
        }
        }
        sw.points.push_back(std::move(p));
    }
    cfg.sweep = std::move(sw);
}

}  // namespace

std::string StrainSpec::label() const {
    switch (mode) {
    case StrainMode::None: return "none";
    case StrainMode::BC1: return "bc1";
    case StrainMode::BC2: return "bc2";
    case StrainMode::Import: return "import:" + path;
    case StrainMode::Uniform: return "uniform";
    }
    return "none";
}

StrainSpec parse_strain_scenario(const std::string& s) {
    StrainSpec spec;
    if (s == "none") spec.mode = StrainMode::None;
    else if (s == "bc1") spec.mode = StrainMode::BC1;
    else if (s == "bc2") spec.mode = StrainMode::BC2;
    else if (s == "uniform") spec.mode = StrainMode::Uniform;
    else if (s.rfind("import:", 0) == 0 && s.size() > 7) {
        spec.mode = StrainMode::Import;
        spec.path = s.substr(7);
    } else {
        throw InvalidInput("unknown strain scenario '" + s + "' (bc1, bc2, none, uniform, import:<path>)");
    }
    return spec;
}

Device RunConfig::make_device() const { return Device::build(geometry, spacing); }

Device RunConfig::make_device(const FinFetDimensions& d) const {
    if (preset == "custom") return make_device();
    return Device::build(make_finfet(d, geometry.materials), spacing);
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    {
        Section top(root, "");
        for (const char* k : {"device", "materials", "grid", "bias", "elasticity", "strain", "scf", "eigen", "magnetics",
                              "rabi", "sweep", "output"})
            top.has(k);
    }

    MaterialTable materials;
    if (root.contains("materials")) read_materials(root.at("materials"), materials);
    read_device(root, cfg, materials);

    {
        Section g(section_json(root, "grid"), "grid");
        if (g.has("spacing_nm")) {
            const json& v = g.raw("spacing_nm");
            if (v.is_number()) cfg.spacing = Vec3::Constant(v.get<double>());
            else cfg.spacing = Section::to_vec3(v, "grid.spacing_nm");
        }
        if (!((cfg.spacing.array() > 0).all())) fail("grid.spacing_nm", "spacings must be positive");
    }
    {
        Section b(section_json(root, "bias"), "bias");
        cfg.bias.V_plunger = b.number("V_plunger", 0.0);
        cfg.bias.V_left = b.number("V_left", 0.0);
        cfg.bias.V_right = b.number("V_right", 0.0);
        cfg.bias.V_source = b.number("V_source", 0.0);
        cfg.bias.V_drain = b.number("V_drain", 0.0);
        if (b.has("workfunction_offset_V")) {
            const json& w = b.raw("workfunction_offset_V");
            if (!w.is_object()) fail("bias.workfunction_offset_V", "expected an object keyed by electrode");
            for (auto it = w.begin(); it != w.end(); ++it) {
                if (!it.value().is_number()) fail("bias.workfunction_offset_V." + it.key(), "expected a number");
                cfg.bias.workfunction_offset[it.key()] = it.value().get<double>();
            }
        }
        wrap("bias", [&] { cfg.bias.validate(); });
    }
    {
        Section e(section_json(root, "elasticity"), "elasticity");
        auto& ec = cfg.elasticity;
        ec.T_rt = e.number("T_rt_K", ec.T_rt);
        ec.T_cool = e.number("T_cool_K", ec.T_cool);
        ec.lateral_extension = e.number("lateral_extension_nm", ec.lateral_extension);
        ec.coarsen = e.integer("coarsen", ec.coarsen);
        ec.tol = e.number("tol", ec.tol);
    }
    cfg.strain = read_strain(root, base_dir);
    switch (cfg.strain.mode) {
    case StrainMode::BC1: cfg.elasticity.scenario = CoolingScenario::BC1; break;
    case StrainMode::BC2: cfg.elasticity.scenario = CoolingScenario::BC2; break;
    case StrainMode::Import:
        cfg.elasticity.scenario = CoolingScenario::Imported;
        cfg.elasticity.import_path = cfg.strain.path;
        break;
    default: cfg.elasticity.scenario = CoolingScenario::None; break;
    }
    wrap("elasticity", [&] { cfg.elasticity.validate(); });
    {
        Section s(section_json(root, "scf"), "scf");
        auto& sc = cfg.scf;
        sc.max_iterations = s.integer("max_iterations", sc.max_iterations);
        sc.beta = s.number("beta", sc.beta);
        sc.anderson_depth = s.integer("anderson_depth", sc.anderson_depth);
        sc.tol = s.number("tol_V", sc.tol);
        sc.num_states = s.integer("num_states", sc.num_states);
        sc.hole_count = s.number("hole_count", sc.hole_count);
        sc.temperature = s.number("temperature_K", sc.temperature);
        sc.oscillation_window = s.integer("oscillation_window", sc.oscillation_window);
        if (s.has("seed")) {
            const json& v = s.raw("seed");
            if (!v.is_number_unsigned()) fail("scf.seed", "expected a non-negative integer");
            sc.seed = v.get<std::uint64_t>();
        }
        sc.restart_path = s.string("restart_path", sc.restart_path);
        if (!sc.restart_path.empty() && fs::path(sc.restart_path).is_relative())
            sc.restart_path = (fs::path(base_dir) / sc.restart_path).lexically_normal().string();
        sc.trace_log = s.string("trace_log", sc.trace_log);
    }
    {
        Section e(section_json(root, "eigen"), "eigen");
        auto& sc = cfg.scf;
        sc.eigen_tol = e.number("tol_eV", sc.eigen_tol);
        sc.eigen_block = e.integer("block", sc.eigen_block);
        sc.eigen_depth = e.integer("depth", sc.eigen_depth);
        sc.eigen_max_cycles = e.integer("max_cycles", sc.eigen_max_cycles);
    }
    wrap("scf", [&] { cfg.scf.validate(); });
    {
        Section m(section_json(root, "magnetics"), "magnetics");
        auto& mc = cfg.magnetics;
        mc.B = m.number("B_T", mc.B);
        if (!(mc.B > 0)) fail("magnetics.B_T", "must be positive");
        if (m.has("gauge_origin_nm")) {
            const json& v = m.raw("gauge_origin_nm");
            if (!(v.is_string() && v.get<std::string>() == "auto")) mc.gauge_origin = Section::to_vec3(v, "magnetics.gauge_origin_nm");
        }
        mc.dB = m.number("delta_B_T", mc.dB);
        if (!(mc.dB > 0)) fail("magnetics.delta_B_T", "must be positive");
        mc.self_consistent = m.boolean("self_consistent", mc.self_consistent);
        if (m.has("fields_T")) {
            const json& f = m.raw("fields_T");
            if (!f.is_array()) fail("magnetics.fields_T", "expected an array of [Bx, By, Bz]");
            for (std::size_t i = 0; i < f.size(); ++i)
                mc.fields.push_back(Section::to_vec3(f[i], "magnetics.fields_T[" + std::to_string(i) + "]"));
        }
    }
    {
        Section r(section_json(root, "rabi"), "rabi");
        auto& rc = cfg.rabi;
        rc.V_ac = r.number("V_ac_V", rc.V_ac);
        rc.dV = r.number("delta_V_V", rc.dV);
        const std::string mode = r.string("mode", "fixed_larmor");
        if (mode == "fixed_larmor") rc.mode = RabiMode::FixedLarmor;
        else if (mode == "fixed_field") rc.mode = RabiMode::FixedField;
        else fail("rabi.mode", "expected fixed_larmor or fixed_field");
        rc.f_L_GHz = r.number("f_L_GHz", rc.f_L_GHz);
        rc.B = r.number("B_T", rc.B);
        rc.theta_steps = r.integer("theta_steps", rc.theta_steps);
        rc.phi_steps = r.integer("phi_steps", rc.phi_steps);
        wrap("rabi", [&] { rc.validate(); });
    }
    read_sweep(root, cfg, base_dir);
    {
        Section o(section_json(root, "output"), "output");
        cfg.output_dir = o.string("dir", cfg.output_dir);
    }

    cfg.canonical_json = root.dump();
    cfg.hash = sha256_hex(cfg.canonical_json);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const fs::path dir = fs::path(path).parent_path();
    return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

}  // namespace holespin
