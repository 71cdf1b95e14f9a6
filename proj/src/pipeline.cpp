#include "holespin/pipeline.hpp"

#include "holespin/constants.hpp"
#include "holespin/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>

namespace holespin {

using nlohmann::json;

json matrix_json(const Eigen::Matrix3d& m) {
    json a = json::array();
    for (int i = 0; i < 3; ++i) a.push_back({m(i, 0), m(i, 1), m(i, 2)});
    return a;
}

json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

StrainOutcome compute_strain(const RunConfig& cfg, const Device& device, const StrainSpec& spec) {
    StrainOutcome out;
    switch (spec.mode) {
    case StrainMode::None: break;
    case StrainMode::Uniform: out.fd = StrainField::uniform(device.grid, spec.uniform); break;
    case StrainMode::Import: out.fd = sample_strain_to_fd(import_strain(spec.path), device.grid); break;
    case StrainMode::BC1:
    case StrainMode::BC2: {
        ElasticityConfig ec = cfg.elasticity;
        ec.scenario = spec.mode == StrainMode::BC1 ? CoolingScenario::BC1 : CoolingScenario::BC2;
        out.elastic = run_cooldown(device.geometry, device.grid.spacing, ec);
        out.fd = sample_strain_to_fd(out.elastic->strain, device.grid);
        break;
    }
    }
    return out;
}

json strain_summary(const StrainField& eps, const Vec3& probe) {
    static const char* names[6] = {"exx", "eyy", "ezz", "exy", "exz", "eyz"};
    json j;
    std::array<double, 6> lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (const auto& v : eps.values)
        for (std::size_t c = 0; c < 6; ++c) {
            lo[c] = std::min(lo[c], v[c]);
            hi[c] = std::max(hi[c], v[c]);
        }
    const auto at = eps.interpolate(probe);
    for (std::size_t c = 0; c < 6; ++c) j["components"][names[c]] = {{"min", lo[c]}, {"max", hi[c]}, {"at_probe", at[c]}};
    j["probe_nm"] = vec_json(probe);
    return j;
}

SolveSummary summarize(const ConvergedState& state) {
    if (state.states.size() < 2) throw InvalidInput("summary needs at least two states");
    SolveSummary s;
    s.dot = dot_length(state.states.front());
    for (const auto& st : state.states) s.energies_meV.push_back(st.energy * 1e3);
    if (state.states.size() >= 3) s.delta_meV = (state.states[2].energy - state.states[0].energy) * 1e3;
    s.zeeman_ueV = zeeman_splitting(state.states, state.field.B.norm() > 0 ? &s.warning : nullptr) * 1e6;
    s.dot.splitting_meV = s.delta_meV;
    return s;
}

json solve_json(const ConvergedState& state, const SolveSummary& s, const StrainField* strain) {
    json j;
    j["converged"] = state.converged;
    j["scf_iterations"] = state.iterations;
    j["scf_final_residual_V"] = state.trace.empty() ? 0.0 : state.trace.back();
    j["bias_V"] = {{"plunger", state.bias.V_plunger}, {"left", state.bias.V_left}, {"right", state.bias.V_right},
                   {"source", state.bias.V_source}, {"drain", state.bias.V_drain}};
    j["field_T"] = vec_json(state.field.B);
    j["energies_meV"] = s.energies_meV;
    j["delta_meV"] = s.delta_meV;
    j["zeeman_splitting_ueV"] = s.zeeman_ueV;
    j["dot"] = {{"l_x_nm", s.dot.lengths.x()}, {"l_y_nm", s.dot.lengths.y()}, {"l_z_nm", s.dot.lengths.z()},
                {"l_dot_nm", s.dot.l_dot}, {"centroid_nm", vec_json(s.dot.centroid)}};
    j["band_mixing"] = {{"HH", s.dot.hh}, {"LH", s.dot.lh}, {"SO", s.dot.so}, {"components", s.dot.components}};
    if (strain) j["strain_at_dot"] = strain_summary(*strain, s.dot.centroid)["components"];
    if (!s.warning.empty()) j["warning"] = s.warning;
    return j;
}

Vec3 resolve_gauge_origin(const RunConfig& cfg, const ConvergedState& zero_field) {
    if (cfg.magnetics.gauge_origin) return *cfg.magnetics.gauge_origin;
    return dot_length(zero_field.states.front()).centroid;
}

std::vector<SpinorState> states_at_field(const HamiltonianBuilder& builder, const ConvergedState& zero_field,
                                         const MagneticFieldSpec& field, const RunConfig& cfg) {
    if (cfg.magnetics.self_consistent)
        return scf_solve(builder, zero_field.bias, field, cfg.scf, &zero_field.potential, &zero_field.states).states;
    const SparseHamiltonian H = builder.build(zero_field.potential.values, field);
    EigenOptions opt;
    opt.seed = cfg.scf.seed;
    opt.block = cfg.scf.eigen_block;
    opt.depth = cfg.scf.eigen_depth;
    opt.max_cycles = cfg.scf.eigen_max_cycles;
    const auto& zs = zero_field.states;
    const double sqrt_dv = std::sqrt(H.layout->grid.cell_volume());
    opt.initial.resize(zs.front().psi.size(), long(zs.size()));
    for (std::size_t s = 0; s < zs.size(); ++s) opt.initial.col(long(s)) = zs[s].psi * sqrt_dv;
    opt.shift = zs.front().energy - std::max(0.2 * (zs.back().energy - zs.front().energy), 1e-4);
    return lowest_states(H, cfg.scf.num_states, cfg.scf.eigen_tol, opt);
}

Eigen::Matrix3d g_matrix_of(const HamiltonianBuilder& builder, const ConvergedState& zero_field,
                            const KramersDoublet& doublet, const Vec3& gauge_origin, double dB) {
    const SparseHamiltonian ref = builder.build(zero_field.potential.values, MagneticFieldSpec{});
    std::array<Eigen::Matrix2cd, 3> M;
    for (int a = 0; a < 3; ++a) M[std::size_t(a)] = magnetic_operator_elements(doublet, ref, a, gauge_origin, dB);
    return build_g_matrix(M);
}

GOutcome compute_g(const HamiltonianBuilder& builder, const ConvergedState& zero_field, const RunConfig& cfg) {
    if (zero_field.field.B.norm() != 0.0) throw InvalidInput("g extraction needs a B = 0 state");
    if (zero_field.states.size() < 2) throw InvalidInput("g extraction needs the ground doublet");
    GOutcome out;
    out.gauge_origin = resolve_gauge_origin(cfg, zero_field);
    const double B = cfg.magnetics.B;
    const auto& dirs = six_directions();
    int strongest = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        MagneticFieldSpec f{B * dirs[i], out.gauge_origin};
        const auto st = states_at_field(builder, zero_field, f, cfg);
        std::string warn;
        out.splittings_eV[i] = zeeman_splitting(st, &warn);
        if (!warn.empty()) out.warnings.push_back(warn);
        if (out.splittings_eV[i] > out.splittings_eV[std::size_t(strongest)]) strongest = int(i);
    }
    out.G = reconstruct_g_tensor(out.splittings_eV, B);
    if (out.G.indefinite) out.warnings.push_back("G tensor is indefinite; the field may be outside the linear regime");
    {
        MagneticFieldSpec f{2.0 * B * dirs[std::size_t(strongest)], out.gauge_origin};
        const auto st = states_at_field(builder, zero_field, f, cfg);
        out.linearity_ratio = zeeman_splitting(st) / out.splittings_eV[std::size_t(strongest)];
        if (std::abs(out.linearity_ratio - 2.0) > 0.02) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "splitting not linear in B: 2B/B ratio %.6f", out.linearity_ratio);
            out.warnings.push_back(buf);
        }
    }
    const KramersDoublet d = make_doublet(zero_field.states[0], zero_field.states[1]);
    out.g = g_matrix_of(builder, zero_field, d, out.gauge_origin, cfg.magnetics.dB);
    out.g_singular = g_matrix_singular_values(out.g);
    for (int i = 0; i < 3; ++i)
        out.consistency[i] = out.G.principal[i] > 0 ? out.g_singular[i] / out.G.principal[i] : 0.0;
    return out;
}

json g_json(const GOutcome& g) {
    json j;
    j["gauge_origin_nm"] = vec_json(g.gauge_origin);
    j["six_direction"] = {
        {"splittings_ueV", {g.splittings_eV[0] * 1e6, g.splittings_eV[1] * 1e6, g.splittings_eV[2] * 1e6,
                            g.splittings_eV[3] * 1e6, g.splittings_eV[4] * 1e6, g.splittings_eV[5] * 1e6}},
        {"directions", {"x", "y", "z", "xy", "xz", "yz"}},
        {"G", matrix_json(g.G.G)},
        {"principal_g", vec_json(g.G.principal)},
        {"principal_axes", {vec_json(g.G.axes.col(0)), vec_json(g.G.axes.col(1)), vec_json(g.G.axes.col(2))}},
        {"indefinite", g.G.indefinite}};
    j["g_matrix"] = {{"g", matrix_json(g.g)}, {"singular_values", vec_json(g.g_singular)}};
    j["consistency_ratio"] = vec_json(g.consistency);
    j["linearity_ratio_2B"] = g.linearity_ratio;
    j["warnings"] = g.warnings;
    return j;
}

RabiOutcome compute_rabi(const HamiltonianBuilder& builder, const ConvergedState& zero_field, const RunConfig& cfg) {
    cfg.rabi.validate();
    RabiOutcome out;
    const Vec3 origin = resolve_gauge_origin(cfg, zero_field);
    const KramersDoublet ref = make_doublet(zero_field.states[0], zero_field.states[1]);
    out.g = g_matrix_of(builder, zero_field, ref, origin, cfg.magnetics.dB);
    auto at_bias = [&](double dv) {
        BiasPoint b = zero_field.bias;
        b.V_plunger += dv;
        const ConvergedState s = scf_solve(builder, b, MagneticFieldSpec{}, cfg.scf, &zero_field.potential, &zero_field.states);
        const KramersDoublet d = align_doublet(make_doublet(s.states[0], s.states[1]), ref);
        return g_matrix_of(builder, s, d, origin, cfg.magnetics.dB);
    };
    out.g_minus = at_bias(-cfg.rabi.dV);
    out.g_plus = at_bias(cfg.rabi.dV);
    out.dg = g_matrix_derivative(out.g_minus, out.g_plus, cfg.rabi.dV);
    out.map = rabi_map(out.g, out.dg, cfg.rabi);
    for (std::size_t i = 0; i < out.map.theta_deg.size(); ++i)
        for (std::size_t k = 0; k < out.map.phi_deg.size(); ++k)
            if (out.map.at(i, k) > out.max_MHz) {
                out.max_MHz = out.map.at(i, k);
                out.max_theta = out.map.theta_deg[i];
                out.max_phi = out.map.phi_deg[k];
            }
    const double arg = cfg.rabi.mode == RabiMode::FixedLarmor ? cfg.rabi.f_L_GHz : cfg.rabi.B;
    out.f_90_90_MHz = rabi_frequency(out.g, out.dg, direction_from_angles(90, 90), cfg.rabi.V_ac, arg, cfg.rabi.mode);
    return out;
}

json rabi_json(const RabiOutcome& r, const RabiConfig& cfg) {
    json j;
    j["mode"] = cfg.mode == RabiMode::FixedLarmor ? "fixed_larmor" : "fixed_field";
    if (cfg.mode == RabiMode::FixedLarmor) j["f_L_GHz"] = cfg.f_L_GHz;
    else j["B_T"] = cfg.B;
    j["V_ac_V"] = cfg.V_ac;
    j["delta_V_V"] = cfg.dV;
    j["g"] = matrix_json(r.g);
    j["g_minus"] = matrix_json(r.g_minus);
    j["g_plus"] = matrix_json(r.g_plus);
    j["dg_per_V"] = matrix_json(r.dg);
    j["max_f_R_MHz"] = r.max_MHz;
    j["max_orientation_deg"] = {{"theta", r.max_theta}, {"phi", r.max_phi}};
    j["f_R_theta90_phi90_MHz"] = r.f_90_90_MHz;
    return j;
}

}  // namespace holespin
