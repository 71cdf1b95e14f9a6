#include "commands.hpp"

#include "holespin/constants.hpp"
#include "holespin/errors.hpp"
#include "holespin/manifest.hpp"
#include "holespin/pipeline.hpp"

#include <algorithm>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace holespin::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::mutex log_mutex;

void note(bool quiet, const std::string& msg) {
    if (quiet) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    std::cerr << msg << '\n';
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in '" + path + "': " + e.what());
    }
}

/// Shared bookkeeping for one command invocation: config, output directory and manifest.
class Run {
public:
    Run(const Options& o, const std::string& command) : quiet(o.quiet) {
        if (o.config_path.empty()) throw ConfigError("--config is required");
        cfg = load_config(o.config_path);
        out = o.out_dir.empty() ? cfg.output_dir : o.out_dir;
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw IoError("cannot create output directory '" + out + "': " + ec.message());
        manifest.command = command;
        manifest.tool_version = HOLESPIN_VERSION;
        manifest.config_hash = cfg.hash;
        manifest.started_utc = utc_timestamp();
        manifest.add_input(o.config_path, out);
    }

    std::string path(const std::string& name) const { return (fs::path(out) / name).string(); }
    void output(const std::string& file) { manifest.add_output(file, out); }

    template <class F>
    auto stage(const std::string& name, F&& f) {
        note(quiet, "[" + manifest.command + "] " + name);
        const auto t0 = std::chrono::steady_clock::now();
        auto finish = [&] {
            manifest.stages.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
        };
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            finish();
        } else {
            auto r = f();
            finish();
            return r;
        }
    }

    void finish() {
        manifest.finished_utc = utc_timestamp();
        manifest.write(path("manifest_" + manifest.command + ".json"));
    }

    json header() const { return {{"tool_version", HOLESPIN_VERSION}, {"config_hash", cfg.hash}}; }

    RunConfig cfg;
    std::string out;
    RunManifest manifest;
    bool quiet;
};

std::string scenario_name(const StrainSpec& s) { return s.mode == StrainMode::Import ? "import" : s.label(); }

void write_vector_csv(const std::string& path, const Grid& g, const std::vector<std::string>& names,
                      const double* data, std::size_t stride) {
    std::vector<const double*> cols;
    for (std::size_t c = 0; c < names.size(); ++c) cols.push_back(data + c);
    write_node_csv(path, g, names, cols, stride);
}

/// Device, strain and Hamiltonian builder for one configuration.
struct Model {
    Device device;
    StrainOutcome strain;
    std::unique_ptr<HamiltonianBuilder> builder;

    Model(const RunConfig& cfg, const FinFetDimensions* dims, const StrainSpec& spec, Run* run) {
        auto build = [&] { device = dims ? cfg.make_device(*dims) : cfg.make_device(); };
        auto strain_step = [&] { strain = compute_strain(cfg, device, spec); };
        if (run) {
            run->stage("device", build);
            run->stage("strain", strain_step);
        } else {
            build();
            strain_step();
        }
        builder = std::make_unique<HamiltonianBuilder>(device, cfg.frame, strain.fd ? &*strain.fd : nullptr);
    }
    const StrainField* strain_field() const { return strain.fd ? &*strain.fd : nullptr; }
};

ScfConfig scf_with_log(const RunConfig& cfg, const std::string& log_path) {
    ScfConfig s = cfg.scf;
    if (s.trace_log.empty() && !log_path.empty()) {
        std::ofstream(log_path, std::ios::trunc);
        s.trace_log = log_path;
    }
    return s;
}

/// B = 0 state: explicit file, a matching state from a previous solve in the output directory, or a fresh solve.
ConvergedState zero_field_state(Run& run, const Model& m, const Options& o) {
    std::string path = o.state_path;
    if (path.empty()) {
        const std::string cand = run.path("state.bin"), meta = run.path("metrics.json");
        if (fs::exists(cand) && fs::exists(meta)) {
            const json j = read_json(meta);
            if (j.value("config_hash", "") == run.cfg.hash) path = cand;
        }
    }
    if (!path.empty()) {
        note(run.quiet, "[" + run.manifest.command + "] reusing state " + path);
        run.manifest.add_input(path, run.out);
        ConvergedState s = load_state(path, &m.device);
        if (s.field.B.norm() != 0.0) throw InvalidInput("state '" + path + "' was computed at B != 0");
        return s;
    }
    return run.stage("scf", [&] { return scf_solve(*m.builder, run.cfg.bias, MagneticFieldSpec{}, run.cfg.scf); });
}

}  // namespace

int report_exception() {
    try {
        throw;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_strain(const Options& o) {
    Run run(o, "strain");
    Model m(run.cfg, nullptr, run.cfg.strain, &run);
    const StrainField eps = m.strain.fd ? *m.strain.fd : StrainField::zero(m.device.grid);
    run.stage("write", [&] {
        export_strain(run.path("strain.csv"), eps);
        run.output(run.path("strain.csv"));
        if (m.strain.elastic) {
            const auto& e = *m.strain.elastic;
            write_vector_csv(run.path("displacement.csv"), e.displacement.grid, {"ux_nm", "uy_nm", "uz_nm"},
                             e.displacement.u.data(), 3);
            write_vector_csv(run.path("stress.csv"), e.stress.grid,
                             {"sxx_Pa", "syy_Pa", "szz_Pa", "sxy_Pa", "sxz_Pa", "syz_Pa"}, e.stress.values.front().data(), 6);
            run.output(run.path("displacement.csv"));
            run.output(run.path("stress.csv"));
        }
        json j = run.header();
        j["scenario"] = scenario_name(run.cfg.strain);
        j["fd_grid"] = strain_summary(eps, m.device.geometry.dot_proxy);
        if (m.strain.elastic) {
            const auto& e = *m.strain.elastic;
            j["elastic_mesh_nodes"] = e.mesh.nodes.size();
            j["solver_residual_history"] = e.displacement.residual_history;
        }
        write_json(run.path("strain_summary.json"), j);
        run.output(run.path("strain_summary.json"));
    });
    run.finish();
    return 0;
}

int cmd_solve(const Options& o) {
    Run run(o, "solve");
    Model m(run.cfg, nullptr, run.cfg.strain, &run);
    const ScfConfig scf = scf_with_log(run.cfg, run.path("scf_trace.txt"));
    std::optional<ConvergedState> warm;
    if (!o.warm_start.empty()) {
        warm = load_state(o.warm_start, &m.device);
        run.manifest.add_input(o.warm_start, run.out);
    }
    const ConvergedState st = run.stage("scf", [&] {
        return scf_solve(*m.builder, run.cfg.bias, MagneticFieldSpec{}, scf, warm ? &warm->potential : nullptr,
                         warm ? &warm->states : nullptr);
    });
    json j = run.header();
    j["strain_scenario"] = scenario_name(run.cfg.strain);
    j["warm_start"] = warm.has_value();
    j["solution"] = solve_json(st, summarize(st), m.strain_field());
    run.stage("write", [&] {
        save_state(run.path("state.bin"), st);
        export_scalar(run.path("potential.csv"), st.potential, "phi_V");
        run.output(run.path("state.bin"));
        run.output(run.path("potential.csv"));
    });
    if (!run.cfg.magnetics.fields.empty()) {
        const Vec3 origin = resolve_gauge_origin(run.cfg, st);
        json fields = json::array();
        for (std::size_t i = 0; i < run.cfg.magnetics.fields.size(); ++i) {
            const MagneticFieldSpec f{run.cfg.magnetics.fields[i], origin};
            const ConvergedState sb = run.stage("field_" + std::to_string(i), [&] {
                return scf_solve(*m.builder, run.cfg.bias, f, run.cfg.scf, &st.potential, &st.states);
            });
            const std::string name = "state_field_" + std::to_string(i) + ".bin";
            save_state(run.path(name), sb);
            run.output(run.path(name));
            json fj = solve_json(sb, summarize(sb), nullptr);
            fj["gauge_origin_nm"] = vec_json(origin);
            fields.push_back(fj);
        }
        j["fields"] = fields;
    }
    write_json(run.path("metrics.json"), j);
    run.output(run.path("metrics.json"));
    if (fs::exists(run.path("scf_trace.txt"))) run.output(run.path("scf_trace.txt"));
    run.finish();
    return 0;
}

int cmd_gtensor(const Options& o) {
    Run run(o, "gtensor");
    Model m(run.cfg, nullptr, run.cfg.strain, &run);
    const ConvergedState st = zero_field_state(run, m, o);
    const GOutcome g = run.stage("g", [&] { return compute_g(*m.builder, st, run.cfg); });
    for (const auto& w : g.warnings) std::cerr << "warning: " << w << '\n';
    json j = run.header();
    j["B_T"] = run.cfg.magnetics.B;
    j["gtensor"] = g_json(g);
    write_json(run.path("gtensor.json"), j);
    write_g_polar_csv(run.path("g_polar.csv"), g.G.G);
    run.output(run.path("gtensor.json"));
    run.output(run.path("g_polar.csv"));
    run.finish();
    return 0;
}

int cmd_rabi(const Options& o) {
    Run run(o, "rabi");
    Model m(run.cfg, nullptr, run.cfg.strain, &run);
    const ConvergedState st = zero_field_state(run, m, o);
    const RabiOutcome r = run.stage("rabi", [&] { return compute_rabi(*m.builder, st, run.cfg); });
    r.map.write_csv(run.path("rabi_map.csv"));
    json j = run.header();
    j["rabi"] = rabi_json(r, run.cfg.rabi);
    write_json(run.path("rabi.json"), j);
    run.output(run.path("rabi_map.csv"));
    run.output(run.path("rabi.json"));
    run.finish();
    return 0;
}

namespace {

struct Row {
    std::string label, status = "ok", message;
    json values = json::object();
    int exit_code = 0;
};

int worker_count(const Options& o) {
    if (o.workers > 0) return o.workers;
    if (const char* env = std::getenv("HOLESPIN_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw ConfigError("HOLESPIN_WORKERS must be a positive integer");
        return int(v);
    }
    return 1;
}

json row_values(const ConvergedState& st) {
    const SolveSummary s = summarize(st);
    return {{"converged", st.converged},       {"scf_iterations", st.iterations},
            {"E0_meV", s.energies_meV.front()}, {"delta_meV", s.delta_meV},
            {"l_dot_nm", s.dot.l_dot},          {"HH", s.dot.hh},
            {"LH", s.dot.lh},                   {"SO", s.dot.so}};
}

std::string csv_cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_number_float()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        for (char& c : s)
            if (c == ',' || c == '\n') c = ';';
        return s;
    }
    return v.dump();
}

}  // namespace

int cmd_sweep(const Options& o) {
    Run run(o, "sweep");
    const RunConfig& cfg = run.cfg;
    if (!cfg.sweep) throw ConfigError("sweep: section missing from the config");
    const SweepConfig& sw = *cfg.sweep;
    const int workers = worker_count(o);

    std::unique_ptr<Model> shared;
    std::optional<ConvergedState> zero;
    Vec3 origin = Vec3::Zero();
    if (sw.axis == SweepAxis::BDirection || sw.axis == SweepAxis::Bias) {
        shared = std::make_unique<Model>(cfg, nullptr, cfg.strain, &run);
        if (sw.axis == SweepAxis::BDirection) {
            zero = run.stage("scf", [&] { return scf_solve(*shared->builder, cfg.bias, MagneticFieldSpec{}, cfg.scf); });
            origin = resolve_gauge_origin(cfg, *zero);
        }
    }

    std::vector<Row> rows(sw.points.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < sw.points.size(); i = next++) {
            const SweepPoint& p = sw.points[i];
            Row& row = rows[i];
            row.label = p.label;
            char dname[32];
            std::snprintf(dname, sizeof dname, "point_%03zu", i);
            const fs::path dir = fs::path(run.out) / dname;
            const std::string point_hash = sha256_hex(cfg.hash + "|" + std::to_string(i) + "|" + p.label);
            const fs::path meta = dir / "metrics.json";
            try {
                if (fs::exists(meta)) {
                    const json old = read_json(meta.string());
                    if (old.value("point_hash", "") == point_hash && old.value("status", "") == "ok") {
                        row.values = old.at("values");
                        note(run.quiet, "[sweep] " + p.label + ": reused");
                        continue;
                    }
                }
                fs::create_directories(dir);
                note(run.quiet, "[sweep] " + p.label);
                json values;
                switch (sw.axis) {
                case SweepAxis::Bias: {
                    BiasPoint b = cfg.bias;
                    b.V_plunger = p.V_plunger;
                    const ConvergedState st = scf_solve(*shared->builder, b, MagneticFieldSpec{}, cfg.scf);
                    values = row_values(st);
                    break;
                }
                case SweepAxis::BDirection: {
                    const Vec3 d = direction_from_angles(p.theta_deg, p.phi_deg);
                    const auto st = states_at_field(*shared->builder, *zero, {cfg.magnetics.B * d, origin}, cfg);
                    const double dE = zeeman_splitting(st);
                    values = row_values(*zero);
                    values["zeeman_ueV"] = dE * 1e6;
                    values["g_eff"] = dE / (PhysicalConstants::bohr_magneton_muB * cfg.magnetics.B);
                    break;
                }
                case SweepAxis::Geometry:
                case SweepAxis::Strain: {
                    const Model m(cfg, sw.axis == SweepAxis::Geometry ? &p.dims : nullptr,
                                  sw.axis == SweepAxis::Strain ? p.strain : cfg.strain, nullptr);
                    const ConvergedState st = scf_solve(*m.builder, cfg.bias, MagneticFieldSpec{}, cfg.scf);
                    values = row_values(st);
                    break;
                }
                }
                row.values = values;
                json pj = run.header();
                pj["point_hash"] = point_hash;
                pj["label"] = p.label;
                pj["status"] = "ok";
                pj["values"] = values;
                write_json(meta.string(), pj);
            } catch (...) {
                row.status = "failed";
                row.exit_code = report_exception();
                try {
                    throw;
                } catch (const std::exception& e) {
                    row.message = e.what();
                }
            }
        }
    };
    run.stage("points", [&] {
        std::vector<std::thread> pool;
        for (int w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
        for (auto& t : pool) t.join();
    });

    static const char* cols[] = {"converged", "scf_iterations", "E0_meV", "delta_meV", "zeeman_ueV",
                                 "g_eff",     "l_dot_nm",       "HH",     "LH",        "SO"};
    int exit_code = 0;
    {
        std::ofstream t(run.path("sweep.csv"));
        if (!t) throw IoError("cannot write sweep table");
        t << "index,label,status";
        for (const char* c : cols) t << ',' << c;
        t << ",message\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Row& r = rows[i];
            t << i << ',' << csv_cell(r.label) << ',' << r.status;
            for (const char* c : cols) t << ',' << (r.values.contains(c) ? csv_cell(r.values[c]) : "");
            t << ',' << csv_cell(r.message) << '\n';
            if (r.exit_code && !exit_code) exit_code = r.exit_code;
        }
    }
    run.output(run.path("sweep.csv"));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        char dname[48];
        std::snprintf(dname, sizeof dname, "point_%03zu/metrics.json", i);
        if (fs::exists(run.path(dname))) run.output(run.path(dname));
    }
    if (exit_code) run.manifest.status = "partial";
    run.finish();
    return exit_code;
}

int cmd_verify(const std::string& target) {
    const fs::path p(target);
    std::vector<fs::path> manifests;
    if (fs::is_directory(p)) {
        for (const auto& e : fs::directory_iterator(p)) {
            const std::string name = e.path().filename().string();
            if (e.is_regular_file() && name.rfind("manifest_", 0) == 0 && e.path().extension() == ".json")
                manifests.push_back(e.path());
        }
        std::sort(manifests.begin(), manifests.end());
        if (manifests.empty()) throw IoError("no manifest_*.json in '" + target + "'");
    } else {
        manifests.push_back(p);
    }
    std::size_t problems = 0, outputs = 0;
    for (const auto& m : manifests) {
        for (const auto& s : verify_manifest(m.string())) {
            std::cout << m.filename().string() << ": " << s << '\n';
            ++problems;
        }
        outputs += RunManifest::read(m.string()).outputs.size();
    }
    if (problems) return 4;
    std::cout << "ok: " << outputs << " outputs in " << manifests.size() << " manifest(s) verified\n";
    return 0;
}

}  // namespace holespin::cli
