#include "holespin/config.hpp"
#include "holespin/errors.hpp"
#include "holespin/manifest.hpp"
#include "holespin/metrics.hpp"
#include "holespin/pipeline.hpp"
#include "holespin/scf.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

namespace py = pybind11;
using namespace holespin;

namespace {

/// Device, strain and builder for one configuration, plus the last converged B = 0 state.
class Simulation {
public:
    explicit Simulation(RunConfig cfg) : cfg_(std::move(cfg)), device_(cfg_.make_device()) {
        strain_ = compute_strain(cfg_, device_, cfg_.strain);
        builder_ = std::make_unique<HamiltonianBuilder>(device_, cfg_.frame, strain_.fd ? &*strain_.fd : nullptr);
    }

    std::string solve() {
        state_ = scf_solve(*builder_, cfg_.bias, {}, cfg_.scf);
        return solve_json(*state_, summarize(*state_), strain_.fd ? &*strain_.fd : nullptr).dump();
    }
    std::string gtensor() { return g_json(compute_g(*builder_, ensure(), cfg_)).dump(); }
    std::string rabi() { return rabi_json(compute_rabi(*builder_, ensure(), cfg_), cfg_.rabi).dump(); }

    Eigen::MatrixXd potential() {
        const auto& st = ensure();
        const Grid& g = st.potential.grid;
        Eigen::MatrixXd out(long(g.size()), 4);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Vec3 r = g.position(i);
            out.row(long(i)) << r.x(), r.y(), r.z(), st.potential.values[i];
        }
        return out;
    }
    std::vector<double> energies() {
        std::vector<double> e;
        for (const auto& s : ensure().states) e.push_back(s.energy);
        return e;
    }
    std::size_t channel_nodes() const { return builder_->layout()->size(); }
    const RunConfig& config() const { return cfg_; }

private:
    const ConvergedState& ensure() {
        if (!state_) state_ = scf_solve(*builder_, cfg_.bias, {}, cfg_.scf);
        return *state_;
    }

    RunConfig cfg_;
    Device device_;
    StrainOutcome strain_;
    std::unique_ptr<HamiltonianBuilder> builder_;
    std::optional<ConvergedState> state_;
};

}  // namespace

PYBIND11_MODULE(_holespin, m) {
    m.doc() = "Hole spin qubit simulator core";
    m.attr("__version__") = HOLESPIN_VERSION;

    auto base = py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

    py::class_<RunConfig>(m, "RunConfig")
        .def_readonly("preset", &RunConfig::preset)
        .def_readonly("hash", &RunConfig::hash)
        .def_readonly("output_dir", &RunConfig::output_dir)
        .def_property_readonly("spacing_nm", [](const RunConfig& c) { return Eigen::Vector3d(c.spacing); })
        .def_property_readonly("strain", [](const RunConfig& c) { return c.strain.label(); });
    m.def("load_config", &load_config, py::arg("path"));
    m.def("parse_config", &parse_config, py::arg("text"), py::arg("base_dir") = ".");

    py::class_<Simulation>(m, "Simulation")
        .def(py::init<RunConfig>(), py::arg("config"), py::call_guard<py::gil_scoped_release>())
        .def("solve", &Simulation::solve, py::call_guard<py::gil_scoped_release>())
        .def("gtensor", &Simulation::gtensor, py::call_guard<py::gil_scoped_release>())
        .def("rabi", &Simulation::rabi, py::call_guard<py::gil_scoped_release>())
        .def("potential", &Simulation::potential, py::call_guard<py::gil_scoped_release>())
        .def("energies", &Simulation::energies, py::call_guard<py::gil_scoped_release>())
        .def_property_readonly("channel_nodes", &Simulation::channel_nodes)
        .def_property_readonly("config", &Simulation::config, py::return_value_policy::reference_internal);

    m.def("weighted_length", &weighted_length, py::arg("coords"), py::arg("weights"));
    m.def("splitting_dot_length", &splitting_dot_length, py::arg("delta_meV"), py::arg("m_star"));
    m.def("sha256_hex", &sha256_hex, py::arg("data"));
    m.def(
        "reconstruct_g_tensor",
        [](const std::array<double, 6>& s, double B) {
            const GTensor t = reconstruct_g_tensor(s, B);
            return py::make_tuple(Eigen::Matrix3d(t.G), Eigen::Vector3d(t.principal), Eigen::Matrix3d(t.axes),
                                  t.indefinite);
        },
        py::arg("splittings_eV"), py::arg("B_T"));
    m.def(
        "rabi_frequency",
        [](const Eigen::Matrix3d& g, const Eigen::Matrix3d& dg, const Eigen::Vector3d& b, double V_ac, double value,
           const std::string& mode) {
            if (mode != "fixed_larmor" && mode != "fixed_field")
                throw InvalidInput("mode must be fixed_larmor or fixed_field");
            return rabi_frequency(g, dg, b, V_ac, value, mode == "fixed_larmor" ? RabiMode::FixedLarmor : RabiMode::FixedField);
        },
        py::arg("g"), py::arg("dg"), py::arg("b"), py::arg("V_ac"), py::arg("f_L_GHz_or_B_T"),
        py::arg("mode") = "fixed_larmor");
    m.def(
        "pikus_bir",
        [](const std::array<double, 6>& eps, double av, double b, double d) {
            const PikusBirPoint p = pikus_bir(eps, av, b, d);
            return py::make_tuple(p.P, p.Q, p.R, p.S);
        },
        py::arg("strain"), py::arg("a_v"), py::arg("b"), py::arg("d"));
    m.def(
        "bulk_hamiltonian",
        [](const Eigen::Vector3d& k, const std::array<double, 6>& eps, const Eigen::Vector3d& B) {
            const MaterialRecord si = silicon();
            return Eigen::MatrixXcd(bulk_hamiltonian(KpParameters::from_material(si), k, eps, si.def_pot_av,
                                                     si.def_pot_b, si.def_pot_d, B));
        },
        py::arg("k"), py::arg("strain"), py::arg("B") = Eigen::Vector3d::Zero());
}
