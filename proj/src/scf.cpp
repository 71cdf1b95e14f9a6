#include "holespin/scf.hpp"

#include "holespin/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

namespace holespin {

void ScfConfig::validate() const {
    if (max_iterations < 1) throw InvalidInput("scf.max_iterations must be >= 1");
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidInput("scf.beta must lie in (0, 1]");
    if (anderson_depth < 0) throw InvalidInput("scf.anderson_depth must be >= 0");
    if (!(tol > 0)) throw InvalidInput("scf.tol must be positive");
    if (num_states < 2) throw InvalidInput("scf.num_states must be >= 2");
    if (!(hole_count >= 0) || hole_count > num_states) throw InvalidInput("scf.hole_count out of range");
    if (!(temperature > 0)) throw InvalidInput("scf.temperature must be positive");
    if (oscillation_window < 3) throw InvalidInput("scf.oscillation_window must be >= 3");
    if (!(eigen_tol > 0)) throw InvalidInput("scf.eigen_tol must be positive");
    if (eigen_block < 0 || eigen_depth < 1 || eigen_max_cycles < 1) throw InvalidInput("eigen settings out of range");
}

HamiltonianBuilder::HamiltonianBuilder(const Device& device, const CrystalFrame& frame, const StrainField* strain)
    : device_(&device), frame_(frame) {
    layout_ = ChannelLayout::build(device.grid, device.map);
    const int m0 = device.map.material[layout_->nodes.front()];
    for (std::size_t node : layout_->nodes)
        if (device.map.material[node] != m0)
            throw InvalidInput("channel must consist of a single semiconductor material");
    const auto& mat = device.map.materials.at(m0);
    params_ = KpParameters::from_material(mat);
    av_ = mat.def_pot_av;
    b_ = mat.def_pot_b;
    d_ = mat.def_pot_d;
    if (strain) {
        if (!strain->grid.same_as(device.grid, 1e-9)) throw InvalidInput("strain must be sampled on the FD grid");
        strain_ = *strain;
    }
}

SparseHamiltonian HamiltonianBuilder::build(const std::vector<double>& potential, const MagneticFieldSpec& field) const {
    if (!base_) {
        SparseHamiltonian H = assemble_lk(layout_, params_, {}, frame_);
        if (strain_) add_strain_field(H, *strain_, av_, b_, d_);
        base_ = std::move(H);
    }
    SparseHamiltonian H = *base_;
    if (!potential.empty()) {
        if (potential.size() != layout_->grid.size()) throw InvalidInput("potential size does not match the grid");
        for (std::size_t c = 0; c < layout_->size(); ++c)
            H.add_block(c, 0, Block6::Identity() * potential[layout_->nodes[c]]);
    }
    add_magnetic(H, field);
    return H;
}

SparseHamiltonian HamiltonianBuilder::magnetic_part(const MagneticFieldSpec& field) const {
    if (!base_) build({}, MagneticFieldSpec{});
    SparseHamiltonian H = *base_;
    H.matrix.coeffs().setZero();
    add_magnetic(H, field);
    return H;
}

std::vector<double> doublet_occupations(int num_states, double hole_count) {
    std::vector<double> occ(static_cast<std::size_t>(num_states), 0.0);
    double left = hole_count;
    for (int d = 0; 2 * d + 1 < num_states && left > 0; ++d) {
        const double take = std::min(2.0, left);
        occ[std::size_t(2 * d)] = occ[std::size_t(2 * d + 1)] = 0.5 * take;
        left -= take;
    }
    if (left > 1e-12) throw InvalidInput("hole count exceeds the number of computed states");
    return occ;
}

namespace {

class Mixer {
public:
    Mixer(double beta, int depth) : beta_(beta), depth_(depth) {}

    Eigen::VectorXd next(const Eigen::VectorXd& x, const Eigen::VectorXd& f) {
        if (depth_ == 0 || !last_x_) {
            store(x, f);
            return x + beta_ * f;
        }
        dx_.push_back(x - *last_x_);
        df_.push_back(f - *last_f_);
        if (int(dx_.size()) > depth_) {
            dx_.pop_front();
            df_.pop_front();
        }
        store(x, f);
        const long m = long(dx_.size());
        Eigen::MatrixXd DF(f.size(), m), DX(x.size(), m);
        for (long j = 0; j < m; ++j) {
            DF.col(j) = df_[std::size_t(j)];
            DX.col(j) = dx_[std::size_t(j)];
        }
        const Eigen::VectorXd gamma = DF.colPivHouseholderQr().solve(f);
        return x + beta_ * f - (DX + beta_ * DF) * gamma;
    }

private:
    void store(const Eigen::VectorXd& x, const Eigen::VectorXd& f) {
        last_x_ = x;
        last_f_ = f;
    }
    double beta_;
    int depth_;
    std::optional<Eigen::VectorXd> last_x_, last_f_;
    std::deque<Eigen::VectorXd> dx_, df_;
};

}  // namespace

ConvergedState scf_solve(const Device& device, const BiasPoint& bias, const MagneticFieldSpec& field,
                         const StrainField* strain, const ScfConfig& cfg, const CrystalFrame& frame,
                         const PotentialField* warm_start) {
    const HamiltonianBuilder builder(device, frame, strain);
    return scf_solve(builder, bias, field, cfg, warm_start);
}

ConvergedState scf_solve(const HamiltonianBuilder& builder, const BiasPoint& bias, const MagneticFieldSpec& field,
                         const ScfConfig& cfg, const PotentialField* warm_start,
                         const std::vector<SpinorState>* warm_states) {
    cfg.validate();
    const Device& dev = builder.device();
    const Grid& grid = dev.grid;
    const PoissonSystem poisson = assemble_poisson(grid, dev.map, dev.geometry, bias);
    const std::vector<double> rho_dop = dopant_density(grid, dev.map).dopant;
    const std::vector<double> occ = doublet_occupations(cfg.num_states, cfg.hole_count);

    std::optional<ConvergedState> restart;
    if (!warm_start && !cfg.restart_path.empty()) restart = load_state(cfg.restart_path, &dev);
    if (restart) warm_start = &restart->potential;

    std::vector<double> phi_in;
    if (warm_start) {
        if (!warm_start->grid.same_as(grid)) throw InvalidInput("warm-start potential grid does not match the device");
        phi_in = warm_start->values;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (poisson.dirichlet[i]) phi_in[i] = poisson.dirichlet_value[i];
    } else {
        phi_in = poisson.solve_nonlinear(rho_dop, cfg.temperature).values;
    }

    std::ofstream log;
    if (!cfg.trace_log.empty()) {
        log.open(cfg.trace_log, std::ios::app);
        if (!log) throw IoError("cannot open SCF trace log '" + cfg.trace_log + "'");
    }

    ConvergedState st;
    st.bias = bias;
    st.field = field;
    st.occupations = occ;
    Mixer mixer(cfg.beta, cfg.anderson_depth);
    EigenOptions eopt;
    eopt.seed = cfg.seed;
    eopt.block = cfg.eigen_block;
    eopt.depth = cfg.eigen_depth;
    eopt.max_cycles = cfg.eigen_max_cycles;
    std::vector<double> phi_out_prev;
    const double sqrt_dv = std::sqrt(grid.cell_volume());
    double best_before_window = std::numeric_limits<double>::infinity();

    std::vector<double> phi_built;
    double e_low = 0, e_gap = 0;
    if (warm_states && warm_states->size() >= 2 && warm_start) {
        const auto& ws = *warm_states;
        if (ws.front().psi.size() == long(6 * builder.layout()->size())) {
            const int m = std::min<int>(int(ws.size()), cfg.num_states);
            eopt.initial.resize(ws.front().psi.size(), m);
            for (int s = 0; s < m; ++s) eopt.initial.col(s) = ws[std::size_t(s)].psi * sqrt_dv;
            phi_built = warm_start->values;
            e_low = ws.front().energy;
            e_gap = ws.back().energy - e_low;
        }
    }
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        const SparseHamiltonian H = builder.build(phi_in, field);
        if (!phi_built.empty()) {
            double dphi = 0;
            for (std::size_t g : dev.map.channel_nodes) dphi = std::max(dphi, std::abs(phi_in[g] - phi_built[g]));
            eopt.shift = e_low - dphi - std::max(0.2 * e_gap, 1e-4);
        }
        std::vector<SpinorState> states = lowest_states(H, cfg.num_states, cfg.eigen_tol, eopt);
        phi_built = phi_in;
        e_low = states.front().energy;
        e_gap = states.back().energy - e_low;
        eopt.initial.resize(long(H.dim()), cfg.num_states);
        for (int s = 0; s < cfg.num_states; ++s) eopt.initial.col(s) = states[std::size_t(s)].psi * sqrt_dv;

        const ChargeDensityField rq = quantum_hole_density(states, occ, grid);
        std::vector<double> rho(grid.size());
        for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = rho_dop[i] + rq.quantum[i];
        const PotentialField phi_out =
            poisson.solve_nonlinear(rho, cfg.temperature, phi_out_prev.empty() ? nullptr : &phi_out_prev);
        phi_out_prev = phi_out.values;

        double res = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) res = std::max(res, std::abs(phi_out.values[i] - phi_in[i]));
        st.trace.push_back(res);
        st.energy_trace.push_back(states.front().energy);
        st.iterations = it;
        if (log) log << it << ' ' << res << ' ' << states.front().energy << '\n';

        if (res <= cfg.tol) {
            st.converged = true;
            st.potential = PotentialField{grid, phi_in};
            st.states = std::move(states);
            return st;
        }

        const int W = cfg.oscillation_window;
        if (it > W) {
            best_before_window = std::min(best_before_window, st.trace[std::size_t(it - W - 1)]);
            const double best_in_window = *std::min_element(st.trace.end() - W, st.trace.end());
            if (best_in_window >= best_before_window) {
                std::ostringstream os;
                os << "SCF oscillation: residual has not decreased over the last " << W
                   << " iterations (current " << res << " V); reduce scf.beta";
                throw ConvergenceError(os.str(), st.trace);
            }
        }

        const Eigen::Map<const Eigen::VectorXd> x(phi_in.data(), long(phi_in.size()));
        const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(phi_out.values.data(), long(grid.size())) - x;
        const Eigen::VectorXd xn = mixer.next(x, f);
        for (std::size_t i = 0; i < grid.size(); ++i) phi_in[i] = xn[long(i)];
    }
    std::ostringstream os;
    os << "SCF did not converge in " << cfg.max_iterations << " iterations (last residual " << st.trace.back()
       << " V)";
    throw ConvergenceError(os.str(), st.trace);
}

double find_plunger_bias(const HamiltonianBuilder& builder, BiasPoint bias, const MagneticFieldSpec& field,
                         const ScfConfig& cfg, double target_energy, double lo, double hi, double tol) {
    if (!(hi > lo)) throw InvalidInput("bias search needs lo < hi");
    auto energy = [&](double v) {
        bias.V_plunger = v;
        return scf_solve(builder, bias, field, cfg).states.front().energy - target_energy;
    };
    double flo = energy(lo), fhi = energy(hi);
    if (flo * fhi > 0) throw InvalidInput("target ground energy is not bracketed by the plunger interval");
    for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = energy(mid);
        if (std::abs(fm) <= tol) return mid;
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace holespin
