#pragma once

#include "holespin/device.hpp"
#include "holespin/hamiltonian.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <memory>
#include <random>
#include <string>

namespace testing {

using namespace holespin;

inline Device test_fin(double spacing = 0.5) {
    return Device::build(make_finfet(test_fin_dimensions()), Vec3::Constant(spacing));
}

/// Every node of an n[0] x n[1] x n[2] lattice belongs to the channel.
inline std::shared_ptr<const ChannelLayout> box_layout(std::array<int, 3> n, const Vec3& spacing) {
    Grid g;
    g.n = n;
    g.spacing = spacing;
    std::vector<std::size_t> nodes(g.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = i;
    return ChannelLayout::from_nodes(g, std::move(nodes));
}

inline Eigen::VectorXd dense_eigenvalues(const SpMatC& m) {
    const Eigen::MatrixXcd d(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline Eigen::VectorXd block_eigenvalues(const Block6& b) {
    Eigen::SelfAdjointEigenSolver<Block6> es(b, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// Scratch directory under the test working directory, emptied on creation.
inline std::string scratch_dir(const std::string& name) {
    const auto p = std::filesystem::current_path() / ("scratch_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

inline MaterialRecord decoupled_silicon(double delta0 = 1e3) {
    MaterialRecord m = silicon();
    m.gamma2 = 0.0;
    m.gamma3 = 0.0;
    m.delta0_SO = delta0;
    return m;
}

/// Hole-picture strain 6x6 in the |J, mJ> basis, typed directly from the textbook form.
inline Block6 textbook_6x6(const std::array<double, 6>& e, double av, double b, double d, double delta) {
    const cplx i(0, 1);
    const double P = av * (e[0] + e[1] + e[2]);
    const double Q = -b / 2 * (e[0] + e[1] - 2 * e[2]);
    const cplx R = std::sqrt(3.0) / 2 * b * (e[0] - e[1]) - i * d * e[3];
    const cplx S = -d * (e[4] - i * e[5]);
    const double r2 = std::sqrt(2.0), r32 = std::sqrt(3.0 / 2.0);
    Block6 H = Block6::Zero();
    H(0, 0) = H(3, 3) = P + Q;
    H(1, 1) = H(2, 2) = P - Q;
    H(4, 4) = H(5, 5) = P + delta;
    H(0, 1) = -S;
    H(0, 2) = R;
    H(0, 4) = -S / r2;
    H(0, 5) = r2 * R;
    H(1, 3) = R;
    H(1, 4) = -r2 * Q;
    H(1, 5) = r32 * S;
    H(2, 3) = S;
    H(2, 4) = r32 * std::conj(S);
    H(2, 5) = r2 * Q;
    H(3, 4) = -r2 * std::conj(R);
    H(3, 5) = -std::conj(S) / r2;
    for (int a = 0; a < 6; ++a)
        for (int c = a + 1; c < 6; ++c) H(c, a) = std::conj(H(a, c));
    return H;
}

}  // namespace testing
