#pragma once

#include "holespin/hamiltonian.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace holespin {

struct SpinorState {
    double energy = 0.0;  // eV
    /// Spin-orbit components per channel node, index 6*node + component; sum |psi|^2 dV = 1.
    Eigen::VectorXcd psi;
    double residual = 0.0;
    std::shared_ptr<const ChannelLayout> layout;

    double cell_volume() const { return layout->grid.cell_volume(); }
    /// <this|other> including the volume element.
    cplx inner(const SpinorState& other) const { return psi.dot(other.psi) * cell_volume(); }
    double norm2() const { return psi.squaredNorm() * cell_volume(); }
};

struct KramersDoublet {
    std::array<SpinorState, 2> states;
    /// Unitary applied by the last alignment (new = old * W).
    Eigen::Matrix2cd rotation = Eigen::Matrix2cd::Identity();
};

struct EigenOptions {
    int count = 4;
    double tol = 1e-10;  // residual 2-norm, eV
    int max_cycles = 60;
    int block = 0;        // vectors added per expansion; 0 picks max(4, count rounded up to even)
    int depth = 5;        // expansions per restart cycle
    std::uint64_t seed = 0x5eed1234ULL;
    std::optional<double> shift;  // starting shift, lowered until H - shift is positive definite
    std::optional<double> lower_bound;
    Eigen::MatrixXcd initial;     // optional starting vectors (columns)
    std::size_t dense_limit = 0;  // dimensions up to this use dense diagonalisation
};

struct EigenResult {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;  // unit 2-norm columns
    std::vector<double> residuals;
    int cycles = 0;
    int factorizations = 0;
    double shift = 0.0;
};

/// Lowest eigenpairs of a Hermitian sparse matrix by restarted block shift-invert Krylov with
/// full reorthogonalisation and Rayleigh-Ritz on H itself. Throws ConvergenceError carrying the
/// Ritz-value history (count values per cycle, flattened) when max_cycles is hit.
EigenResult lowest_eigenpairs(const SpMatC& H, const EigenOptions& opt);

std::vector<SpinorState> lowest_states(const SparseHamiltonian& H, int k, double tol = 1e-10,
                                       EigenOptions opt = {});

/// Doublet from two states, usually the two lowest.
KramersDoublet make_doublet(const SpinorState& a, const SpinorState& b);

/// Rotates `d` within its span to best match `reference` (polar factor of the 2x2 overlap).
/// Rejects the pair when the smallest overlap singular value is below min_singular.
KramersDoublet align_doublet(const KramersDoublet& d, const KramersDoublet& reference, double min_singular = 0.3);

/// Applies a 2x2 mixing: new_j = sum_i old_i W(i, j).
KramersDoublet rotate_doublet(const KramersDoublet& d, const Eigen::Matrix2cd& W);

}  // namespace holespin
