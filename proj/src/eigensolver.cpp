#include "holespin/eigensolver.hpp"

#include "holespin/errors.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace holespin {

namespace {

using ColMat = Eigen::SparseMatrix<cplx>;
using Factor = Eigen::CholmodSupernodalLLT<ColMat, Eigen::Lower>;

/// Appends the columns of W to V after two rounds of Gram-Schmidt; drops near-dependent ones.
int extend_basis(Eigen::MatrixXcd& V, int used, Eigen::MatrixXcd W) {
    const int capacity = int(V.cols());
    int added = 0;
    for (int j = 0; j < W.cols() && used + added < capacity; ++j) {
        Eigen::VectorXcd w = W.col(j);
        const double n0 = w.norm();
        if (n0 == 0.0) continue;
        const int m = used + added;
        for (int pass = 0; pass < 2; ++pass) {
            if (m > 0) w -= V.leftCols(m) * (V.leftCols(m).adjoint() * w);
        }
        const double n1 = w.norm();
        if (n1 <= 1e-10 * n0) continue;
        V.col(m) = w / n1;
        ++added;
    }
    return added;
}

Eigen::MatrixXcd random_block(long n, int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXcd X(n, m);
    for (long j = 0; j < m; ++j)
        for (long i = 0; i < n; ++i) X(i, j) = cplx(nd(rng), nd(rng));
    return X;
}

struct ShiftedFactor {
    ColMat A;
    std::unique_ptr<Factor> llt;
    double sigma = 0;

    bool factor(const SpMatC& H, double s) {
        A = H;
        for (long i = 0; i < A.rows(); ++i) A.coeffRef(i, i) -= s;
        llt = std::make_unique<Factor>();
        llt->compute(A);
        sigma = s;
        return llt->info() == Eigen::Success;
    }
};

EigenResult dense_solve(const SpMatC& H, int k) {
    Eigen::MatrixXcd D = Eigen::MatrixXcd(H);
    D = 0.5 * (D + D.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D);
    EigenResult r;
    r.values = es.eigenvalues().head(k);
    r.vectors = es.eigenvectors().leftCols(k);
    for (int i = 0; i < k; ++i) r.residuals.push_back((H * r.vectors.col(i) - r.values[i] * r.vectors.col(i)).norm());
    return r;
}

/// Gershgorin-free fallback: a slightly pessimistic start below the smallest diagonal entry.
double crude_lower_bound(const SpMatC& H) {
    double lo = std::numeric_limits<double>::infinity();
    for (long r = 0; r < H.rows(); ++r) {
        double diag = 0, off = 0;
        for (SpMatC::InnerIterator it(H, r); it; ++it) {
            if (it.col() == r) diag = it.value().real();
            else off += std::abs(it.value());
        }
        lo = std::min(lo, diag - off);
    }
    return lo;
}

}  // namespace

EigenResult lowest_eigenpairs(const SpMatC& H, const EigenOptions& opt) {
    const long n = H.rows();
    const int k = opt.count;
    if (k < 1) throw InvalidInput("eigenpair count must be positive");
    if (n < k) throw InvalidInput("matrix smaller than the requested number of eigenpairs");
    if (!(opt.tol > 0)) throw InvalidInput("eigensolver tolerance must be positive");
    const int p = opt.block > 0 ? opt.block : std::max(4, k + (k % 2));
    const int r = k + p;
    const int depth = std::max(1, opt.depth);
    const long mdim = long(r) * (depth + 1);
    if (std::size_t(n) <= opt.dense_limit || n <= 3 * mdim) return dense_solve(H, k);

    EigenResult res;
    ShiftedFactor F;
    double sigma;
    if (opt.shift) {
        sigma = *opt.shift;
    } else {
        double lb = opt.lower_bound ? *opt.lower_bound : crude_lower_bound(H);
        sigma = lb - 1e-3 - 1e-3 * std::abs(lb);
    }
    double step = 1e-2 + 0.05 * std::abs(sigma);
    for (int attempt = 0;; ++attempt) {
        ++res.factorizations;
        if (F.factor(H, sigma)) break;
        if (attempt > 40) throw InvalidInput("could not place the shift below the spectrum");
        sigma -= step;
        step *= 2;
    }
    int refinements = 0;

    Eigen::MatrixXcd X(n, r);
    {
        Eigen::MatrixXcd seed = random_block(n, r, opt.seed);
        const int m0 = std::min<int>(int(opt.initial.cols()), r);
        if (m0 > 0 && opt.initial.rows() == n) seed.leftCols(m0) = opt.initial.leftCols(m0);
        Eigen::MatrixXcd V0(n, r);
        const int got = extend_basis(V0, 0, seed);
        if (got < r) throw InvalidInput("could not build an initial basis");
        X = V0;
    }

    std::vector<double> history;
    Eigen::VectorXd theta;
    Eigen::MatrixXcd Y;
    for (int cycle = 1; cycle <= opt.max_cycles; ++cycle) {
        Eigen::MatrixXcd V(n, mdim);
        int used = extend_basis(V, 0, X);
        int last_begin = 0, last_count = used;
        for (int e = 0; e < depth; ++e) {
            Eigen::MatrixXcd W = F.llt->solve(V.middleCols(last_begin, last_count));
            const int added = extend_basis(V, used, W);
            if (added == 0) break;
            last_begin = used;
            last_count = added;
            used += added;
        }
        const Eigen::MatrixXcd Vb = V.leftCols(used);
        const Eigen::MatrixXcd HV = H * Vb;
        Eigen::MatrixXcd G = Vb.adjoint() * HV;
        G = 0.5 * (G + G.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
        theta = es.eigenvalues();
        Y = es.eigenvectors();
        const int keep = std::min<int>(r, used);
        X = Vb * Y.leftCols(keep);
        const Eigen::MatrixXcd HX = HV * Y.leftCols(keep);
        res.residuals.assign(std::size_t(k), 0.0);
        bool done = true;
        for (int i = 0; i < k; ++i) {
            res.residuals[std::size_t(i)] = (HX.col(i) - theta[i] * X.col(i)).norm();
            done = done && res.residuals[std::size_t(i)] <= opt.tol;
            history.push_back(theta[i]);
        }
        res.cycles = cycle;
        if (done) {
            res.values = theta.head(k);
            res.vectors = X.leftCols(k);
            res.shift = F.sigma;
            return res;
        }
        if (refinements < 3 && keep > k) {
            const double gap = std::max(theta[k] - theta[0], 1e-6);
            const double s = theta[0] - std::max({0.2 * gap, 10 * res.residuals[0], 1e-9 * (1 + std::abs(theta[0]))});
            if (theta[0] - s < 0.5 * (theta[0] - F.sigma)) {
                ++refinements;
                ShiftedFactor G2;
                ++res.factorizations;
                if (G2.factor(H, s)) F = std::move(G2);
                else refinements = 3;
            }
        }
    }
    std::ostringstream os;
    os << "eigensolver did not converge in " << opt.max_cycles << " cycles; residuals:";
    for (double v : res.residuals) os << ' ' << v;
    throw ConvergenceError(os.str(), history);
}

std::vector<SpinorState> lowest_states(const SparseHamiltonian& H, int k, double tol, EigenOptions opt) {
    if (k < 2) throw InvalidInput("at least two states are required");
    opt.count = k;
    opt.tol = tol;
    if (!opt.shift && !opt.lower_bound) {
        const double lb = H.spectrum_lower_bound();
        opt.lower_bound = lb;
    }
    const EigenResult r = lowest_eigenpairs(H.matrix, opt);
    const double scale = 1.0 / std::sqrt(H.layout->grid.cell_volume());
    std::vector<SpinorState> out;
    for (int i = 0; i < k; ++i) {
        SpinorState s;
        s.energy = r.values[i];
        s.psi = r.vectors.col(i) * scale;
        s.residual = r.residuals[std::size_t(i)];
        s.layout = H.layout;
        out.push_back(std::move(s));
    }
    return out;
}

KramersDoublet make_doublet(const SpinorState& a, const SpinorState& b) {
    KramersDoublet d;
    d.states = {a, b};
    return d;
}

KramersDoublet rotate_doublet(const KramersDoublet& d, const Eigen::Matrix2cd& W) {
    KramersDoublet out = d;
    for (int j = 0; j < 2; ++j) out.states[j].psi = d.states[0].psi * W(0, j) + d.states[1].psi * W(1, j);
    out.rotation = d.rotation * W;
    return out;
}

KramersDoublet align_doublet(const KramersDoublet& d, const KramersDoublet& reference, double min_singular) {
    Eigen::Matrix2cd S;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) S(i, j) = d.states[i].inner(reference.states[j]);
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(S, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smin = svd.singularValues().minCoeff();
    if (smin < min_singular) {
        std::ostringstream os;
        os << "doublet overlap with the reference is nearly singular (smallest singular value " << smin << ")";
        throw InvalidInput(os.str());
    }
    const Eigen::Matrix2cd W = svd.matrixU() * svd.matrixV().adjoint();
    KramersDoublet out = rotate_doublet(d, W);
    out.rotation = W;
    return out;
}

}  // namespace holespin
