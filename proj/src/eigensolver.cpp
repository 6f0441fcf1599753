#include "gmbm/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmbm/error.hpp"
#include "gmbm/kernels.hpp"
#include "gmbm/model.hpp"
#include "gmbm/rng.hpp"

namespace gmbm {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void apply_op(const SymmetricOperator& A, const VectorXd& x, VectorXd& y) {
    A.apply({x.data(), static_cast<std::size_t>(x.size())}, {y.data(), static_cast<std::size_t>(y.size())});
}

void fill_residuals(const SymmetricOperator& A, SpectralDecomposition& dec) {
    const auto n = static_cast<Index>(A.n);
    dec.residuals.resize(static_cast<Index>(dec.m));
    VectorXd w(n), Aw(n);
    for (Index i = 0; i < static_cast<Index>(dec.m); ++i) {
        w = dec.eigenvectors.col(i);
        apply_op(A, w, Aw);
        dec.residuals(i) = (Aw - dec.eigenvalues(i) * w).norm();
        ++dec.matvecs;
    }
}

SpectralDecomposition dense_top(const MatrixXd& A, std::size_t m, double norm_hint) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> solver(A);
    if (solver.info() != Eigen::Success) throw NonConvergence("dense symmetric eigensolver failed", 0, 0.0);
    const auto n = A.rows();
    const auto count = static_cast<Index>(m);
    SpectralDecomposition dec;
    dec.m = m;
    dec.path = EigenPath::dense;
    dec.norm_hint = norm_hint;
    dec.eigenvalues = solver.eigenvalues().tail(count).reverse();
    dec.eigenvectors = solver.eigenvectors().rightCols(count).rowwise().reverse();
    canonicalize_signs(dec.eigenvectors);
    dec.residuals.resize(count);
    for (Index i = 0; i < count; ++i)
        dec.residuals(i) = (A * dec.eigenvectors.col(i) - dec.eigenvalues(i) * dec.eigenvectors.col(i)).norm();
    (void)n;
    return dec;
}

// Orthogonalizes w against the first `cols` columns of V, twice. Returns the
// accumulated projection coefficients.
VectorXd orthogonalize(const MatrixXd& V, Index cols, VectorXd& w) {
    VectorXd h = V.leftCols(cols).transpose() * w;
    w.noalias() -= V.leftCols(cols) * h;
    const VectorXd h2 = V.leftCols(cols).transpose() * w;
    w.noalias() -= V.leftCols(cols) * h2;
    return h + h2;
}

VectorXd random_unit(Index n, RngStream& rng) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v / v.norm();
}

}  // namespace

std::string_view to_string(EigenPath path) {
    switch (path) {
        case EigenPath::automatic: return "automatic";
        case EigenPath::dense: return "dense";
        case EigenPath::iterative: return "iterative";
    }
    return "unknown";
}

SymmetricOperator dense_operator(const MatrixXd& A) {
    SymmetricOperator op;
    op.n = static_cast<std::size_t>(A.rows());
    op.norm_hint = std::max(A.norm(), 1e-300);
    op.apply = [&A](std::span<const double> x, std::span<double> y) {
        const Eigen::Map<const VectorXd> xv(x.data(), static_cast<Index>(x.size()));
        Eigen::Map<VectorXd> yv(y.data(), static_cast<Index>(y.size()));
        yv.noalias() = A * xv;
    };
    return op;
}

SymmetricOperator adjacency_operator(const GraphSample& G) {
    SymmetricOperator op;
    op.n = G.n;
    op.norm_hint = std::max(G.frobenius_norm(), 1.0);
    op.apply = [&G](std::span<const double> x, std::span<double> y) {
        kernels::csr_matvec(G.offsets, G.neighbors, x, y);
    };
    return op;
}

void canonicalize_signs(MatrixXd& vectors) {
    for (Index c = 0; c < vectors.cols(); ++c) {
        Index best = 0;
        double best_abs = -1.0;
        for (Index r = 0; r < vectors.rows(); ++r) {
            const double a = std::abs(vectors(r, c));
            if (a > best_abs) {
                best_abs = a;
                best = r;
            }
        }
        if (vectors.rows() > 0 && vectors(best, c) < 0.0) vectors.col(c) *= -1.0;
    }
}

SpectralDecomposition eigentop(const MatrixXd& A, std::size_t m, const EigenOptions& options) {
    if (A.rows() != A.cols()) throw InvalidInput("eigentop needs a square matrix");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 0.0) throw InvalidInput("eigentop input is not symmetric");
    const auto n = static_cast<std::size_t>(A.rows());
    if (m > n) throw InvalidParameter("requested more eigenpairs than the matrix dimension");
    const bool dense = options.path == EigenPath::dense ||
                       (options.path == EigenPath::automatic && n <= options.dense_limit);
    if (dense) return dense_top(A, m, A.norm());
    return lanczos_top(dense_operator(A), m, options);
}

SpectralDecomposition eigentop(const SymmetricOperator& A, std::size_t m, const EigenOptions& options) {
    if (m > A.n) throw InvalidParameter("requested more eigenpairs than the operator dimension");
    const bool dense = options.path == EigenPath::dense ||
                       (options.path == EigenPath::automatic && A.n <= options.dense_limit);
    if (!dense) return lanczos_top(A, m, options);

    const auto n = static_cast<Index>(A.n);
    MatrixXd M(n, n);
    VectorXd e = VectorXd::Zero(n), col(n);
    for (Index j = 0; j < n; ++j) {
        e(j) = 1.0;
        apply_op(A, e, col);
        M.col(j) = col;
        e(j) = 0.0;
    }
    const MatrixXd sym = 0.5 * (M + M.transpose());
    auto dec = dense_top(sym, m, A.norm_hint);
    dec.matvecs = A.n;
    return dec;
}

SpectralDecomposition eigentop(const GraphSample& G, std::size_t m, const EigenOptions& options) {
    return eigentop(adjacency_operator(G), m, options);
}

SpectralDecomposition lanczos_top(const SymmetricOperator& A, std::size_t m, const EigenOptions& options) {
    const auto n = static_cast<Index>(A.n);
    const auto want = static_cast<Index>(m);
    if (want > n) throw InvalidParameter("requested more eigenpairs than the operator dimension");

    SpectralDecomposition dec;
    dec.m = m;
    dec.path = EigenPath::iterative;
    dec.norm_hint = A.norm_hint;
    if (want == 0) {
        dec.eigenvectors.resize(n, 0);
        return dec;
    }

    Index ncv = options.basis_size ? static_cast<Index>(options.basis_size) : std::max(2 * want + 20, want + 40);
    ncv = std::min(ncv, n);
    if (ncv < want) ncv = want;
    const Index keep = std::clamp<Index>(want + (ncv - want) / 2, want, std::max<Index>(ncv - 1, want));
    const double threshold = options.tol * A.norm_hint;
    const double breakdown = 1e-13 * A.norm_hint;

    RngStream rng(options.start_seed);
    MatrixXd V(n, ncv + 1);
    MatrixXd H = MatrixXd::Zero(ncv, ncv);
    V.col(0) = random_unit(n, rng);
    VectorXd w(n);
    Index filled = 0;  // basis columns with a projected column in H

    for (int restart = 0; restart <= options.max_restarts; ++restart) {
        double beta = 0.0;
        for (Index j = filled; j < ncv; ++j) {
            const VectorXd v = V.col(j);
            apply_op(A, v, w);
            ++dec.matvecs;
            const VectorXd h = orthogonalize(V, j + 1, w);
            H.col(j).head(j + 1) = h;
            H.row(j).head(j + 1) = h.transpose();
            beta = w.norm();
            if (j + 1 == ncv) break;
            if (beta > breakdown) {
                V.col(j + 1) = w / beta;
                H(j + 1, j) = H(j, j + 1) = 0.0;  // filled by the next projection
            } else {
                // Invariant subspace found; continue with a fresh orthogonal direction.
                VectorXd fresh = random_unit(n, rng);
                orthogonalize(V, j + 1, fresh);
                V.col(j + 1) = fresh / fresh.norm();
                beta = 0.0;
            }
        }
        if (ncv == n) beta = 0.0;  // the basis spans the whole space
        if (beta > breakdown) V.col(ncv) = w / beta;

        const Eigen::SelfAdjointEigenSolver<MatrixXd> small(H);
        // Descending order.
        const VectorXd theta = small.eigenvalues().reverse();
        const MatrixXd Y = small.eigenvectors().rowwise().reverse();

        double worst = 0.0;
        for (Index i = 0; i < want; ++i) worst = std::max(worst, std::abs(beta * Y(ncv - 1, i)));
        dec.restarts = restart;

        if (worst <= threshold || beta == 0.0) {
            dec.eigenvalues = theta.head(want);
            dec.eigenvectors = V.leftCols(ncv) * Y.leftCols(want);
            for (Index i = 0; i < want; ++i) dec.eigenvectors.col(i).normalize();
            canonicalize_signs(dec.eigenvectors);
            fill_residuals(A, dec);
            return dec;
        }
        if (restart == options.max_restarts)
            throw NonConvergence("Lanczos did not converge after " + std::to_string(restart) + " restarts (worst residual " +
                                     std::to_string(worst) + ", target " + std::to_string(threshold) + ")",
                                 restart, worst);

        // Thick restart: keep the leading Ritz vectors plus the residual direction.
        const MatrixXd kept = V.leftCols(ncv) * Y.leftCols(keep);
        const VectorXd residual_dir = V.col(ncv);
        V.leftCols(keep) = kept;
        V.col(keep) = residual_dir;
        H.setZero();
        for (Index i = 0; i < keep; ++i) {
            H(i, i) = theta(i);
            H(keep, i) = H(i, keep) = beta * Y(ncv - 1, i);
        }
        filled = keep;
    }
    throw NonConvergence("Lanczos exhausted its restart budget", options.max_restarts, 0.0);
}

}  // namespace gmbm
