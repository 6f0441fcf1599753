#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace gmbm {

struct GraphSample;

/// A symmetric linear map given by its action. `norm_hint` is a cheap upper
/// bound on the operator norm (e.g. the Frobenius norm) used to scale
/// convergence tolerances.
struct SymmetricOperator {
    std::size_t n = 0;
    std::function<void(std::span<const double>, std::span<double>)> apply;
    double norm_hint = 1.0;
};

SymmetricOperator dense_operator(const Eigen::MatrixXd& A);
SymmetricOperator adjacency_operator(const GraphSample& G);

enum class EigenPath { automatic, dense, iterative };

std::string_view to_string(EigenPath path);

struct EigenOptions {
    EigenPath path = EigenPath::automatic;
    /// Dense tridiagonalization is used at or below this size in automatic mode.
    std::size_t dense_limit = 512;
    /// Ritz pairs are accepted once |A w - eta w| <= tol * norm_hint.
    double tol = 1e-10;
    /// Krylov basis size; 0 picks max(2m + 20, m + 40), clipped to n.
    std::size_t basis_size = 0;
    int max_restarts = 500;
    std::uint64_t start_seed = 0x5eed;
};

/// Top-m eigenpairs by algebraic value with residual certificates.
struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;   // non-increasing
    Eigen::MatrixXd eigenvectors;  // n x m, unit columns
    Eigen::VectorXd residuals;     // |A w_i - eta_i w_i|
    std::size_t m = 0;
    EigenPath path = EigenPath::dense;
    int restarts = 0;
    std::size_t matvecs = 0;
    double norm_hint = 0.0;
};

/// Flips each column so its largest-magnitude entry (lowest index on ties) is positive.
void canonicalize_signs(Eigen::MatrixXd& vectors);

/// Dense path: the matrix must be exactly symmetric (InvalidInput otherwise).
SpectralDecomposition eigentop(const Eigen::MatrixXd& A, std::size_t m, const EigenOptions& options = {});
/// Operator path; automatic mode densifies by applying the operator to the
/// identity when n <= dense_limit.
SpectralDecomposition eigentop(const SymmetricOperator& A, std::size_t m, const EigenOptions& options = {});
SpectralDecomposition eigentop(const GraphSample& G, std::size_t m, const EigenOptions& options = {});

/// Thick-restart Lanczos with full reorthogonalization (two passes of
/// classical Gram-Schmidt against the whole basis). Throws NonConvergence.
SpectralDecomposition lanczos_top(const SymmetricOperator& A, std::size_t m, const EigenOptions& options);

}  // namespace gmbm
