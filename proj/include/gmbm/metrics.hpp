#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gmbm/eigensolver.hpp"
#include "gmbm/gegenbauer.hpp"
#include "gmbm/model.hpp"

namespace gmbm {

/// |<x, y>| / n; the absolute value makes it blind to a global sign flip.
double label_overlap(std::span<const int> x, std::span<const int> y);

/// (1 + overlap) / 2.
double label_accuracy(std::span<const int> x, std::span<const int> y);

struct PairError {
    double abs = 0.0;       // E_{i,j} |<uh_i, uh_j> - <u_i, u_j>|
    double norm = 0.0;      // E_{i,j} |<u_i, u_j>|
    double relative = 0.0;  // abs / norm (0 when norm = 0)
};

/// Averages over all n^2 ordered pairs, i = j included. Gram rows are formed
/// in blocks so memory stays O(block * n).
PairError pair_error(const Eigen::Ref<const RowMatrix>& U_hat, const Eigen::Ref<const RowMatrix>& U);

/// Plain double loop over pairs; slow, used as a cross-check.
PairError pair_error_reference(const Eigen::Ref<const RowMatrix>& U_hat, const Eigen::Ref<const RowMatrix>& U);

struct OperatorError {
    double op = 0.0;
    double fro = 0.0;
};

/// ||U_hat U_hat^T - U U^T|| in operator and Frobenius norm. The difference has
/// rank <= 2d, so both norms come from the 2d x 2d core R S R^T after a thin
/// QR of [U_hat U].
OperatorError operator_error(const Eigen::Ref<const RowMatrix>& U_hat, const Eigen::Ref<const RowMatrix>& U);

/// 1~_n: entries 1 + L_k lambda_1 d_tilde tau / p_0. Throws InvalidInput when p_0 = 0.
Eigen::VectorXd near_constant_vector(const LatentEmbedding& latents, const ExpansionCoefficients& coeffs);

struct LinearResidual {
    double residual = 0.0;  // ||A - p_0 1~1~^T - d_tilde lambda_1 U U^T||_op
    double baseline = 0.0;  // ||A - p_0 1~1~^T||_op
};

struct ResidualOptions {
    /// At or below this size the residual matrix is formed explicitly.
    std::size_t dense_limit = 300;
    EigenOptions eigen{EigenPath::iterative, 0, 1e-11, 0, 2000, 0x5eed};
};

/// `coeffs` must be expansion_coefficients(d - 1, tau, K >= 1) at the graph's tau.
LinearResidual linear_residual(const GraphSample& G, const LatentEmbedding& latents,
                               const ExpansionCoefficients& coeffs, const ResidualOptions& options = {});
LinearResidual linear_residual(const Eigen::MatrixXd& A, const LatentEmbedding& latents,
                               const ExpansionCoefficients& coeffs, const ResidualOptions& options = {});

/// Largest |eigenvalue| of a symmetric operator, via Lanczos on its square.
double operator_norm(const SymmetricOperator& M, const EigenOptions& options);

/// Edges whose endpoints carry different labels.
std::uint64_t crossing_edge_count(const GraphSample& G, std::span<const int> labels);

struct ErrorReport {
    std::optional<double> pair_error_abs;
    std::optional<double> pair_norm;
    std::optional<double> relative_pair_error;
    std::optional<double> op_error;
    std::optional<double> fro_error;
    std::optional<double> overlap;
    std::optional<double> accuracy;
    std::optional<std::uint64_t> crossing_edges;
    std::optional<double> linear_residual;
    std::optional<double> linear_baseline;
};

}  // namespace gmbm
