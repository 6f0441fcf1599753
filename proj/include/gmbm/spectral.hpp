#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gmbm/eigensolver.hpp"
#include "gmbm/model.hpp"
#include "gmbm/rng.hpp"

namespace gmbm {

/// Smallest i in [1, i_max] whose gap eta_i - eta_{i+1} is at least gamma
/// times the median gap over the same range; the largest gap otherwise.
/// Needs at least i_max + 2 eigenvalues (and at least 3).
int detect_dimension(std::span<const double> eigenvalues, int i_max, double gamma = 8.0);

/// Default search range min(2 d_guess, n / 4) for the gap rule.
int default_gap_range(int d_guess, std::size_t n);

struct EmbeddingResult {
    RowMatrix U_hat;  // n x d, row j is u_hat_j
    double scale = 0.0;  // d_tilde * lambda1
    std::optional<Eigen::MatrixXd> gram;
};

/// u_hat_j(i) = sqrt(max(eta_i, 0) / ((d - 1) lambda1)) w_i(j) for i = 1..d.
EmbeddingResult build_embedding(const SpectralDecomposition& dec, int d, double lambda1, bool with_gram = false);

/// Entrywise sign of the top eigenvector; zeros map to +1.
std::vector<int> sign_labels(const Eigen::Ref<const Eigen::VectorXd>& vector);

std::vector<int> cluster_by_top_eigvec(const Eigen::MatrixXd& M, const EigenOptions& options = {});
std::vector<int> cluster_by_top_eigvec(const SymmetricOperator& M, const EigenOptions& options = {});

/// x -> U (U^T x), without forming the n x n Gram matrix.
SymmetricOperator gram_operator(const Eigen::Ref<const RowMatrix>& U);

enum class CutRule { zero, median };

/// Labels from the second adjacency eigenvector w_1, cut at 0 (or at its median).
std::vector<int> cluster_graph(const GraphSample& G, int d_est, CutRule cut = CutRule::zero,
                               const EigenOptions& options = {});
std::vector<int> labels_from_decomposition(const SpectralDecomposition& dec, CutRule cut = CutRule::zero);

enum class TestPolicyKind { paper_formula, empirical_null };

std::string_view to_string(TestPolicyKind kind);

struct TestPolicy {
    TestPolicyKind kind = TestPolicyKind::empirical_null;
    /// Paper formula: exponent of the log n factor.
    double beta = 9.0;
    /// Paper formula: lambda_1' from the mu = 0 calibration; computed when absent.
    std::optional<double> lambda1_null;
    /// Empirical null: level and number of simulated null graphs.
    double alpha = 0.05;
    int trials = 200;
    std::uint64_t seed = 0;
    /// Empirical null: a threshold calibrated earlier, reused without simulation.
    std::optional<double> threshold;
};

enum class Decision { accept_h0, reject_h0 };

std::string_view to_string(Decision decision);

struct TestDecision {
    double statistic = 0.0;
    double threshold = 0.0;
    TestPolicyKind policy = TestPolicyKind::empirical_null;
    Decision decision = Decision::accept_h0;
    std::optional<int> null_trials;
    std::optional<double> null_level;
};

/// n lambda_1' (1 + 1/2 max{sqrt(log(1/p)/d), sqrt(d/(n p log(1/p)))} (log n)^beta).
double paper_test_threshold(std::size_t n, int d, double p, double lambda1_null, double beta);

/// Order statistic used as the (1 - alpha) null quantile: the
/// ceil((1 - alpha)(T + 1))-th smallest of T draws (the largest if that index exceeds T).
double null_quantile(std::vector<double> statistics, double alpha);

struct NullCalibration {
    double threshold = 0.0;
    double tau = 0.0;
    std::vector<double> statistics;
};

/// eta_1 for a graph: the second-largest adjacency eigenvalue.
double second_eigenvalue(const GraphSample& G, const EigenOptions& options = {});

/// Simulates `trials` mu = 0 graphs with the same (n, d, p) and returns the
/// (1 - alpha) quantile of eta_1. Throws InvalidParameter when trials < 20.
NullCalibration empirical_null_threshold(std::size_t n, int d, double p, double alpha, int trials,
                                         const RngStream& stream, std::optional<double> tau_null = std::nullopt);

TestDecision test_two_community(const SpectralDecomposition& dec, const ModelParams& params, const TestPolicy& policy);

/// Decision rule alone: reject iff statistic > threshold.
Decision decide(double statistic, double threshold);

}  // namespace gmbm
