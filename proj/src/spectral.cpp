#include "gmbm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "gmbm/calibrate.hpp"
#include "gmbm/error.hpp"
#include "gmbm/gegenbauer.hpp"

namespace gmbm {

namespace {

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

int detect_dimension(std::span<const double> eigenvalues, int i_max, double gamma) {
    if (eigenvalues.size() < 3) throw InvalidInput("detect_dimension needs at least 3 eigenvalues");
    if (i_max < 1) throw InvalidParameter("i_max must be at least 1");
    if (eigenvalues.size() < static_cast<std::size_t>(i_max) + 2)
        throw InvalidInput("detect_dimension needs i_max + 2 eigenvalues");

    std::vector<double> gaps(static_cast<std::size_t>(i_max));
    for (int i = 1; i <= i_max; ++i) gaps[static_cast<std::size_t>(i - 1)] = eigenvalues[i] - eigenvalues[i + 1];
    const double cut = gamma * median_of(gaps);
    for (int i = 1; i <= i_max; ++i) {
        const double gap = gaps[static_cast<std::size_t>(i - 1)];
        if (gap > 0.0 && gap >= cut) return i;
    }
    return static_cast<int>(std::max_element(gaps.begin(), gaps.end()) - gaps.begin()) + 1;
}

int default_gap_range(int d_guess, std::size_t n) {
    return std::max(1, std::min(2 * d_guess, static_cast<int>(n / 4)));
}

EmbeddingResult build_embedding(const SpectralDecomposition& dec, int d, double lambda1, bool with_gram) {
    if (!(lambda1 > 0.0)) throw InvalidParameter("lambda1 must be positive");
    if (d < 2) throw InvalidParameter("embedding dimension must be at least 2");
    if (dec.m < static_cast<std::size_t>(d) + 1) throw InvalidInput("decomposition has fewer than d + 1 eigenpairs");

    EmbeddingResult out;
    out.scale = (d - 1) * lambda1;
    const auto n = dec.eigenvectors.rows();
    out.U_hat.resize(n, d);
    for (int i = 1; i <= d; ++i) {
        const double weight = std::sqrt(std::max(dec.eigenvalues(i), 0.0) / out.scale);
        out.U_hat.col(i - 1) = weight * dec.eigenvectors.col(i);
    }
    if (with_gram) out.gram = out.U_hat * out.U_hat.transpose();
    return out;
}

std::vector<int> sign_labels(const Eigen::Ref<const Eigen::VectorXd>& vector) {
    std::vector<int> out(static_cast<std::size_t>(vector.size()));
    for (Eigen::Index i = 0; i < vector.size(); ++i) out[static_cast<std::size_t>(i)] = vector(i) < 0.0 ? -1 : 1;
    return out;
}

SymmetricOperator gram_operator(const Eigen::Ref<const RowMatrix>& U) {
    auto factor = std::make_shared<const RowMatrix>(U);
    SymmetricOperator op;
    op.n = static_cast<std::size_t>(U.rows());
    op.norm_hint = std::max(U.squaredNorm(), 1e-300);
    op.apply = [factor](std::span<const double> x, std::span<double> y) {
        const auto n = factor->rows();
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
        Eigen::Map<Eigen::VectorXd> yv(y.data(), n);
        const Eigen::VectorXd t = factor->transpose() * xv;
        yv.noalias() = *factor * t;
    };
    return op;
}

std::vector<int> cluster_by_top_eigvec(const Eigen::MatrixXd& M, const EigenOptions& options) {
    const auto dec = eigentop(M, 1, options);
    return sign_labels(dec.eigenvectors.col(0));
}

std::vector<int> cluster_by_top_eigvec(const SymmetricOperator& M, const EigenOptions& options) {
    const auto dec = eigentop(M, 1, options);
    return sign_labels(dec.eigenvectors.col(0));
}

std::vector<int> labels_from_decomposition(const SpectralDecomposition& dec, CutRule cut) {
    if (dec.m < 2) throw InvalidInput("clustering needs the second eigenvector");
    const Eigen::VectorXd w1 = dec.eigenvectors.col(1);
    if (cut == CutRule::zero) return sign_labels(w1);
    std::vector<double> entries(w1.data(), w1.data() + w1.size());
    const double median = median_of(entries);
    return sign_labels((w1.array() - median).matrix());
}

std::vector<int> cluster_graph(const GraphSample& G, int d_est, CutRule cut, const EigenOptions& options) {
    if (G.n < 2) throw InvalidInput("cannot cluster a graph with fewer than 2 vertices");
    const auto m = std::min<std::size_t>(G.n, static_cast<std::size_t>(std::max(2, d_est + 1)));
    return labels_from_decomposition(eigentop(G, m, options), cut);
}

std::string_view to_string(TestPolicyKind kind) {
    return kind == TestPolicyKind::paper_formula ? "paper" : "null";
}

std::string_view to_string(Decision decision) {
    return decision == Decision::reject_h0 ? "reject-H0" : "accept-H0";
}

Decision decide(double statistic, double threshold) {
    return statistic > threshold ? Decision::reject_h0 : Decision::accept_h0;
}

double paper_test_threshold(std::size_t n, int d, double p, double lambda1_null, double beta) {
    const double nn = static_cast<double>(n);
    const double log_inv_p = std::log(1.0 / p);
    const double spread = std::max(std::sqrt(log_inv_p / d), std::sqrt(d / (nn * p * log_inv_p)));
    return nn * lambda1_null * (1.0 + 0.5 * spread * std::pow(std::log(nn), beta));
}

double null_quantile(std::vector<double> statistics, double alpha) {
    if (statistics.empty()) throw InvalidInput("no null statistics");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
    std::sort(statistics.begin(), statistics.end());
    const auto T = static_cast<double>(statistics.size());
    auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * (T + 1.0) - 1e-12));
    rank = std::clamp<std::size_t>(rank, 1, statistics.size());
    return statistics[rank - 1];
}

double second_eigenvalue(const GraphSample& G, const EigenOptions& options) {
    return eigentop(G, 2, options).eigenvalues(1);
}

NullCalibration empirical_null_threshold(std::size_t n, int d, double p, double alpha, int trials,
                                         const RngStream& stream, std::optional<double> tau_null) {
    if (trials < 20) throw InvalidParameter("empirical null needs at least 20 trials");
    ModelParams null_params;
    null_params.n = n;
    null_params.d = d;
    null_params.mu = 0.0;
    null_params.p = p;
    null_params.tau = tau_null;
    null_params.validate();
    if (!null_params.tau) null_params = resolve_threshold(null_params, stream.child("null-calibration"));

    NullCalibration out;
    out.tau = *null_params.tau;
    out.statistics.resize(static_cast<std::size_t>(trials));
    const RngStream draws = stream.child("null-graphs");
    for (int t = 0; t < trials; ++t) {
        const auto draw = draw_graph(null_params, draws.child(static_cast<std::uint64_t>(t)));
        out.statistics[static_cast<std::size_t>(t)] = second_eigenvalue(draw.graph);
    }
    out.threshold = null_quantile(out.statistics, alpha);
    return out;
}

TestDecision test_two_community(const SpectralDecomposition& dec, const ModelParams& params, const TestPolicy& policy) {
    if (dec.m < 2) throw InvalidInput("the test needs at least 2 eigenvalues");
    if (!params.p) throw InvalidParameter("the test needs the edge probability p");
    TestDecision out;
    out.statistic = dec.eigenvalues(1);
    out.policy = policy.kind;
    if (policy.kind == TestPolicyKind::paper_formula) {
        double lambda1_null = 0.0;
        if (policy.lambda1_null) {
            lambda1_null = *policy.lambda1_null;
        } else {
            const auto calibration = calibrate_tau(params.d, 0.0, *params.p, default_calibration_tolerance(*params.p),
                                                   RngStream(policy.seed).child("null-calibration").child("calibrate"));
            lambda1_null = lambda1_closed_form(params.d - 1, calibration.tau);
        }
        out.threshold = paper_test_threshold(params.n, params.d, *params.p, lambda1_null, policy.beta);
    } else {
        if (policy.threshold) {
            out.threshold = *policy.threshold;
        } else {
            const auto null = empirical_null_threshold(params.n, params.d, *params.p, policy.alpha, policy.trials,
                                                       RngStream(policy.seed));
            out.threshold = null.threshold;
        }
        out.null_trials = policy.trials;
        out.null_level = policy.alpha;
    }
    out.decision = decide(out.statistic, out.threshold);
    return out;
}

}  // namespace gmbm
