#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gmbm/calibrate.hpp"
#include "gmbm/error.hpp"
#include "gmbm/gegenbauer.hpp"
#include "gmbm/metrics.hpp"
#include "gmbm/model.hpp"
#include "gmbm/spectral.hpp"

using namespace gmbm;

namespace {

ModelParams threshold_params(std::size_t n, int d, double mu, double tau) {
    ModelParams P;
    P.n = n;
    P.d = d;
    P.mu = mu;
    P.tau = tau;
    P.source = ThresholdSource::threshold;
    return P;
}

std::vector<int> balanced_labels(std::size_t n, RngStream s) {
    std::vector<int> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = i < n / 2 ? 1 : -1;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(x[i], x[s.next_u64() % (i + 1)]);
    return x;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("planted gap") {
    std::vector<double> eta{10, 5, 5, 5, 1, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3};
    CHECK(detect_dimension(eta, 8, 5.0) == 3);
}

TEST_CASE("arithmetic spectrum falls back to the largest gap") {
    std::vector<double> eta;
    for (int i = 0; i < 20; ++i) eta.push_back(20.0 - i);
    // Equal gaps: every gap equals the median, none reaches 10x; argmax picks the first.
    CHECK(detect_dimension(eta, 10, 10.0) == 1);
    eta[6] -= 0.5;  // widens gap 5 -> 6 and narrows 6 -> 7
    CHECK(detect_dimension(eta, 10, 10.0) == 5);
}

TEST_CASE("detect_dimension preconditions") {
    CHECK_THROWS_AS(detect_dimension(std::vector<double>{1.0, 0.5}, 1, 5.0), InvalidInput);
    CHECK_THROWS_AS(detect_dimension(std::vector<double>{4, 3, 2, 1}, 3, 5.0), InvalidInput);
    CHECK(default_gap_range(64, 4000) == 128);
    CHECK(default_gap_range(64, 100) == 25);
    CHECK(default_gap_range(1, 2) == 1);
}

TEST_CASE("embedding gram identity") {
    ModelParams P = threshold_params(400, 6, 0.3, 0.1);
    const auto G = draw_graph(P, RngStream(4)).graph;
    const auto dec = eigentop(G, 7);
    const double lambda1 = lambda1_closed_form(5, 0.1);
    const auto E = build_embedding(dec, 6, lambda1, true);
    REQUIRE(E.gram);
    Eigen::MatrixXd target = Eigen::MatrixXd::Zero(400, 400);
    int positive = 0;
    for (int i = 1; i <= 6; ++i) {
        target += std::max(dec.eigenvalues(i), 0.0) * dec.eigenvectors.col(i) * dec.eigenvectors.col(i).transpose();
        positive += dec.eigenvalues(i) > 0;
    }
    CHECK((E.scale * *E.gram - target).norm() <= 1e-8);
    CHECK(E.scale == doctest::Approx(5 * lambda1));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(E.U_hat);
    CHECK(lu.rank() <= positive);
}

TEST_CASE("non-positive spectrum embeds to zero") {
    SpectralDecomposition dec;
    dec.m = 4;
    dec.eigenvalues = Eigen::VectorXd::Constant(4, -1.0);
    dec.eigenvectors = Eigen::MatrixXd::Identity(5, 4);
    const auto E = build_embedding(dec, 3, 0.1);
    CHECK(E.U_hat.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(build_embedding(dec, 3, 0.0), InvalidParameter);
    CHECK_THROWS_AS(build_embedding(dec, 4, 0.1), InvalidInput);
}

TEST_CASE("rank-one clustering") {
    const auto x = balanced_labels(60, RngStream(1));
    Eigen::VectorXd v(60);
    for (int i = 0; i < 60; ++i) v(i) = x[i];
    const Eigen::MatrixXd M = v * v.transpose();
    const auto y = cluster_by_top_eigvec(M);
    CHECK(label_overlap(x, y) == 1.0);
    CHECK(cluster_by_top_eigvec(Eigen::MatrixXd(3.0 * M)) == y);
    CHECK(cluster_by_top_eigvec(gram_operator(v)) == y);
}

TEST_CASE("zero matrix labels everything +1") {
    const auto y = cluster_by_top_eigvec(Eigen::MatrixXd::Zero(5, 5));
    CHECK(y == std::vector<int>(5, 1));
    CHECK(sign_labels(Eigen::VectorXd::Zero(3)) == std::vector<int>{1, 1, 1});
}

TEST_CASE("rank-one plus perturbation") {
    const std::size_t n = 200;
    const auto x = balanced_labels(n, RngStream(2));
    RngStream s(3);
    Eigen::MatrixXd D(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) D(i, j) = D(j, i) = s.normal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
    D *= 0.1 * n / es.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::VectorXd v(n);
    for (std::size_t i = 0; i < n; ++i) v(i) = x[i];
    const auto y = cluster_by_top_eigvec(Eigen::MatrixXd(v * v.transpose() + D));
    CHECK(label_overlap(x, y) >= 0.9);
}

TEST_CASE("two disjoint cliques") {
    const std::size_t n = 40;
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;
    for (std::int32_t i = 0; i < 40; ++i)
        for (std::int32_t j = i + 1; j < 40; ++j)
            if ((i < 20) == (j < 20)) edges.emplace_back(i, j);
    const auto G = graph_from_edges(n, edges);
    std::vector<int> truth(n);
    for (std::size_t i = 0; i < n; ++i) truth[i] = i < 20 ? 1 : -1;
    // The top eigenvalue 19 is double, so w_1 is only fixed up to a rotation in
    // span{1_A, 1_B}; it is constant on each clique. The median cut separates
    // the cliques for every such w_1, the zero cut keeps each clique together.
    CHECK(label_overlap(truth, cluster_graph(G, 1, CutRule::median)) == 1.0);
    const auto zero = cluster_graph(G, 1);
    for (std::size_t i = 1; i < n; ++i)
        if ((i < 20) == (i - 1 < 20)) CHECK(zero[i] == zero[i - 1]);
}

TEST_CASE("null quantile and decision rule") {
    std::vector<double> s(199);
    std::iota(s.begin(), s.end(), 1.0);
    CHECK(null_quantile(s, 0.05) == 190.0);  // ceil(0.95 * 200) = 190
    CHECK(null_quantile({1, 2, 3}, 0.01) == 3.0);
    CHECK(decide(1.0, 1.0) == Decision::accept_h0);
    CHECK(decide(1.0 + 1e-12, 1.0) == Decision::reject_h0);
}

TEST_CASE("paper threshold formula") {
    const double n = 1000, d = 20, p = 0.1, l = 0.01, beta = 2.0;
    const double a = std::sqrt(std::log(1 / p) / d), b = std::sqrt(d / (n * p * std::log(1 / p)));
    const double expect = n * l * (1 + 0.5 * std::max(a, b) * std::pow(std::log(n), beta));
    CHECK(paper_test_threshold(1000, 20, 0.1, 0.01, 2.0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("empirical null needs at least 20 trials") {
    CHECK_THROWS_AS(empirical_null_threshold(200, 8, 0.2, 0.05, 19, RngStream(1)), InvalidParameter);
}

TEST_CASE("test decision carries its policy") {
    ModelParams P = threshold_params(300, 8, 0.0, 0.15);
    P.p = 0.1;
    const auto G = draw_graph(P, RngStream(5)).graph;
    const auto dec = eigentop(G, 2);
    TestPolicy policy;
    policy.threshold = 1e9;
    const auto r = test_two_community(dec, P, policy);
    CHECK(r.statistic == dec.eigenvalues(1));
    CHECK(r.decision == Decision::accept_h0);
    policy.threshold = -1e9;
    CHECK(test_two_community(dec, P, policy).decision == Decision::reject_h0);
    TestPolicy paper;
    paper.kind = TestPolicyKind::paper_formula;
    paper.lambda1_null = 0.01;
    const auto q = test_two_community(dec, P, paper);
    CHECK(q.threshold == doctest::Approx(paper_test_threshold(300, 8, 0.1, 0.01, 9.0)));
}

TEST_CASE("clustering uses the second eigenvector") {
    ModelParams P = threshold_params(600, 16, 0.5, 0.1);
    const auto draw = draw_graph(P, RngStream(6));
    const auto y = cluster_graph(draw.graph, 16);
    CHECK(label_accuracy(draw.latents.labels, y) >= 0.9);
    const auto dec = eigentop(draw.graph, 17);
    CHECK(labels_from_decomposition(dec) == y);
    CHECK(label_overlap(draw.latents.labels, y) == label_overlap(draw.latents.labels, sign_labels(-dec.eigenvectors.col(1))));
}

}
