#include "doctest.h"

#include <cmath>
#include <vector>

#include "gmbm/error.hpp"
#include "gmbm/model.hpp"
#include "gmbm/rng.hpp"

using namespace gmbm;

namespace {

ModelParams params(std::size_t n, int d, double mu, double tau = 0.1) {
    ModelParams P;
    P.n = n;
    P.d = d;
    P.mu = mu;
    P.tau = tau;
    P.source = ThresholdSource::threshold;
    return P;
}

LatentEmbedding from_rows(std::vector<std::vector<double>> rows) {
    RowMatrix U(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k) U(i, k) = rows[i][k];
    return decompose(U, std::vector<int>(rows.size(), 1));
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("decomposition of (0.6, 0.8, 0)") {
    const auto L = from_rows({{0.6, 0.8, 0.0}});
    CHECK(L.a(0) == doctest::Approx(0.6));
    CHECK(L.ell(0) == doctest::Approx(0.8));
    CHECK(L.L(0) == doctest::Approx(-0.2));
    CHECK(L.V(0, 0) == doctest::Approx(1.0));
    CHECK(L.V(0, 1) == doctest::Approx(0.0));
    CHECK(L.d_tilde == 2);
}

TEST_CASE("decomposition invariants on a sample") {
    const auto L = sample_latents(params(500, 12, 0.3), RngStream(4));
    for (Eigen::Index i = 0; i < 500; ++i) {
        CHECK(std::abs(L.V.row(i).norm() - 1.0) <= 1e-12);
        CHECK(std::abs(L.a(i) * L.a(i) + L.ell(i) * L.ell(i) - L.U.row(i).squaredNorm()) <= 1e-12);
        CHECK(L.L(i) == L.ell(i) - 1.0);
    }
}

TEST_CASE("zero tail norm is rejected by local thresholds") {
    const auto L = from_rows({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
    CHECK(L.V.row(0).norm() == 0.0);
    CHECK_THROWS_AS(local_thresholds(L, 0.1), DegenerateLatent);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(sample_latents(params(10, 1, 0.1), RngStream(1)), InvalidParameter);
    CHECK_THROWS_AS(params(1, 4, 0.1).validate(), InvalidParameter);
    CHECK_THROWS_AS(params(10, 4, -0.1).validate(), InvalidParameter);
    auto P = params(10, 4, 0.1);
    P.source = ThresholdSource::edge_probability;
    P.p = 0.7;
    CHECK_THROWS_AS(P.validate(), InvalidParameter);
    CHECK_THROWS_AS(params(kMaxVertices + 1, 4, 0.1).validate(), CapacityError);
    auto missing = params(10, 4, 0.1);
    missing.tau.reset();
    CHECK_THROWS_AS(missing.validate(), InvalidParameter);
    CHECK_NOTHROW(params(10, 4, 0.1).validate());
}

TEST_CASE("label-weighted first coordinate has mean mu") {
    const std::size_t n = 100000;
    const int d = 4;
    const auto L = sample_latents(params(n, d, 0.5), RngStream(77));
    double m = 0;
    for (std::size_t i = 0; i < n; ++i) m += L.labels[i] * L.U(static_cast<Eigen::Index>(i), 0);
    m /= n;
    CHECK(std::abs(m - 0.5) <= 3.0 / std::sqrt(double(d) * n));
}

TEST_CASE("squared norm has mean 1 at mu = 0") {
    const std::size_t n = 50000;
    const int d = 8;
    const auto L = sample_latents(params(n, d, 0.0), RngStream(78));
    const double m = L.U.rowwise().squaredNorm().mean();
    CHECK(std::abs(m - 1.0) <= 3.0 * std::sqrt(2.0 / (d * double(n))));
}

TEST_CASE("labels are balanced") {
    const auto L = sample_latents(params(40000, 3, 0.2), RngStream(79));
    int sum = 0;
    for (int x : L.labels) sum += x;
    CHECK(std::abs(sum) < 4 * std::sqrt(40000.0));
}

TEST_CASE("sampling is deterministic") {
    const auto a = sample_latents(params(200, 6, 0.3), RngStream(5));
    const auto b = sample_latents(params(200, 6, 0.3), RngStream(5));
    CHECK(a.U == b.U);
    CHECK(a.labels == b.labels);
}

TEST_CASE("edge rule examples") {
    const auto same = from_rows({{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
    CHECK(connect_graph(same, 0.5).edge_count == 1);
    const auto orth = from_rows({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
    CHECK(connect_graph(orth, 0.5).edge_count == 0);
    // <u1, u2> = 0.25 exactly in binary.
    const auto tie = from_rows({{0.5, 0.5, 0.0}, {0.5, 0.0, 0.5}});
    CHECK(connect_graph(tie, 0.25).edge_count == 1);
    CHECK(connect_graph(tie, std::nextafter(0.25, 1.0)).edge_count == 0);
}

TEST_CASE("adjacency invariants") {
    const auto L = sample_latents(params(300, 10, 0.3), RngStream(8));
    const auto G = connect_graph(L, 0.1);
    std::uint64_t ones = 0;
    for (std::size_t i = 0; i < G.n; ++i) {
        CHECK_FALSE(G.adjacency.test(i, i));
        for (std::size_t j = 0; j < G.n; ++j) {
            REQUIRE(G.adjacency.test(i, j) == G.adjacency.test(j, i));
            const bool expect = i != j && L.U.row(i).dot(L.U.row(j)) >= 0.1;
            REQUIRE(G.adjacency.test(i, j) == expect);
            ones += G.adjacency.test(i, j);
        }
        auto nb = G.neighbors_of(i);
        for (std::size_t t = 1; t < nb.size(); ++t) REQUIRE(nb[t - 1] < nb[t]);
    }
    CHECK(G.edge_count * 2 == ones);
    const auto dense = G.to_dense();
    CHECK(dense.sum() == doctest::Approx(double(ones)));
    CHECK(G.edges().size() == G.edge_count);
}

TEST_CASE("local threshold examples") {
    const auto L = from_rows({{0.1, 1.0, 0.0}, {0.2, 0.0, 1.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
    const auto T = local_thresholds(L, 0.3);
    CHECK(T(0, 1) == doctest::Approx(0.28));
    CHECK(T(1, 0) == doctest::Approx(0.28));
    CHECK(T(2, 3) == doctest::Approx(0.3));
}

TEST_CASE("edges rebuilt from local thresholds match") {
    const auto L = sample_latents(params(400, 9, 0.25), RngStream(12));
    const double tau = 0.08;
    const auto G = connect_graph(L, tau);
    const auto T = local_thresholds(L, tau);
    int mismatches = 0;
    for (Eigen::Index i = 0; i < 400; ++i)
        for (Eigen::Index j = i + 1; j < 400; ++j) {
            const double vv = L.V.row(i).dot(L.V.row(j));
            const double exact = L.U.row(i).dot(L.U.row(j));
            // Skip pairs within rounding of the threshold, where the two forms may round differently.
            if (std::abs(exact - tau) < 1e-12) continue;
            mismatches += (vv >= T(i, j)) != G.adjacency.test(i, j);
        }
    CHECK(mismatches == 0);
}

TEST_CASE("graph_from_edges rejects bad input") {
    std::vector<std::pair<std::int32_t, std::int32_t>> self{{1, 1}};
    CHECK_THROWS_AS(graph_from_edges(3, self), InvalidInput);
    std::vector<std::pair<std::int32_t, std::int32_t>> dup{{0, 1}, {1, 0}};
    CHECK_THROWS_AS(graph_from_edges(3, dup), InvalidInput);
    std::vector<std::pair<std::int32_t, std::int32_t>> range{{0, 3}};
    CHECK_THROWS_AS(graph_from_edges(3, range), InvalidInput);
}

TEST_CASE("sign symmetry at mu = 0: flipped labels give the same graph") {
    auto L = sample_latents(params(200, 5, 0.0), RngStream(21));
    auto flipped = L.labels;
    for (auto& x : flipped) x = -x;
    const auto G1 = connect_graph(L, 0.1);
    const auto G2 = connect_graph(decompose(L.U, flipped), 0.1);
    CHECK(G1.adjacency == G2.adjacency);
}

}
