#include "doctest.h"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "gmbm/eigensolver.hpp"
#include "gmbm/error.hpp"
#include "gmbm/model.hpp"
#include "gmbm/rng.hpp"

using namespace gmbm;

namespace {

Eigen::MatrixXd random_symmetric(Eigen::Index n, std::uint64_t seed) {
    RngStream s(seed);
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) A(i, j) = A(j, i) = s.normal();
    return A;
}

// Largest principal angle between the column spans of orthonormal X and Y.
double max_principal_angle(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X.transpose() * Y);
    const double smallest = svd.singularValues().minCoeff();
    return std::acos(std::min(1.0, smallest));
}

}  // namespace

TEST_SUITE("eigensolver") {

TEST_CASE("complete graph on three vertices") {
    Eigen::MatrixXd K3 = Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
    const auto dec = eigentop(K3, 3);
    CHECK(dec.eigenvalues(0) == doctest::Approx(2.0));
    CHECK(dec.eigenvalues(1) == doctest::Approx(-1.0));
    CHECK(dec.eigenvalues(2) == doctest::Approx(-1.0));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(dec.eigenvectors(i, 0)) == doctest::Approx(1 / std::sqrt(3.0)));
}

TEST_CASE("single edge") {
    Eigen::MatrixXd A(2, 2);
    A << 0, 1, 1, 0;
    const auto dec = eigentop(A, 2);
    CHECK(dec.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(dec.eigenvalues(1) == doctest::Approx(-1.0));
    CHECK(std::abs(dec.eigenvectors(0, 0)) == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(dec.eigenvectors(0, 1) * dec.eigenvectors(1, 1) == doctest::Approx(-0.5));
}

TEST_CASE("non-symmetric input is rejected") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
    A(0, 1) = 1.0;
    CHECK_THROWS_AS(eigentop(A, 1), InvalidInput);
    CHECK_THROWS_AS(eigentop(Eigen::MatrixXd::Identity(3, 3), 4), InvalidParameter);
}

TEST_CASE("dense path agrees with a full solve") {
    const auto A = random_symmetric(120, 3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(A);
    EigenOptions o;
    o.path = EigenPath::dense;
    const auto dec = eigentop(A, 10, o);
    for (int i = 0; i < 10; ++i) CHECK(dec.eigenvalues(i) == doctest::Approx(full.eigenvalues()(119 - i)).epsilon(1e-12));
}

TEST_CASE("iterative path matches the dense oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto A = random_symmetric(200, 100 + seed);
        EigenOptions dense, iter;
        dense.path = EigenPath::dense;
        iter.path = EigenPath::iterative;
        const auto a = eigentop(A, 8, dense);
        const auto b = eigentop(A, 8, iter);
        CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(max_principal_angle(a.eigenvectors, b.eigenvectors) <= 1e-6);
        CHECK(b.residuals.maxCoeff() <= 1e-8 * A.norm());
        CHECK(b.path == EigenPath::iterative);
    }
}

TEST_CASE("decomposition invariants on a graph") {
    ModelParams P;
    P.n = 700;
    P.d = 8;
    P.mu = 0.3;
    P.tau = 0.1;
    P.source = ThresholdSource::threshold;
    const auto G = draw_graph(P, RngStream(1)).graph;
    const auto dec = eigentop(G, 12);
    const auto A = G.to_dense();
    for (int i = 0; i < 12; ++i) {
        if (i > 0) CHECK(dec.eigenvalues(i) <= dec.eigenvalues(i - 1));
        CHECK(std::abs(dec.eigenvectors.col(i).norm() - 1.0) <= 1e-10);
        const double r = (A * dec.eigenvectors.col(i) - dec.eigenvalues(i) * dec.eigenvectors.col(i)).norm();
        CHECK(r <= 1e-8 * G.frobenius_norm());
        for (int j = 0; j < i; ++j) CHECK(std::abs(dec.eigenvectors.col(i).dot(dec.eigenvectors.col(j))) <= 1e-8);
    }
}

TEST_CASE("full dense spectrum of an adjacency has zero trace") {
    ModelParams P;
    P.n = 150;
    P.d = 5;
    P.mu = 0.2;
    P.tau = 0.1;
    P.source = ThresholdSource::threshold;
    const auto G = draw_graph(P, RngStream(2)).graph;
    EigenOptions o;
    o.path = EigenPath::dense;
    const auto dec = eigentop(G, 150, o);
    CHECK(std::abs(dec.eigenvalues.sum()) <= 1e-8 * G.frobenius_norm());
}

TEST_CASE("sign convention") {
    Eigen::MatrixXd V(3, 2);
    V << 0.1, -0.5, -0.9, 0.5, 0.3, 0.1;
    canonicalize_signs(V);
    CHECK(V(1, 0) == 0.9);
    CHECK(V(0, 1) == 0.5);  // tie broken by the lowest index
}

TEST_CASE("operator and matrix paths agree") {
    const auto A = random_symmetric(60, 9);
    EigenOptions iter;
    iter.path = EigenPath::iterative;
    const auto a = eigentop(dense_operator(A), 5, iter);
    const auto b = eigentop(A, 5);
    CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() <= 1e-9);
}

}
