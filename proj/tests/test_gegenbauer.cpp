#include "doctest.h"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "gmbm/calibrate.hpp"
#include "gmbm/error.hpp"
#include "gmbm/gegenbauer.hpp"

using namespace gmbm;
using boost::multiprecision::cpp_int;

namespace {

cpp_int binomial(int n, int k) {
    if (k < 0 || n < k) return 0;
    cpp_int r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Density of xi = sqrt(dim) <v, w> on [-sqrt(dim), sqrt(dim)].
double sphere_density(int dim, double xi) {
    const double c = std::exp(std::lgamma(dim / 2.0) - std::lgamma((dim - 1) / 2.0)) / std::sqrt(dim * std::numbers::pi);
    const double r = 1.0 - xi * xi / dim;
    return r <= 0 ? 0.0 : c * std::pow(r, (dim - 3) / 2.0);
}

// tanh-sinh clusters nodes at the endpoints, so the interval is split at the
// density peak xi = 0; over a wide interval it can step past the peak.
double tanh_sinh(const std::function<double(double)>& f, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> q;
    if (a < 0.0 && b > 0.0) return q.integrate(f, a, 0.0, 1e-14) + q.integrate(f, 0.0, b, 1e-14);
    return q.integrate(f, a, b, 1e-14);
}

}  // namespace

TEST_SUITE("gegenbauer") {

TEST_CASE("harmonic dimension examples") {
    CHECK(harmonic_dimension(3, 2).exact == 5);
    for (int d : {3, 10, 64, 1000}) CHECK(harmonic_dimension(d, 1).exact == d);
    for (int d : {3, 7, 200}) CHECK(harmonic_dimension(d, 0).exact == 1);
    CHECK_THROWS_AS(harmonic_dimension(2, 1), InvalidParameter);
}

TEST_CASE("harmonic dimension matches the binomial difference") {
    // N_k = C(k + dim - 1, dim - 1) - C(k + dim - 3, dim - 1).
    for (int dim : {3, 4, 10, 63, 400})
        for (int k = 1; k <= 30; ++k) {
            const cpp_int oracle = binomial(k + dim - 1, dim - 1) - binomial(k + dim - 3, dim - 1);
            const auto N = harmonic_dimension(dim, k);
            REQUIRE(N.exact == oracle);
            CHECK(N.log_value == doctest::Approx(std::log(N.value())).epsilon(1e-12));
        }
    // Large cases stay exact and finite in log space.
    const auto big = harmonic_dimension(100000, 40);
    CHECK(big.exact == binomial(40 + 99999, 99999) - binomial(40 + 99997, 99999));
    CHECK(std::isfinite(log_harmonic_dimension(1000000, 60)));
}

TEST_CASE("low-degree polynomials") {
    const GegenbauerBasis B4(4, 5);
    CHECK(B4.eval(2, 0.0) == doctest::Approx(-1.0).epsilon(1e-14));
    for (double x : {-2.0, -0.3, 0.0, 1.7}) {
        CHECK(B4.eval(0, x) == 1.0);
        CHECK(B4.eval(1, x) == x);
    }
    for (int dim : {5, 17, 300}) {
        const GegenbauerBasis B(dim, 2);
        for (double x : {-1.5, 0.2, 3.0})
            CHECK(B.eval(2, x) == doctest::Approx(std::sqrt((dim + 2.0) / (dim - 1.0)) * (x * x - 1) / std::sqrt(2.0)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(B4.eval(6, 0.1), InvalidParameter);
}

TEST_CASE("recurrence coefficients") {
    const GegenbauerBasis B(12, 8);
    for (int k = 0; k < 8; ++k) {
        const double dim = 12;
        const double a = std::sqrt((k + 1) * (dim + k - 2) * dim / ((dim + 2 * k) * (dim + 2 * k - 2)));
        CHECK(B.recurrence_coefficient(k) == doctest::Approx(a).epsilon(1e-15));
        CHECK(B.recurrence_coefficient(k) > 0);
    }
}

TEST_CASE("eval_all agrees with eval") {
    const GegenbauerBasis B(30, 12);
    std::vector<double> all(13);
    B.eval_all(1.234, all);
    for (int k = 0; k <= 12; ++k) CHECK(all[k] == B.eval(k, 1.234));
}

TEST_CASE("orthonormality against the sphere law by quadrature") {
    for (int dim : {5, 40, 250}) {
        const GegenbauerBasis B(dim, 6);
        const double r = std::sqrt(double(dim));
        for (int k = 0; k <= 6; ++k)
            for (int l = k; l <= 6; ++l) {
                const double v = tanh_sinh([&](double x) { return B.eval(k, x) * B.eval(l, x) * sphere_density(dim, x); }, -r, r);
                CHECK(std::abs(v - (k == l ? 1.0 : 0.0)) <= 1e-9);
            }
    }
}

TEST_CASE("endpoint identity") {
    for (int dim : {10, 50, 200}) {
        const GegenbauerBasis B(dim, 15);
        for (int k = 0; k <= 15; ++k) {
            const double target = std::exp(0.5 * log_harmonic_dimension(dim, k));
            CHECK(std::abs(B.eval(k, std::sqrt(double(dim))) - target) / target <= 1e-8);
        }
    }
}

TEST_CASE("first coefficient examples") {
    CHECK(std::abs(lambda1_closed_form(3, 0.0) - 0.25) <= 1e-10);
    for (int dim : {3, 20, 500}) CHECK(std::abs(expansion_coefficient(dim, 0.0, 2).lambda) <= 1e-15);
}

TEST_CASE("first coefficient matches its defining integral") {
    // lambda_1 = (1 / sqrt(dim)) E[xi 1(xi >= sqrt(dim) tau)].
    for (int dim : {4, 50, 300})
        for (double tau : {-0.2, 0.0, 0.1, 0.3}) {
            const double r = std::sqrt(double(dim));
            const double oracle = tanh_sinh([&](double x) { return x * sphere_density(dim, x); }, r * tau, r) / r;
            CHECK(lambda1_closed_form(dim, tau) == doctest::Approx(oracle).epsilon(1e-9));
        }
}

TEST_CASE("coefficients match quadrature of q_k") {
    for (int dim : {6, 63, 400})
        for (double tau : {0.05, 0.2}) {
            const auto C = expansion_coefficients(dim, tau, 8);
            const GegenbauerBasis B(dim, 8);
            const double r = std::sqrt(double(dim));
            CHECK(C.p0() == doctest::Approx(sphere_tail(dim, tau)).epsilon(1e-12));
            for (int k = 1; k <= 8; ++k) {
                const double c = tanh_sinh([&](double x) { return B.eval(k, x) * sphere_density(dim, x); }, r * tau, r);
                CHECK(std::abs(C.c[k] - c) <= 1e-8 * std::max(1.0, std::abs(c)) + 1e-12);
                const double sqrt_n = std::exp(0.5 * log_harmonic_dimension(dim, k));
                CHECK(C.lambda[k] == doctest::Approx(C.c[k] / sqrt_n).epsilon(1e-10));
                CHECK(C.method[k] == (k <= 2 ? CoefficientMethod::closed_form : CoefficientMethod::quadrature));
            }
        }
}

TEST_CASE("parseval partial sums") {
    for (int dim : {20, 63})
        for (double tau : {0.05, 0.15}) {
            const auto C = expansion_coefficients(dim, tau, 24);
            double sum = 0;
            std::vector<double> partial;
            for (double c : C.c) {
                sum += c * c;
                partial.push_back(sum);
            }
            CHECK(sum <= C.p0() * (1 + 1e-6));
            for (std::size_t k = 1; k < partial.size(); ++k) CHECK(partial[k] >= partial[k - 1]);
            // Most of the mass is captured by the first two dozen degrees.
            CHECK(sum >= 0.7 * C.p0());
        }
}

TEST_CASE("coefficient order bounds on the calibrated grid") {
    for (double p : {0.01, 0.05, 0.1, 0.3})
        for (int d : {30, 100, 300}) {
            const int dim = d - 1;
            const double tau = calibrate_tau_spherical(dim, p).tau;
            const auto C = expansion_coefficients(dim, tau, 2);
            CHECK(C.lambda[1] <= 10 * C.p0() * tau);
            CHECK(std::abs(C.lambda[2]) <= 10 * C.p0() * tau * tau);
        }
}

TEST_CASE("clamped thresholds") {
    CHECK(expansion_coefficient(10, 1.5, 0).lambda == 0.0);
    CHECK(expansion_coefficient(10, -1.5, 0).lambda == 1.0);
    for (int k = 1; k <= 4; ++k) {
        CHECK(expansion_coefficient(10, 1.5, k).lambda == 0.0);
        CHECK(expansion_coefficient(10, -1.5, k).lambda == 0.0);
    }
}

}
