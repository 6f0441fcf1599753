#include "gmbm/gegenbauer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gmbm/calibrate.hpp"
#include "gmbm/error.hpp"
#include "gmbm/quadrature.hpp"

namespace gmbm {

namespace {

void require_dim(int dim) {
    if (dim < 3) throw InvalidParameter("Gegenbauer basis needs dim >= 3, got " + std::to_string(dim));
}

// (1 - tau^2)^{power} without cancellation for large powers.
double one_minus_sq_pow(double tau, double power) { return std::exp(power * std::log1p(-tau * tau)); }

}  // namespace

GegenbauerBasis::GegenbauerBasis(int dim, int max_degree) : dim_(dim), max_degree_(max_degree) {
    require_dim(dim);
    if (max_degree < 0) throw InvalidParameter("max_degree must be non-negative");
    a_.resize(static_cast<std::size_t>(max_degree));
    const double dd = dim;
    for (int k = 0; k < max_degree; ++k) {
        const double kk = k;
        a_[static_cast<std::size_t>(k)] =
            std::sqrt((kk + 1.0) * (dd + kk - 2.0) * dd / ((dd + 2.0 * kk) * (dd + 2.0 * kk - 2.0)));
    }
}

double GegenbauerBasis::eval(int k, double x) const {
    if (k < 0 || k > max_degree_)
        throw InvalidParameter("degree " + std::to_string(k) + " outside basis range 0.." + std::to_string(max_degree_));
    if (k == 0) return 1.0;
    double previous = 1.0;
    double current = x;
    for (int j = 1; j < k; ++j) {
        const double next = (x * current - a_[static_cast<std::size_t>(j - 1)] * previous) / a_[static_cast<std::size_t>(j)];
        previous = current;
        current = next;
    }
    return current;
}

void GegenbauerBasis::eval_all(double x, std::span<double> out) const {
    out[0] = 1.0;
    if (max_degree_ >= 1) out[1] = x;
    for (int j = 1; j < max_degree_; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        out[jj + 1] = (x * out[jj] - a_[jj - 1] * out[jj - 1]) / a_[jj];
    }
}

double HarmonicDimension::value() const { return std::exp(log_value); }

double log_harmonic_dimension(int dim, int k) {
    require_dim(dim);
    if (k < 0) throw InvalidParameter("harmonic degree must be non-negative");
    if (k == 0) return 0.0;
    // N_k = (2k + dim - 2) / k * C(k + dim - 3, k - 1)
    const double n_choose = std::lgamma(k + dim - 2.0) - std::lgamma(static_cast<double>(k)) - std::lgamma(dim - 1.0);
    return std::log(2.0 * k + dim - 2.0) - std::log(static_cast<double>(k)) + n_choose;
}

HarmonicDimension harmonic_dimension(int dim, int k) {
    require_dim(dim);
    if (k < 0) throw InvalidParameter("harmonic degree must be non-negative");
    HarmonicDimension out;
    if (k == 0) {
        out.exact = 1;
        return out;
    }
    using boost::multiprecision::cpp_int;
    // C(k + dim - 3, k - 1), built multiplicatively; every partial product is integral.
    cpp_int binom = 1;
    const int top = k + dim - 3;
    for (int j = 1; j <= k - 1; ++j) {
        binom *= (top - (k - 1) + j);
        binom /= j;
    }
    out.exact = binom * (2 * k + dim - 2) / k;
    out.log_value = log_harmonic_dimension(dim, k);
    return out;
}

std::string_view to_string(CoefficientMethod method) {
    return method == CoefficientMethod::closed_form ? "closed-form" : "quadrature";
}

double lambda1_closed_form(int dim, double tau_eff) {
    require_dim(dim);
    if (tau_eff >= 1.0 || tau_eff <= -1.0) return 0.0;
    const double front = std::exp(log_gamma_ratio(0.5 * dim, 0.5 * (dim - 1))) / ((dim - 1.0) * std::sqrt(std::numbers::pi));
    return front * one_minus_sq_pow(tau_eff, 0.5 * (dim - 1.0));
}

ExpansionCoefficient expansion_coefficient(int dim, double tau_eff, int k) {
    require_dim(dim);
    if (k < 0) throw InvalidParameter("coefficient degree must be non-negative");
    if (std::isnan(tau_eff)) throw InvalidParameter("threshold is NaN");
    if (k == 0) {
        const double p0 = sphere_tail(dim, tau_eff);
        return {p0, p0, CoefficientMethod::closed_form};
    }
    if (std::abs(tau_eff) >= 1.0) return {0.0, 0.0, CoefficientMethod::closed_form};

    const double sqrt_n = std::exp(0.5 * log_harmonic_dimension(dim, k));
    if (k == 1) {
        const double lambda = lambda1_closed_form(dim, tau_eff);
        return {lambda, lambda * sqrt_n, CoefficientMethod::closed_form};
    }
    if (k == 2) {
        const double lambda = tau_eff * lambda1_closed_form(dim, tau_eff);
        return {lambda, lambda * sqrt_n, CoefficientMethod::closed_form};
    }

    // c_k = kappa * int_{asin tau}^{pi/2} q_k(sqrt(dim) sin t) cos^{dim-2}(t) dt
    const GegenbauerBasis basis(dim, k);
    const double root_dim = std::sqrt(static_cast<double>(dim));
    const double power = dim - 2.0;
    const double kappa = sphere_angle_normalizer(dim);
    const auto integrand = [&](double theta) {
        return basis.eval(k, root_dim * std::sin(theta)) * std::exp(power * std::log(std::cos(theta)));
    };
    const double lower = std::asin(tau_eff);
    const double scale = std::max(sphere_tail(dim, tau_eff), 1e-300);
    const auto result =
        quadrature::integrate(integrand, lower, std::numbers::pi / 2.0, 1e-15 * scale / kappa, 1e-8);
    const double c = kappa * result.value;
    return {c / sqrt_n, c, CoefficientMethod::quadrature};
}

ExpansionCoefficients expansion_coefficients(int dim, double tau_eff, int max_degree) {
    ExpansionCoefficients out;
    out.dim = dim;
    out.tau_eff = tau_eff;
    for (int k = 0; k <= max_degree; ++k) {
        const auto coeff = expansion_coefficient(dim, tau_eff, k);
        out.lambda.push_back(coeff.lambda);
        out.c.push_back(coeff.c);
        out.method.push_back(coeff.method);
    }
    return out;
}

}  // namespace gmbm
