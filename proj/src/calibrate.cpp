#include "gmbm/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gmbm/error.hpp"
#include "gmbm/kernels.hpp"
#include "gmbm/model.hpp"
#include "gmbm/quadrature.hpp"

namespace gmbm {

namespace {

// Stirling remainder; truncation error below 2e-15 for x >= 20.
double stirling_tail(double x) {
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    return inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
}

// Integrand contributions below this level are dropped from the angular range.
constexpr double kNegligibleDensity = 1e-22;

}  // namespace

double log_gamma_ratio(double a, double b) {
    if (std::min(a, b) < 20.0) return std::lgamma(a) - std::lgamma(b);
    // Expand around b so the O(b log b) parts cancel analytically.
    const double delta = a - b;
    return delta * std::log(b) + (a - 0.5) * std::log1p(delta / b) - delta + stirling_tail(a) - stirling_tail(b);
}

double sphere_angle_normalizer(int dim) {
    return std::exp(log_gamma_ratio(0.5 * dim, 0.5 * (dim - 1))) / std::sqrt(std::numbers::pi);
}

double sphere_tail(const TailQuery& q) {
    if (q.dim < 3) throw InvalidParameter("sphere_tail requires dim >= 3, got " + std::to_string(q.dim));
    if (std::isnan(q.t)) throw InvalidParameter("sphere_tail threshold is NaN");
    if (q.t >= 1.0) return 0.0;
    if (q.t <= -1.0) return 1.0;
    if (q.t == 0.0) return 0.5;
    if (q.t < 0.0) return 1.0 - sphere_tail(TailQuery{q.dim, -q.t});

    // xi = sqrt(dim) sin(theta) turns the density into kappa cos^{dim-2}(theta).
    const double power = q.dim - 2.0;
    const double lower = std::asin(q.t);
    const double cutoff = std::acos(std::exp(std::log(kNegligibleDensity) / power));
    const double upper = std::min(std::numbers::pi / 2.0, cutoff);
    if (lower >= upper) return 0.0;
    const double kappa = sphere_angle_normalizer(q.dim);
    const auto integrand = [&](double theta) { return std::exp(power * std::log(std::cos(theta))); };
    const auto result = quadrature::integrate(integrand, lower, upper, 1e-13, 1e-13);
    return std::clamp(kappa * result.value, 0.0, 0.5);
}

double sphere_tail_inverse(int dim, double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("sphere_tail_inverse requires p in (0, 1)");
    double lo = -1.0, hi = 1.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (sphere_tail(dim, mid) > p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

InnerProductSample::InnerProductSample(int d, double mu, std::size_t samples, const RngStream& stream)
    : values_(samples) {
    if (d < 2) throw InvalidParameter("d must be at least 2");
    kernels::mixture_inner_products(d, mu, stream, values_);
    std::sort(values_.begin(), values_.end());
}

EdgeProbabilityEstimate InnerProductSample::tail(double tau) const {
    const auto first = std::lower_bound(values_.begin(), values_.end(), tau);
    const auto count = static_cast<double>(values_.end() - first);
    const auto total = static_cast<double>(values_.size());
    const double p = count / total;
    return {p, std::sqrt(p * (1.0 - p) / total), values_.size()};
}

EdgeProbabilityEstimate mixture_edge_probability(int d, double mu, double tau, std::size_t samples,
                                                 const RngStream& stream) {
    if (samples < 10'000) throw InvalidParameter("mixture_edge_probability needs at least 10^4 samples");
    if (d < 2) throw InvalidParameter("d must be at least 2");
    std::vector<double> values(samples);
    kernels::mixture_inner_products(d, mu, stream, values);
    const auto count = std::count_if(values.begin(), values.end(), [tau](double v) { return v >= tau; });
    const double p = static_cast<double>(count) / static_cast<double>(samples);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples)), samples};
}

std::string_view to_string(CalibrationMethod method) {
    return method == CalibrationMethod::monte_carlo ? "monte-carlo" : "quadrature";
}

double default_calibration_tolerance(double p, std::size_t samples) {
    return std::max(1e-4, 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(samples)));
}

CalibrationResult calibrate_tau(int d, double mu, double p, double tolerance, const RngStream& stream,
                                std::size_t samples) {
    if (!(p > 0.0 && p < 0.5)) throw InvalidParameter("calibration target p must lie in (0, 1/2)");
    if (!(tolerance > 0.0)) throw InvalidParameter("calibration tolerance must be positive");
    if (samples < 10'000) throw InvalidParameter("calibration needs at least 10^4 samples");

    const InnerProductSample sample(d, mu, samples, stream);
    const double se_target = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    // Never looser than the requested tolerance or 3 SE; never tighter than one draw.
    const double tol = std::max(std::min(tolerance, 3.0 * se_target), 1.0 / static_cast<double>(samples));

    int evaluations = 0;
    auto tail = [&](double t) {
        ++evaluations;
        return sample.tail(t).p;
    };

    const double center = mu * mu;
    const double limit = mu * mu + 4.0;
    double lo = center - 0.5;
    double hi = center + 0.5;
    while (tail(lo) < p) {
        if (lo <= -limit) throw CalibrationFailure("could not bracket tau from below within -(mu^2 + 4)");
        lo = std::max(-limit, center - 2.0 * (center - lo));
    }
    while (tail(hi) > p) {
        if (hi >= limit) throw CalibrationFailure("could not bracket tau from above within mu^2 + 4");
        hi = std::min(limit, center + 2.0 * (hi - center));
    }

    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const auto estimate = sample.tail(mid);
        ++evaluations;
        if (std::abs(estimate.p - p) <= tol)
            return {mid, estimate.p, estimate.se, samples, CalibrationMethod::monte_carlo, evaluations};
        if (estimate.p > p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(mid))) break;
    }
    throw CalibrationFailure("bisection did not reach tolerance " + std::to_string(tol));
}

CalibrationResult calibrate_tau_spherical(int dim, double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("target p must lie in (0, 1)");
    const double tau = sphere_tail_inverse(dim, p);
    return {tau, sphere_tail(dim, tau), 0.0, 0, CalibrationMethod::quadrature, 0};
}

ModelParams resolve_threshold(ModelParams params, const RngStream& stream, std::size_t samples) {
    params.validate();
    const RngStream calibration = stream.child("calibrate");
    if (params.source == ThresholdSource::edge_probability) {
        const auto result =
            calibrate_tau(params.d, params.mu, *params.p, default_calibration_tolerance(*params.p, samples), calibration, samples);
        params.tau = result.tau;
    } else {
        params.p = mixture_edge_probability(params.d, params.mu, *params.tau, samples, calibration).p;
    }
    return params;
}

}  // namespace gmbm
