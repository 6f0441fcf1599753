#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gmbm/rng.hpp"

namespace gmbm {

struct ModelParams;

/// Tail of the sphere law: Pr[xi >= sqrt(dim) t] for xi = sqrt(dim) <v, w>,
/// v, w independent and uniform on S^{dim-1}.
struct TailQuery {
    int dim = 3;
    double t = 0.0;
};

/// log(Gamma(a) / Gamma(b)).
double log_gamma_ratio(double a, double b);

/// Normalizer of the inner-product law in angle form: the density of
/// theta = asin(<v, w>) is kappa(dim) cos^{dim-2}(theta) on [-pi/2, pi/2],
/// with kappa(dim) = Gamma(dim/2) / (sqrt(pi) Gamma((dim-1)/2)).
double sphere_angle_normalizer(int dim);

/// Exact-to-1e-10 evaluation of the sphere-law tail; clamps outside [-1, 1].
/// Throws InvalidParameter for dim < 3.
double sphere_tail(const TailQuery& q);
inline double sphere_tail(int dim, double t) { return sphere_tail(TailQuery{dim, t}); }

/// Inverse of sphere_tail in t, by bisection. Requires p in (0, 1).
double sphere_tail_inverse(int dim, double p);

struct EdgeProbabilityEstimate {
    double p = 0.0;
    double se = 0.0;
    std::size_t samples = 0;
};

/// A fixed batch of mixture inner products <u, u'>, sorted, so that the
/// empirical tail at every threshold uses the same draws and is monotone.
class InnerProductSample {
public:
    InnerProductSample(int d, double mu, std::size_t samples, const RngStream& stream);

    /// Fraction of draws with value >= tau.
    EdgeProbabilityEstimate tail(double tau) const;
    std::size_t size() const { return values_.size(); }
    std::span<const double> sorted_values() const { return values_; }

private:
    std::vector<double> values_;
};

/// Monte-Carlo estimate of Pr[<u_i, u_j> >= tau] for independent mixture draws.
/// Throws InvalidParameter for samples < 10^4 or d < 2.
EdgeProbabilityEstimate mixture_edge_probability(int d, double mu, double tau, std::size_t samples,
                                                 const RngStream& stream);

enum class CalibrationMethod { monte_carlo, quadrature };

std::string_view to_string(CalibrationMethod method);

struct CalibrationResult {
    double tau = 0.0;
    double achieved_p = 0.0;
    double se = 0.0;
    std::size_t samples = 0;
    CalibrationMethod method = CalibrationMethod::monte_carlo;
    int evaluations = 0;
};

inline constexpr std::size_t kDefaultCalibrationSamples = 2'000'000;

/// Default stopping tolerance max(1e-4, 3 SE) for a target p.
double default_calibration_tolerance(double p, std::size_t samples = kDefaultCalibrationSamples);

/// Threshold tau with Pr[<u_i, u_j> >= tau] = p under the mixture, by
/// bisection on common random numbers. The bracket starts at [-1/2, 1/2]
/// around mu^2 and widens up to [-(mu^2 + 4), mu^2 + 4]; failure to bracket
/// throws CalibrationFailure.
CalibrationResult calibrate_tau(int d, double mu, double p, double tolerance, const RngStream& stream,
                                std::size_t samples = kDefaultCalibrationSamples);

/// Spherical surrogate: tau with sphere_tail(dim, tau) = p (mu = 0, unit-norm latents).
CalibrationResult calibrate_tau_spherical(int dim, double p);

/// Returns params with both p and tau filled. When p is authoritative, tau is
/// calibrated by Monte Carlo on stream.child("calibrate"); when tau is, p is
/// estimated on the same stream.
ModelParams resolve_threshold(ModelParams params, const RngStream& stream,
                              std::size_t samples = kDefaultCalibrationSamples);

}  // namespace gmbm
