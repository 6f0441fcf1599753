#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace gmbm {

/// Orthonormal Gegenbauer polynomials q_k for the law of sqrt(dim) <v, w>
/// on S^{dim-1}, evaluated by the three-term recurrence
///   x q_k(x) = a_k q_{k+1}(x) + a_{k-1} q_{k-1}(x),
///   a_k = sqrt((k+1)(dim+k-2) dim / ((dim+2k)(dim+2k-2))).
class GegenbauerBasis {
public:
    GegenbauerBasis(int dim, int max_degree);

    int dim() const { return dim_; }
    int max_degree() const { return max_degree_; }
    double recurrence_coefficient(int k) const { return a_.at(static_cast<std::size_t>(k)); }

    /// q_k(x); throws InvalidParameter when k > max_degree.
    double eval(int k, double x) const;
    /// q_0(x) .. q_K(x) written to out (size >= K + 1).
    void eval_all(double x, std::span<double> out) const;

private:
    int dim_;
    int max_degree_;
    std::vector<double> a_;  // a_0 .. a_{max_degree - 1}
};

/// N_k, the dimension of degree-k spherical harmonics on S^{dim-1}, exactly,
/// plus its natural log. N_0 = 1.
struct HarmonicDimension {
    boost::multiprecision::cpp_int exact;
    double log_value = 0.0;

    double value() const;
};

HarmonicDimension harmonic_dimension(int dim, int k);
/// log N_k without forming the integer.
double log_harmonic_dimension(int dim, int k);

enum class CoefficientMethod { closed_form, quadrature };

std::string_view to_string(CoefficientMethod method);

struct ExpansionCoefficient {
    double lambda = 0.0;  // c_k / sqrt(N_k)
    double c = 0.0;       // E[q_k(xi) 1(xi >= sqrt(dim) tau)]
    CoefficientMethod method = CoefficientMethod::closed_form;
};

/// Coefficients of 1(xi >= sqrt(dim) tau_eff) in the basis q_k^{(dim)}:
///   k = 0: the sphere tail (lambda_0 = p_0),
///   k = 1: Gamma(dim/2) / ((dim-1) sqrt(pi) Gamma((dim-1)/2)) (1 - tau^2)^{(dim-1)/2},
///   k = 2: tau times the k = 1 value,
///   k >= 3: quadrature of q_k against the sphere density, rel. tol. 1e-8.
/// |tau_eff| > 1 gives the clamped values (0, or lambda_0 = 1 for tau <= -1).
ExpansionCoefficient expansion_coefficient(int dim, double tau_eff, int k);

/// lambda_1 in closed form.
double lambda1_closed_form(int dim, double tau_eff);

struct ExpansionCoefficients {
    int dim = 0;
    double tau_eff = 0.0;
    std::vector<double> lambda;
    std::vector<double> c;
    std::vector<CoefficientMethod> method;

    double p0() const { return lambda.at(0); }
    double lambda1() const { return lambda.at(1); }
};

/// lambda_0 .. lambda_K at one threshold.
ExpansionCoefficients expansion_coefficients(int dim, double tau_eff, int max_degree);

}  // namespace gmbm
