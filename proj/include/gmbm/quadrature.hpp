#pragma once

#include <functional>
#include <span>

namespace gmbm::quadrature {

struct Result {
    double value = 0.0;
    int nodes = 0;  // nodes used by the accepted rule
    bool converged = false;
};

/// Composite Gauss-Legendre on [a, b] with a fixed 32-point panel rule.
/// The panel count doubles until two successive estimates differ by at most
/// max(abs_tol, rel_tol * |estimate|) or the node count would exceed max_nodes.
Result integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 double rel_tol, int max_nodes = 1 << 15);

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::span<double> nodes, std::span<double> weights);

}  // namespace gmbm::quadrature
