#include "gmbm/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace gmbm::quadrature {

namespace {

constexpr int kPanelOrder = 32;

struct PanelRule {
    std::array<double, kPanelOrder> nodes{};
    std::array<double, kPanelOrder> weights{};
    PanelRule() { gauss_legendre(kPanelOrder, nodes, weights); }
};

const PanelRule& panel_rule() {
    static const PanelRule rule;
    return rule;
}

double composite(const std::function<double(double)>& f, double a, double b, int panels) {
    const auto& rule = panel_rule();
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double half = 0.5 * width;
        const double mid = lo + half;
        double sum = 0.0;
        for (int k = 0; k < kPanelOrder; ++k) sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
        total += half * sum;
    }
    return total;
}

}  // namespace

void gauss_legendre(int n, std::span<double> nodes, std::span<double> weights) {
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double derivative = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            derivative = n * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / derivative;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * derivative * derivative);
    }
}

Result integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 double rel_tol, int max_nodes) {
    Result out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    int panels = 1;
    double previous = composite(f, a, b, panels);
    while ((2 * panels) * kPanelOrder <= max_nodes) {
        panels *= 2;
        const double current = composite(f, a, b, panels);
        const double change = std::abs(current - previous);
        previous = current;
        if (change <= std::max(abs_tol, rel_tol * std::abs(current))) {
            out.converged = true;
            break;
        }
    }
    out.value = previous;
    out.nodes = panels * kPanelOrder;
    return out;
}

}  // namespace gmbm::quadrature
