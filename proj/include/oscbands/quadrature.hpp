#pragma once

#include <functional>
#include <vector>

namespace oscbands::quadrature {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule on [a, b] (Golub-Welsch).
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Adaptive Gauss-Kronrod on [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-12);

} // namespace oscbands::quadrature
