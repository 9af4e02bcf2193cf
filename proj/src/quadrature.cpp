#include "oscbands/quadrature.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <stdexcept>

namespace oscbands::quadrature {

Rule gauss_legendre(int n, double a, double b)
{
    if (n < 1) throw std::invalid_argument("quadrature needs at least one node");
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        T(k, k - 1) = beta;
        T(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    Rule r;
    const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        r.nodes.push_back(mid + half * es.eigenvalues()(i));
        r.weights.push_back(2.0 * v0 * v0 * half);
    }
    return r;
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol)
{
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, rel_tol, &err);
    if (!std::isfinite(v)) throw std::domain_error("integrand is not finite on the integration range");
    return v;
}

} // namespace oscbands::quadrature
