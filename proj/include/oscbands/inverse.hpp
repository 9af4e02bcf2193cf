#pragma once

#include "oscbands/polynomial.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace oscbands::inverse {

/// Recovery failed a residual or conditioning check.
class RecoveryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invariants as black boxes. Gaussian weights are exp(-nu H0), with nu complex
/// wherever the closed forms allow it.
struct InvariantOracle {
    std::string source = "classical";
    int dim = 1;
    /// int exp(-nu H0) (V^ave)^m
    std::function<cplx(cplx nu, int m)> first;
    /// int exp(-nu H0) V^Delta
    std::function<cplx(cplx nu)> odd;
    /// hbar^2 trace coefficient with l = 0
    std::function<cplx(cplx nu)> second_l0;
    /// int exp(-nu H0) (V0^ave)^l Vk^ave
    std::function<cplx(cplx nu, int l, int k)> semiclassical;
    /// normalized int_{H0=E} (V^ave)^m
    std::function<double(double E, int m)> sphere;
    /// Optional exact t-expansions: coefficient p of int exp(-(nu/t) H0) (V^ave)^m,
    /// and of int exp(-(nu/t) H0) (V0^ave)^l Vk^ave. When absent they are read off
    /// the complex-weight values on a circle.
    std::function<std::vector<cplx>(double nu, int m)> first_series;
    std::function<std::vector<cplx>(double nu, int l, int k)> semiclassical_series;
};

InvariantOracle classical_oracle(const Potential& V);
InvariantOracle classical_oracle(const SemiclassicalPotential& Vs);

struct RecoveryReport {
    std::string method;
    /// Scalar outputs (coefficients, eigenvalues, norms).
    std::vector<double> values;
    std::optional<Potential> potential;
    std::optional<SemiclassicalPotential> semiclassical;
    /// Named sample columns, e.g. grid and profile.
    std::map<std::string, std::vector<double>> series;
    std::map<std::string, double> residuals;
    std::map<std::string, bool> flags;
    std::map<std::string, double> condition_numbers;
};

/// Taylor coefficients c_0..c_{count-1} of an analytic P(t) = sum c_k t^k of
/// degree below `points`, from samples on the circle |t| = radius.
std::vector<cplx> taylor_coefficients(const std::function<cplx(cplx)>& P, int count, int points = 64,
                                      double radius = 1.0);

// ------------------------------------------------------------ gauge moves

/// V(O x) for an orthogonal O (row-major, n x n).
Potential rotate(const Potential& V, const std::vector<std::vector<double>>& O);
/// Rotation by angle theta in the (x1, x2) plane.
Potential rotate(const Potential& V, double theta);
/// V(x + b hbar^2, hbar) + b.x + hbar^2 |b|^2 / 2, expanded in hbar.
SemiclassicalPotential translate(const SemiclassicalPotential& Vs, const std::vector<double>& b);
/// V0 + hbar V1 + ... evaluated at one hbar.
Potential collapse(const SemiclassicalPotential& Vs, double hbar);

// ------------------------------------------------------------- one variable

struct ProfileSamples {
    std::vector<double> r;
    std::vector<double> g;
};

/// g(r) = circle average of V^ave at |z| = r on the grid r_i^2 = i R^2 / count.
ProfileSamples classical_even1d_samples(const Potential& V, double R, int count);
/// Cluster shifts mu_j at hbar with r_j^2 = 2 hbar (j + 1/2), for r_j <= R.
ProfileSamples quantum_even1d_samples(const Potential& V, double hbar, double R);

/// Abel inversion of circle averages sampled on a uniform offset grid in r^2.
/// Returns series "s" and "V" on the same grid plus a forward residual.
RecoveryReport recover_even_1d(const ProfileSamples& data, double residual_tol = 1e-2);

/// Odd coefficients a_1, a_3, ..., a_D (values[i] = a_{2i+1}) from the t-expansion
/// of int exp(-(nu/t) H0) V^Delta. Normalized so the first nonzero coefficient is positive.
RecoveryReport recover_odd_1d(const InvariantOracle& oracle, int D, double nu = 1.0, double tol = 1e-9);

// ------------------------------------------------------- several variables

/// Eigenvalues a_i of the quadratic form of V, ascending.
RecoveryReport recover_hessian(const InvariantOracle& oracle, double nu = 1.0);

/// int exp(-mu |z|^2) exp(Q) with Q = sum a_i |z_i|^2, summed as a moment series.
double hessian_laplace_value(const std::vector<double>& a, double mu, int terms = 100);

/// |grad V(0)|^2 for V with no quadratic and no averaged quartic part.
RecoveryReport recover_linear_norm(const InvariantOracle& oracle, double nu = 1.0, double class_tol = 1e-9);

struct SeparableOptions {
    int moments = 12;
    int nodes = 200;
    int fit_degree = 6;
    double genericity_tol = 1e-4;
};

/// Profiles of V = f1(x1^2) + f2(x2^2) from sphere moments at H0 = r^2 / 2,
/// r_i^2 = i R^2 / count. Series "rho", "phi1", "phi2" (circle averages) and
/// "s", "f1", "f2".
RecoveryReport recover_separable(const InvariantOracle& oracle, double R, int count,
                                 const SeparableOptions& opt = {});

/// Even-in-each-variable V of degree D in two variables, quadratic part a x1^2 + b x2^2 with a < b.
RecoveryReport recover_analytic_2d(const InvariantOracle& oracle, int D, double nu = 1.0);

/// V0 from recover_analytic_2d, then V1..VK (even-in-each parts) of degree <= D.
RecoveryReport recover_semiclassical_2d(const InvariantOracle& oracle, int D, int K);

/// Smallest singular value of the column-normalized linearized map
/// V1 -> int exp(-mu1 |z1|^2/2 - mu2 |z2|^2/2) A_0 V1 on the even monomials of degree <= D.
struct RigidityResult {
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    int columns = 0;
    int rows = 0;
};
RigidityResult rigidity_svd(double a, double b, int D);

} // namespace oscbands::inverse
