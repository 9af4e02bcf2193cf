#pragma once

#include "oscbands/oscillator.hpp"
#include "oscbands/polynomial.hpp"

#include <functional>
#include <string>
#include <vector>

namespace oscbands::invariants {

using RealFn = std::function<double(double)>;

/// Weight f(H0): gaussian f(s) = exp(-mu s), or a smooth bump supported on
/// [center - radius, center + radius].
struct WeightSpec {
    enum class Kind { gaussian, bump };
    Kind kind = Kind::gaussian;
    double mu = 1.0;
    double center = 1.0;
    double radius = 0.5;

    static WeightSpec gaussian(double mu);
    static WeightSpec bump(double center, double radius);
    void validate() const;
    double operator()(double s) const;
    /// Energy beyond which the weight is negligible (gaussian) or zero (bump).
    double support_max() const;
};

/// int_{R^{2n}} exp(-mu |z|^2) P dx dp with |z|^2 = |x|^2 + |p|^2. Complex mu is
/// the analytic continuation from mu > 0.
cplx gaussian_phase_integral(const PhasePolynomial& P, cplx mu);

/// Coefficients c_p of t^p in int exp(-(mu/t) |z|^2) P dx dp.
std::vector<cplx> gaussian_phase_expansion(const PhasePolynomial& P, double mu);

/// Normalized average of a phase polynomial over the sphere H0 = E.
double sphere_average(const PhasePolynomial& P, double E);

/// int_{H0=E} phi(V^ave) d lambda, exact for polynomial phi and polynomial V.
double sphere_invariant(const Potential& V, double E, const Poly1& phi);
/// Quadrature version for a general phi (and possibly an evaluation-only V).
/// quad_nodes is the starting node count; it is doubled until two values agree to 1e-10.
double sphere_invariant(const Potential& V, double E, const RealFn& phi, int quad_nodes = 32);

/// int f(H0) phi(V^ave) dx dp
double band_invariant_first(const Potential& V, const WeightSpec& w, const Poly1& phi);
double band_invariant_first(const Potential& V, const WeightSpec& w, const RealFn& phi);

/// Which sign multiplies V^ave in the hbar^2 term of the symbol of f(S_chi).
enum class SymbolSign { minus_average, plus_average };

struct SecondInvariantParts {
    double delta_term = 0.0;   // (l+1) int f w0^l V^Delta
    double b2_term = 0.0;      // int B2(f(H0), w0^{l+1})
    double power_term = 0.0;   // int f(H0) w0^{[l]}
    double symbol_term = 0.0;  // int w0^{l+1} (f'(H0) s2 - R(f)(H0))
    double total() const { return delta_term + b2_term + power_term + symbol_term; }
};

/// hbar^2 coefficient of (2 pi hbar)^n tr f(S_chi) W^{l+1}; gaussian weights only.
/// With SymbolSign::minus_average, s2 = V - V^ave, the symbol of S - hbar^2 W.
SecondInvariantParts second_invariant(const Potential& V, const WeightSpec& w, int l,
                                      SymbolSign sign = SymbolSign::minus_average);

/// Total of second_invariant for f(s) = exp(-mu s) continued to complex mu.
cplx second_invariant_analytic(const Potential& V, cplx mu, int l, SymbolSign sign = SymbolSign::minus_average);

/// int f(H0) phi(V^Delta) dx dp for odd V.
double odd_invariant(const Potential& V, const WeightSpec& w, const Poly1& phi);

/// int exp(-mu|z|^2) int_0^{2pi} int_0^u {(e^{is}z + e^{-is}zbar)^k, (e^{iu}z + e^{-iu}zbar)^l} ds du dz dzbar, n = 1.
double odd_kernel_integral(int k, int l, double mu);
/// Same kernel with mu complex (analytic continuation).
cplx odd_kernel_integral(int k, int l, cplx mu);

/// (2 pi hbar)^n sum_j f(hbar (j + n/2)) sum_k phi(mu_{j,k}); with rescale the
/// argument is mu_{j,k} / hbar^2.
double trace_moments(const oscillator::ClusterSet& clusters, const WeightSpec& w, const RealFn& phi,
                     bool rescale = false);

struct FitResult {
    std::vector<int> orders;
    std::vector<double> coefficients;
    double residual = 0.0;
    double condition_number = 0.0;
    double coefficient(int order) const;
};

/// Least squares fit of sum_k c_k hbar^k; refuses condition numbers above max_condition.
FitResult expansion_fit(const std::vector<double>& hbars, const std::vector<double>& values,
                        const std::vector<int>& orders = {0, 1, 2}, double max_condition = 1e8);

/// Geometric hbar grid: hbar_max, hbar_max r, ..., count points, ascending.
std::vector<double> geometric_grid(double hbar_max, double ratio, int count);

struct TraceSeries {
    std::vector<double> hbars;
    std::vector<double> values;
};

/// Trace moments over an hbar grid, basis sized so the weight is resolved.
TraceSeries trace_series(const Potential& V, const WeightSpec& w, const RealFn& phi, const std::vector<double>& hbars,
                         bool rescale = false, double trust_fraction = 0.6);

struct SzegoSample {
    int N = 0;
    double hbar = 0.0;
    double cluster_mean = 0.0;
    double invariant = 0.0;
    double gap = 0.0;
};

/// gap(N) = |(1/m_N) sum_k phi(mu_{N,k}) - sphere invariant| at hbar = E/N.
/// With odd_rescale the cluster uses mu/hbar^2 and the target is the sphere average of phi(V^Delta).
std::vector<SzegoSample> szego_compare(const Potential& V, double E, const RealFn& phi, const std::vector<int>& Ns,
                                       bool odd_rescale = false);

/// int f(H0) (V0^ave)^l Vk^ave dx dp
double semiclassical_invariant(const SemiclassicalPotential& Vs, const WeightSpec& w, int l, int k);

/// int f(H0) F for a phase polynomial F, gaussian weight exact, bump by radial quadrature.
double weighted_integral(const PhasePolynomial& F, const WeightSpec& w);

} // namespace oscbands::invariants
