#pragma once

#include "oscbands/polynomial.hpp"

#include <functional>
#include <map>
#include <vector>

namespace oscbands::averaging {

using Callable = std::function<double(const std::vector<double>&)>;

/// Flow average of V(x) over the H0 circle, term by term from the monomial formula.
PhasePolynomial average_poly(const Potential& V);
/// Flow average of a general phase-space polynomial (frequency-zero part).
PhasePolynomial average_phase(const PhasePolynomial& f);

/// Trapezoid average of V(x o phi_s) at (x, p). nodes >= 16.
double average_numeric(const Callable& V, const std::vector<double>& x, const std::vector<double>& p, int nodes);

struct NumericAverage {
    double value = 0.0;
    int nodes = 0;
    double doubling_gap = 0.0;
};

/// Doubles the node count until two successive values agree to rel_tol.
NumericAverage average_numeric_converged(const Callable& V, const std::vector<double>& x,
                                         const std::vector<double>& p, int start_nodes = 16,
                                         double rel_tol = 1e-10, int max_nodes = 1 << 16);

constexpr int default_nodes(int degree) { return 2 * degree + 8; }

/// int_0^{2pi} int_0^u {f o phi_s, g o phi_u} ds du
PhasePolynomial double_bracket_integral(const PhasePolynomial& f, const PhasePolynomial& g);

/// V^Delta = -(1/4 pi) int_0^{2pi} int_0^u {V o phi_s, V o phi_u} ds du
PhasePolynomial delta_average(const Potential& V);
PhasePolynomial delta_average_phase(const PhasePolynomial& f);

/// 4^{-k} C(2k, k+r), zero for |r| > k.
double gamma_coeff(int k, int r);
/// Leading Stirling term 1/sqrt(pi k).
double gamma_asymptotic(int k, int r);

/// B_r on an even one-variable polynomial, c[k] is the x^k coefficient.
Poly1 b_r_apply(const Poly1& f, int r);

/// A_r V for r in [-deg/4, deg/4]. The variables of each component stand for |z_1|, |z_2|.
using FourierComponentMap = std::map<int, Potential>;
FourierComponentMap r_n_decompose(const Potential& V);

/// Divides the x1^{2k} x2^{2l} coefficient by gamma_{k,0} gamma_{l,0}.
Potential a0_invert(const Potential& g);
/// A_0, the inverse of a0_invert.
Potential a0_apply(const Potential& g);

} // namespace oscbands::averaging
