#include "oscbands/invariants.hpp"

#include "oscbands/averaging.hpp"
#include "oscbands/quadrature.hpp"
#include "oscbands/symbolcalc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <memory>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oscbands::invariants {

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int k)
{
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

PhasePolynomial compose(const Poly1& phi, const PhasePolynomial& F)
{
    PhasePolynomial out(F.dim());
    PhasePolynomial pw = PhasePolynomial::constant(F.dim(), 1.0);
    for (std::size_t k = 0; k < phi.c.size(); ++k) {
        if (k > 0) pw = pw * F;
        if (phi.c[k] != 0.0) out += pw * cplx(phi.c[k]);
    }
    return out;
}

// Surface factor: int f(H0) G dx dp = int f(s) area(s) <G>_{H0=s} ds
double shell_area(int n, double s) { return std::pow(2.0 * kPi, n) * std::pow(s, n - 1) / factorial(n - 1); }

// Normalized sphere average of g(x, p) on H0 = E. With invariant = true the
// average over the diagonal circle action is skipped.
double sphere_function_average(const std::function<double(const std::vector<double>&, const std::vector<double>&)>& g,
                               int n, double E, int nodes, bool invariant)
{
    const double R = std::sqrt(2.0 * E);
    if (n == 1) {
        double acc = 0.0;
        for (int k = 0; k < nodes; ++k) {
            const double th = 2.0 * kPi * k / nodes;
            acc += g({R * std::cos(th)}, {R * std::sin(th)});
        }
        return acc / nodes;
    }
    if (n != 2) throw DimensionError("sphere quadrature supports n = 1 or 2");
    auto rule = quadrature::gauss_legendre(nodes, 0.0, 1.0);
    const int m1 = invariant ? 1 : nodes;
    double acc = 0.0;
    for (std::size_t iu = 0; iu < rule.nodes.size(); ++iu) {
        const double u = rule.nodes[iu];
        const double r1 = R * std::sqrt(u), r2 = R * std::sqrt(1.0 - u);
        double inner = 0.0;
        for (int a = 0; a < m1; ++a) {
            const double t1 = 2.0 * kPi * a / m1;
            for (int b = 0; b < nodes; ++b) {
                const double t2 = t1 + 2.0 * kPi * b / nodes;
                inner += g({r1 * std::cos(t1), r2 * std::cos(t2)}, {r1 * std::sin(t1), r2 * std::sin(t2)});
            }
        }
        acc += rule.weights[iu] * inner / (double(m1) * nodes);
    }
    return acc;
}

template <class Eval>
double converged_sphere(Eval&& eval, int start)
{
    int nodes = std::max(8, start);
    double prev = eval(nodes);
    for (int it = 0; it < 6; ++it) {
        nodes *= 2;
        double cur = eval(nodes);
        if (std::abs(cur - prev) <= 1e-10 * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    throw std::runtime_error("sphere quadrature did not converge (doubling test)");
}

// V^ave at a phase point, exact for polynomial V and by circle quadrature otherwise.
std::function<double(const std::vector<double>&, const std::vector<double>&)> average_evaluator(const Potential& V)
{
    if (V.is_polynomial()) {
        auto ave = std::make_shared<PhasePolynomial>(averaging::average_poly(V));
        return [ave](const std::vector<double>& x, const std::vector<double>& p) { return ave->evaluate(x, p).real(); };
    }
    return [V](const std::vector<double>& x, const std::vector<double>& p) {
        auto f = [&V](const std::vector<double>& y) { return V.evaluate(y); };
        return averaging::average_numeric_converged(f, x, p, 64).value;
    };
}

void require_gaussian(const WeightSpec& w, const char* what)
{
    if (w.kind != WeightSpec::Kind::gaussian)
        throw std::invalid_argument(std::string(what) + " has a closed form for gaussian weights only");
}

} // namespace

// ------------------------------------------------------------------ weights

WeightSpec WeightSpec::gaussian(double mu)
{
    WeightSpec w;
    w.kind = Kind::gaussian;
    w.mu = mu;
    w.validate();
    return w;
}

WeightSpec WeightSpec::bump(double center, double radius)
{
    WeightSpec w;
    w.kind = Kind::bump;
    w.center = center;
    w.radius = radius;
    w.validate();
    return w;
}

void WeightSpec::validate() const
{
    if (kind == Kind::gaussian && !(mu > 0.0)) throw std::invalid_argument("gaussian weight needs mu > 0");
    if (kind == Kind::bump && !(radius > 0.0)) throw std::invalid_argument("bump weight needs a positive radius");
}

double WeightSpec::operator()(double s) const
{
    if (kind == Kind::gaussian) return std::exp(-mu * s);
    const double t = (s - center) / radius;
    if (std::abs(t) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - t * t));
}

double WeightSpec::support_max() const
{
    if (kind == Kind::gaussian) return 30.0 / mu;
    return center + radius;
}

// ----------------------------------------------------------------- integrals

namespace {

// log prod Gamma((a_s + 1)/2) and the total degree; false for odd exponents
bool gaussian_log_factor(MonoKey k, int n, double& lg, int& deg)
{
    lg = 0.0;
    deg = 0;
    for (int s = 0; s < 2 * n; ++s) {
        const int a = key_get(k, s);
        if (a % 2) return false;
        lg += std::lgamma(0.5 * (a + 1));
        deg += a;
    }
    return true;
}

} // namespace

cplx gaussian_phase_integral(const PhasePolynomial& P, cplx mu)
{
    const int n = P.dim();
    const cplx lmu = std::log(mu);
    cplx total = 0.0;
    for (const auto& [k, c] : P.raw()) {
        double lg = 0.0;
        int deg = 0;
        if (!gaussian_log_factor(k, n, lg, deg)) continue;
        total += c * std::exp(lg - double((deg + 2 * n) / 2) * lmu);
    }
    return total;
}

std::vector<cplx> gaussian_phase_expansion(const PhasePolynomial& P, double mu)
{
    if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
    const int n = P.dim();
    std::vector<cplx> out(n + P.degree() / 2 + 1, 0.0);
    for (const auto& [k, c] : P.raw()) {
        double lg = 0.0;
        int deg = 0;
        if (!gaussian_log_factor(k, n, lg, deg)) continue;
        const int p = (deg + 2 * n) / 2;
        out[p] += c * std::exp(lg - p * std::log(mu));
    }
    return out;
}

double sphere_average(const PhasePolynomial& P, double E)
{
    if (!(E > 0.0)) throw std::invalid_argument("sphere energy must be positive");
    const int n = P.dim();
    const int d = 2 * n;
    const double R = std::sqrt(2.0 * E);
    cplx total = 0.0;
    for (const auto& [k, c] : P.raw()) {
        double lg = 0.0;
        int deg = 0;
        bool odd = false;
        for (int s = 0; s < d; ++s) {
            const int a = key_get(k, s);
            if (a % 2) {
                odd = true;
                break;
            }
            lg += std::lgamma(0.5 * (a + 1));
            deg += a;
        }
        if (odd) continue;
        lg += std::lgamma(0.5 * d) - 0.5 * d * std::log(kPi) - std::lgamma(0.5 * (deg + d));
        total += c * std::exp(lg) * std::pow(R, deg);
    }
    return total.real();
}

double sphere_invariant(const Potential& V, double E, const Poly1& phi)
{
    if (!V.is_polynomial()) return sphere_invariant(V, E, RealFn([phi](double s) { return phi(s); }));
    return sphere_average(compose(phi, averaging::average_poly(V)), E);
}

double sphere_invariant(const Potential& V, double E, const RealFn& phi, int quad_nodes)
{
    if (!(E > 0.0)) throw std::invalid_argument("sphere energy must be positive");
    auto ave = average_evaluator(V);
    auto g = [&](const std::vector<double>& x, const std::vector<double>& p) { return phi(ave(x, p)); };
    return converged_sphere([&](int nodes) { return sphere_function_average(g, V.dim(), E, nodes, true); },
                            quad_nodes);
}

double weighted_integral(const PhasePolynomial& F, const WeightSpec& w)
{
    w.validate();
    if (w.kind == WeightSpec::Kind::gaussian) return gaussian_phase_integral(F, w.mu / 2.0).real();
    const int n = F.dim();
    const double lo = std::max(0.0, w.center - w.radius), hi = w.center + w.radius;
    if (hi <= 0.0) return 0.0;
    return quadrature::integrate(
        [&](double s) { return s <= 0.0 ? 0.0 : w(s) * shell_area(n, s) * sphere_average(F, s); }, lo, hi);
}

double band_invariant_first(const Potential& V, const WeightSpec& w, const Poly1& phi)
{
    if (!V.is_polynomial()) return band_invariant_first(V, w, RealFn([phi](double s) { return phi(s); }));
    return weighted_integral(compose(phi, averaging::average_poly(V)), w);
}

double band_invariant_first(const Potential& V, const WeightSpec& w, const RealFn& phi)
{
    w.validate();
    const int n = V.dim();
    const double lo = w.kind == WeightSpec::Kind::bump ? std::max(0.0, w.center - w.radius) : 0.0;
    const double hi = w.support_max();
    auto integrand = [&](double s) {
        if (s <= 0.0) return 0.0;
        const double f = w(s);
        if (f == 0.0) return 0.0;
        const double v = f * shell_area(n, s) * sphere_invariant(V, s, phi);
        if (!std::isfinite(v)) throw std::domain_error("divergent integrand in first band invariant");
        return v;
    };
    return quadrature::integrate(integrand, lo, hi, 1e-10);
}

namespace {

struct ComplexParts {
    cplx delta, b2, power, symbol;
};

ComplexParts second_invariant_parts(const Potential& V, cplx mu, int l, SymbolSign sign)
{
    if (l < 0) throw std::invalid_argument("l must be nonnegative");
    if (!V.is_polynomial()) throw std::invalid_argument("second_invariant needs a polynomial potential");
    const int n = V.dim();
    const cplx half_mu = mu / 2.0;
    const PhasePolynomial w0 = averaging::average_poly(V);
    const PhasePolynomial vd = averaging::delta_average(V);
    const PhasePolynomial v = V.to_phase();
    const PhasePolynomial H = PhasePolynomial::H0(n);

    ComplexParts parts;
    parts.delta = double(l + 1) * gaussian_phase_integral(w0.pow(l) * vd, half_mu);

    symbolcalc::ExpPolySymbol f(PhasePolynomial::constant(n, 1.0), -mu);
    auto b2 = symbolcalc::moyal_term(f, w0.pow(l + 1), 2);
    parts.b2 = gaussian_phase_integral(b2.prefactor, half_mu);

    PhasePolynomial wl(n);
    for (int j = 0; j <= l - 1; ++j) wl += w0.pow(j) * symbolcalc::moyal_term(w0, w0.pow(l - j), 2);
    parts.power = gaussian_phase_integral(wl, half_mu);

    // f' s2 - R(f), R(f)(s) = n/8 f'' + s/12 f''' with f = e^{-mu s}
    const PhasePolynomial s2 = sign == SymbolSign::minus_average ? v - w0 : v + w0;
    PhasePolynomial bracket =
        s2 * (-mu) - PhasePolynomial::constant(n, double(n) * mu * mu / 8.0) + H * (mu * mu * mu / 12.0);
    parts.symbol = gaussian_phase_integral(w0.pow(l + 1) * bracket, half_mu);
    return parts;
}

} // namespace

SecondInvariantParts second_invariant(const Potential& V, const WeightSpec& w, int l, SymbolSign sign)
{
    require_gaussian(w, "second_invariant");
    auto c = second_invariant_parts(V, cplx(w.mu), l, sign);
    SecondInvariantParts parts;
    parts.delta_term = c.delta.real();
    parts.b2_term = c.b2.real();
    parts.power_term = c.power.real();
    parts.symbol_term = c.symbol.real();
    return parts;
}

cplx second_invariant_analytic(const Potential& V, cplx mu, int l, SymbolSign sign)
{
    auto c = second_invariant_parts(V, mu, l, sign);
    return c.delta + c.b2 + c.power + c.symbol;
}

double odd_invariant(const Potential& V, const WeightSpec& w, const Poly1& phi)
{
    if (!V.is_polynomial()) throw std::invalid_argument("odd_invariant needs a polynomial potential");
    if (!V.is_odd()) throw std::invalid_argument("odd_invariant needs an odd potential");
    return weighted_integral(compose(phi, averaging::delta_average(V)), w);
}

cplx odd_kernel_integral(int k, int l, cplx mu)
{
    if (k < 1 || l < 1 || k % 2 == 0 || l % 2 == 0)
        throw std::invalid_argument("odd_kernel_integral needs odd positive k and l");
    PhasePolynomial x = PhasePolynomial::x(1, 0);
    PhasePolynomial L = averaging::double_bracket_integral(x.pow(k), x.pow(l));
    return -std::pow(2.0, k + l - 2) * gaussian_phase_integral(L, mu);
}

double odd_kernel_integral(int k, int l, double mu)
{
    if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
    return odd_kernel_integral(k, l, cplx(mu)).real();
}

double trace_moments(const oscillator::ClusterSet& clusters, const WeightSpec& w, const RealFn& phi, bool rescale)
{
    w.validate();
    const double h = clusters.hbar;
    const int n = clusters.dim;
    int jmax = -1;
    for (const auto& c : clusters.clusters) jmax = std::max(jmax, c.j);
    if (h * (jmax + 0.5 * n) < w.support_max())
        throw std::invalid_argument("weight support exceeds the trusted window (top level energy " +
                                    std::to_string(h * (jmax + 0.5 * n)) + " < " + std::to_string(w.support_max()) +
                                    ")");
    double acc = 0.0;
    for (const auto& c : clusters.clusters) {
        const double f = w(h * (c.j + 0.5 * n));
        if (f == 0.0) continue;
        double s = 0.0;
        for (double m : c.shifts) s += phi(rescale ? m / (h * h) : m);
        acc += f * s;
    }
    return std::pow(2.0 * kPi * h, n) * acc;
}

double FitResult::coefficient(int order) const
{
    for (std::size_t i = 0; i < orders.size(); ++i)
        if (orders[i] == order) return coefficients[i];
    throw std::out_of_range("order " + std::to_string(order) + " was not fitted");
}

FitResult expansion_fit(const std::vector<double>& hbars, const std::vector<double>& values,
                        const std::vector<int>& orders, double max_condition)
{
    if (hbars.size() != values.size()) throw std::invalid_argument("hbar and value lists differ in length");
    if (hbars.size() < 5) throw std::invalid_argument("expansion_fit needs at least 5 hbar values");
    if (orders.empty() || orders.size() > hbars.size()) throw std::invalid_argument("bad order list");
    const int m = static_cast<int>(hbars.size()), k = static_cast<int>(orders.size());
    Eigen::MatrixXd A(m, k);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
        y(i) = values[i];
        for (int j = 0; j < k; ++j) A(i, j) = std::pow(hbars[i], orders[j]);
    }
    Eigen::VectorXd scale = A.colwise().norm().transpose();
    Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    FitResult r;
    r.orders = orders;
    r.condition_number = sv(0) / sv(sv.size() - 1);
    if (!(r.condition_number <= max_condition))
        throw std::runtime_error("expansion fit is ill-conditioned (condition number " +
                                 std::to_string(r.condition_number) + ")");
    Eigen::VectorXd cs = svd.solve(y);
    Eigen::VectorXd c = cs.cwiseQuotient(scale);
    r.coefficients.assign(c.data(), c.data() + k);
    r.residual = (A * c - y).norm() / std::sqrt(double(m));
    return r;
}

std::vector<double> geometric_grid(double hbar_max, double ratio, int count)
{
    if (!(hbar_max > 0.0) || !(ratio > 0.0 && ratio < 1.0) || count < 1)
        throw std::invalid_argument("bad geometric grid parameters");
    std::vector<double> g;
    for (int i = count - 1; i >= 0; --i) g.push_back(hbar_max * std::pow(ratio, i));
    return g;
}

TraceSeries trace_series(const Potential& V, const WeightSpec& w, const RealFn& phi, const std::vector<double>& hbars,
                         bool rescale, double trust_fraction)
{
    TraceSeries ts;
    const int n = V.dim();
    for (double h : hbars) {
        const int jneed = static_cast<int>(std::ceil(w.support_max() / h - 0.5 * n)) + 1;
        const int J = oscillator::basis_for_level(jneed, V.degree(), trust_fraction);
        auto basis = oscillator::make_basis(n, h, J, static_cast<int>(std::floor(trust_fraction * J)));
        basis.refine = rescale;
        auto cs = oscillator::make_clusters(oscillator::compute_spectrum(V, basis));
        ts.hbars.push_back(h);
        ts.values.push_back(trace_moments(cs, w, phi, rescale));
    }
    return ts;
}

std::vector<SzegoSample> szego_compare(const Potential& V, double E, const RealFn& phi, const std::vector<int>& Ns,
                                       bool odd_rescale)
{
    if (!(E > 0.0)) throw std::invalid_argument("E must be positive");
    double target = 0.0;
    if (odd_rescale) {
        if (!V.is_odd()) throw std::invalid_argument("odd rescaling needs an odd potential");
        const PhasePolynomial vd = averaging::delta_average(V);
        auto g = [&](const std::vector<double>& x, const std::vector<double>& p) {
            return phi(vd.evaluate(x, p).real());
        };
        target = converged_sphere([&](int nodes) { return sphere_function_average(g, V.dim(), E, nodes, false); }, 16);
    } else {
        target = sphere_invariant(V, E, phi);
    }
    std::vector<SzegoSample> out;
    for (int N : Ns) {
        if (N < 1) throw std::invalid_argument("N must be positive");
        const double h = E / N;
        const int J = oscillator::basis_for_level(N, V.degree());
        auto basis = oscillator::make_basis(V.dim(), h, J);
        basis.refine = odd_rescale;
        auto cs = oscillator::make_clusters(oscillator::compute_spectrum(V, basis));
        const oscillator::Cluster* cl = nullptr;
        for (const auto& c : cs.clusters)
            if (c.j == N) cl = &c;
        if (!cl) throw std::runtime_error("cluster " + std::to_string(N) + " missing from trusted window");
        double mean = 0.0;
        for (double m : cl->shifts) mean += phi(odd_rescale ? m / (h * h) : m);
        mean /= static_cast<double>(cl->shifts.size());
        out.push_back({N, h, mean, target, std::abs(mean - target)});
    }
    return out;
}

double semiclassical_invariant(const SemiclassicalPotential& Vs, const WeightSpec& w, int l, int k)
{
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (l < 0) throw std::invalid_argument("l must be nonnegative");
    if (k >= static_cast<int>(Vs.orders.size())) return 0.0;
    const PhasePolynomial a0 = averaging::average_poly(Vs.orders[0]);
    const PhasePolynomial ak = averaging::average_poly(Vs.orders[k]);
    return weighted_integral(a0.pow(l) * ak, w);
}

} // namespace oscbands::invariants
