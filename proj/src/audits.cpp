#include "oscbands/audits.hpp"

#include "oscbands/averaging.hpp"
#include "oscbands/oscillator.hpp"
#include "oscbands/symbolcalc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace oscbands::audits {

namespace {

using symbolcalc::ExpPolySymbol;

constexpr double kPi = std::numbers::pi;

Check at_most(std::string name, double value, double threshold)
{
    return {std::move(name), value <= threshold, value, threshold};
}

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// Random polynomial with a handful of monomials of total degree <= max_degree.
Potential random_potential(std::mt19937& rng, int dim, int max_degree, int terms, bool odd_only = false,
                           bool even_each = false)
{
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::uniform_int_distribution<int> deg(0, max_degree);
    Potential V(dim);
    int guard = 0;
    while (static_cast<int>(V.terms().size()) < terms && guard++ < 1000) {
        int d = deg(rng);
        if (odd_only && d % 2 == 0) continue;
        std::vector<int> alpha(dim, 0);
        for (int k = 0; k < d; ++k) alpha[std::uniform_int_distribution<int>(0, dim - 1)(rng)] += 1;
        if (even_each) {
            for (int& a : alpha) a -= a % 2;
        }
        V.add_term(alpha, coeff(rng));
    }
    return V;
}

double rel_diff(const PhasePolynomial& a, const PhasePolynomial& b)
{
    return max_abs_diff(a, b) / std::max(1.0, std::max(a.max_abs(), b.max_abs()));
}

// 4^{-k} C(2k, k+r) read off as a Fourier coefficient of cos^{2k}.
double gamma_trapezoid(int k, int r)
{
    const int N = 128;
    double acc = 0.0;
    for (int m = 0; m < N; ++m) {
        const double th = 2.0 * kPi * m / N;
        acc += std::pow(std::cos(th), 2 * k) * std::cos(2.0 * r * th);
    }
    return acc / N;
}

} // namespace

bool AuditResult::pass() const
{
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

double AuditResult::worst_ratio() const
{
    double w = 0.0;
    for (const auto& c : checks) w = std::max(w, c.threshold > 0 ? c.value / c.threshold : (c.value > 0 ? 1e300 : 0.0));
    return w;
}

AuditResult linear_anchor(const std::vector<double>& hbars, int J, double tol)
{
    Timer timer;
    AuditResult res;
    res.name = "linear-anchor";
    Potential V(1);
    V.add_term({1}, 1.0);
    for (double h : hbars) {
        auto basis = oscillator::make_basis(1, h, J);
        auto data = oscillator::compute_spectrum(V, basis);
        auto cs = oscillator::make_clusters(data);
        double e_err = 0.0, mu_err = 0.0;
        for (const auto& c : cs.clusters) {
            for (double e : c.energies) e_err = std::max(e_err, std::abs(e - (h * c.j - std::pow(h, 4) / 2)));
            for (double m : c.shifts) mu_err = std::max(mu_err, std::abs(m + h * h / 2));
        }
        const std::string tag = "hbar=" + std::to_string(h).substr(0, 4);
        res.checks.push_back(at_most("eigenvalue_error " + tag, e_err, tol));
        res.checks.push_back(at_most("shift_error " + tag, mu_err, tol));
        res.checks.push_back(at_most("trusted_levels_missing " + tag,
                                     std::max(0, basis.J_trust + 1 - static_cast<int>(cs.clusters.size())), 0));
    }
    const auto minus_half = PhasePolynomial::constant(1, -0.5);
    res.checks.push_back(at_most("delta_average_x", max_abs_diff(averaging::delta_average(V), minus_half), 1e-12));
    auto tr = symbolcalc::transport_symbols(V, 2);
    res.checks.push_back(at_most("transport_w2_x", max_abs_diff(tr.w[2], minus_half), 1e-12));
    res.seconds = timer.seconds();
    return res;
}

AuditResult quadratic_oracle(double C1, double C2, double hbar, int J, double rel_tol, double ratio_window)
{
    Timer timer;
    AuditResult res;
    res.name = "quadratic-oracle";
    for (int n : {1, 2}) {
        Potential V(n);
        for (int i = 0; i < n; ++i) {
            std::vector<int> a(n, 0);
            a[i] = 2;
            V.add_term(a, C1);
        }
        V.add_term(std::vector<int>(n, 0), C2);
        auto basis = oscillator::make_basis(n, hbar, J);
        auto cs = oscillator::make_clusters(oscillator::compute_spectrum(V, basis));
        auto exact = oscillator::quadratic_exact_spectrum(C1, C2, n, hbar, basis.J_trust);
        double err = 0.0;
        for (const auto& c : cs.clusters)
            for (double e : c.energies) err = std::max(err, std::abs(e - exact[c.j]) / std::abs(exact[c.j]));
        const std::string tag = "n=" + std::to_string(n);
        res.checks.push_back(at_most("closed_form_relative " + tag, err, rel_tol));
        res.checks.push_back(at_most("trusted_levels_missing " + tag,
                                     std::max(0, basis.J_trust + 1 - static_cast<int>(cs.clusters.size())), 0));

        auto widths = oscillator::cluster_width_scan(V, 1.0, {0.1, 0.05, 0.025});
        double dev = 0.0;
        for (std::size_t i = 1; i < widths.size(); ++i)
            dev = std::max(dev, std::abs(widths[i].width / widths[i - 1].width / 0.25 - 1.0));
        res.checks.push_back(at_most("width_ratio_deviation " + tag, dev, ratio_window));
    }
    res.seconds = timer.seconds();
    return res;
}

AuditResult averaging_identities(unsigned seed, int polynomials, int points, double tol)
{
    Timer timer;
    AuditResult res;
    res.name = "averaging-identities";
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);

    double num_err = 0.0, odd_nonzero = 0.0, bracket = 0.0;
    for (int k = 0; k < polynomials; ++k) {
        const int n = 1 + k % 2;
        Potential V = random_potential(rng, n, 8, 6);
        PhasePolynomial ave = averaging::average_poly(V);
        auto f = [&V](const std::vector<double>& y) { return V.evaluate(y); };
        const int nodes = averaging::default_nodes(std::max(1, V.degree()));
        for (int i = 0; i < points; ++i) {
            std::vector<double> x(n), p(n);
            for (auto& v : x) v = coord(rng);
            for (auto& v : p) v = coord(rng);
            const double a = ave.evaluate(x, p).real();
            const double b = averaging::average_numeric(f, x, p, std::max(16, nodes));
            num_err = std::max(num_err, std::abs(a - b) / std::max(1.0, std::abs(a)));
        }
        bracket = std::max(bracket, symbolcalc::poisson_bracket(PhasePolynomial::H0(n), ave).max_abs() /
                                        std::max(1.0, ave.max_abs()));
        Potential odd = random_potential(rng, n, 7, 5, true);
        odd_nonzero = std::max(odd_nonzero, averaging::average_poly(odd).max_abs());
    }
    res.checks.push_back(at_most("average_poly_vs_numeric", num_err, tol));
    res.checks.push_back(at_most("odd_average_abs", odd_nonzero, 0.0));
    res.checks.push_back(at_most("bracket_H0_average", bracket, tol));

    double w2_err = 0.0;
    for (int k = 0; k < 10; ++k) {
        Potential V = random_potential(rng, 1 + k % 2, 4, 4);
        auto tr = symbolcalc::transport_symbols(V, 2);
        w2_err = std::max(w2_err, rel_diff(tr.w[2], averaging::delta_average(V)));
    }
    res.checks.push_back(at_most("w2_vs_delta_average", w2_err, tol));
    res.seconds = timer.seconds();
    return res;
}

AuditResult moyal_identities(unsigned seed, double tol)
{
    Timer timer;
    AuditResult res;
    res.name = "moyal-identities";
    const cplx I(0.0, 1.0);
    const std::vector<double> times = {0.0, 0.4, 1.3, -2.1};

    double b2_err = 0.0;
    for (int n : {1, 2}) {
        const auto H0 = PhasePolynomial::H0(n);
        for (double t : times) {
            ExpPolySymbol u0(PhasePolynomial::constant(n, 1.0), I * t);
            ExpPolySymbol b2 = symbolcalc::moyal_term(H0, u0, 2);
            PhasePolynomial expect = (H0 * cplx(t * t) - PhasePolynomial::constant(n, I * double(n) * t)) * cplx(0.25);
            b2_err = std::max(b2_err, rel_diff(b2.prefactor, expect) + std::abs(b2.rate - I * t));
        }
    }
    res.checks.push_back(at_most("B2_H0_exp", b2_err, tol));

    // u2 = i exp(itH0) g(t), g a polynomial in t; check -i du2/dt = B2(H0,u0) + H0 u2 + u0 s2
    std::mt19937 rng(seed);
    double ode_err = 0.0;
    for (int k = 0; k < 6; ++k) {
        const int n = 1 + k % 2;
        const auto H0 = PhasePolynomial::H0(n);
        Potential V = random_potential(rng, n, 2, 4);
        PhasePolynomial s2 = V.to_phase() + averaging::average_poly(V);
        std::vector<PhasePolynomial> g = {PhasePolynomial(n), s2, PhasePolynomial::constant(n, double(n) / (8.0 * I)),
                                          H0 * cplx(1.0 / 12.0)};
        for (double t : times) {
            PhasePolynomial gt(n), gdot(n);
            for (std::size_t q = 0; q < g.size(); ++q) {
                gt += g[q] * cplx(std::pow(t, q));
                if (q > 0) gdot += g[q] * cplx(q * std::pow(t, q - 1));
            }
            // d/dt [i e^{itH0} g] = i e^{itH0} (i H0 g + gdot)
            PhasePolynomial lhs = (H0 * gt * I + gdot) * (-I * I);
            ExpPolySymbol u0(PhasePolynomial::constant(n, 1.0), I * t);
            PhasePolynomial rhs = symbolcalc::moyal_term(H0, u0, 2).prefactor + H0 * (gt * I) + s2;
            ode_err = std::max(ode_err, rel_diff(lhs, rhs));
        }
    }
    res.checks.push_back(at_most("u2_transport_equation", ode_err, tol));

    double pow_err = 0.0;
    for (int k = 0; k < 4; ++k) {
        const int n = 1 + k % 2;
        Potential V = random_potential(rng, n, 4, 4);
        PhasePolynomial w0 = averaging::average_poly(V), w2 = averaging::delta_average(V);
        symbolcalc::Series W = {w0, PhasePolynomial(n), w2};
        symbolcalc::Series P = W;
        for (int l = 0; l <= 3; ++l) {
            if (l > 0) P = symbolcalc::moyal_series_product(P, W, 2);
            auto [lead, second] = symbolcalc::moyal_power_expansion(w0, w2, l);
            pow_err = std::max({pow_err, rel_diff(P[0], lead), rel_diff(P[2], second),
                                P[1].max_abs() / std::max(1.0, lead.max_abs())});
        }
    }
    res.checks.push_back(at_most("moyal_power_expansion", pow_err, tol));
    res.seconds = timer.seconds();
    return res;
}

AuditResult fourier_laws(unsigned seed, double tol)
{
    Timer timer;
    AuditResult res;
    res.name = "fourier-laws";

    double br_err = 0.0;
    for (int k = 0; k <= 10; ++k) {
        for (int r = -10; r <= 10; ++r) {
            Poly1 f;
            f.c.assign(2 * k + 1, 0.0);
            f.c[2 * k] = 1.0;
            Poly1 g = averaging::b_r_apply(f, r);
            br_err = std::max(br_err, std::abs(g.c[2 * k] - gamma_trapezoid(k, r)));
            for (int i = 0; i < 2 * k; ++i) br_err = std::max(br_err, std::abs(g.c[i]));
        }
    }
    res.checks.push_back(at_most("B_r_diagonal_action", br_err, tol));

    double tensor_err = 0.0;
    for (int k = 0; k <= 6; ++k) {
        for (int l = 0; l <= 6; ++l) {
            auto comps = averaging::r_n_decompose(Potential::monomial(2, {2 * k, 2 * l}, 1.0));
            for (int r = -6; r <= 6; ++r) {
                const double expect = gamma_trapezoid(k, r) * gamma_trapezoid(l, r);
                auto it = comps.find(r);
                double got = 0.0;
                if (it != comps.end()) {
                    for (const auto& [alpha, c] : it->second.terms()) {
                        if (alpha == std::vector<int>{2 * k, 2 * l}) got = c;
                        else tensor_err = std::max(tensor_err, std::abs(c));
                    }
                }
                tensor_err = std::max(tensor_err, std::abs(got - expect));
            }
        }
    }
    res.checks.push_back(at_most("A_r_tensor_rule", tensor_err, tol));

    // gamma_{k,0} sqrt(pi k) increases to 1 with 1 - ratio <= 1/(4k) for k >= 4
    double prev = 0.0, worst_gap = 0.0;
    int monotone_breaks = 0;
    for (int k = 1; k <= 400; ++k) {
        const double ratio = averaging::gamma_coeff(k, 0) * std::sqrt(kPi * k);
        if (ratio <= prev || ratio >= 1.0) ++monotone_breaks;
        if (k >= 4) worst_gap = std::max(worst_gap, (1.0 - ratio) * 4.0 * k);
        prev = ratio;
    }
    res.checks.push_back(at_most("gamma_monotone_breaks", monotone_breaks, 0));
    res.checks.push_back(at_most("gamma_gap_times_4k", worst_gap, 1.0));

    std::mt19937 rng(seed);
    double round_err = 0.0;
    for (int k = 0; k < 10; ++k) {
        Potential g = random_potential(rng, 2, 8, 8, false, true);
        Potential back = averaging::a0_invert(averaging::a0_apply(g));
        Potential via_components = averaging::a0_invert(averaging::r_n_decompose(g).at(0));
        for (const Potential* P : {&back, &via_components}) {
            double e = 0.0;
            for (const auto& [alpha, c] : g.terms()) e = std::max(e, std::abs(c - P->coeff(alpha)));
            for (const auto& [alpha, c] : P->terms()) e = std::max(e, std::abs(c - g.coeff(alpha)));
            round_err = std::max(round_err, e);
        }
    }
    res.checks.push_back(at_most("a0_round_trip", round_err, tol));
    res.seconds = timer.seconds();
    return res;
}

const std::vector<std::string>& audit_names()
{
    static const std::vector<std::string> names = {"linear-anchor", "quadratic-oracle", "averaging-identities",
                                                   "moyal-identities", "fourier-laws"};
    return names;
}

AuditResult run_named(const std::string& name)
{
    if (name == "linear-anchor") return linear_anchor();
    if (name == "quadratic-oracle") return quadratic_oracle();
    if (name == "averaging-identities") return averaging_identities();
    if (name == "moyal-identities") return moyal_identities();
    if (name == "fourier-laws") return fourier_laws();
    throw std::invalid_argument("unknown audit '" + name + "'");
}

} // namespace oscbands::audits
