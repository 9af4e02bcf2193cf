#include "oscbands/averaging.hpp"

#include "oscbands/symbolcalc.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oscbands::averaging {

namespace {

double binom(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// all j with 0 <= j_r <= alpha_r and |j| = half
void split_indices(const std::vector<int>& alpha, int pos, int remaining, std::vector<int>& cur,
                   std::vector<std::vector<int>>& out)
{
    if (pos == static_cast<int>(alpha.size())) {
        if (remaining == 0) out.push_back(cur);
        return;
    }
    for (int j = 0; j <= std::min(alpha[pos], remaining); ++j) {
        cur[pos] = j;
        split_indices(alpha, pos + 1, remaining - j, cur, out);
    }
}

} // namespace

PhasePolynomial average_poly(const Potential& V)
{
    if (!V.is_polynomial()) throw std::invalid_argument("average_poly needs a polynomial potential");
    const int n = V.dim();
    PhasePolynomial zsum(n);  // in (z, zbar) slots
    for (const auto& [alpha, c] : V.terms()) {
        int total = 0;
        for (int a : alpha) total += a;
        if (total % 2 != 0) continue;
        std::vector<std::vector<int>> js;
        std::vector<int> cur(n, 0);
        split_indices(alpha, 0, total / 2, cur, js);
        const double scale = c * std::pow(0.5, total);
        for (const auto& j : js) {
            double w = scale;
            MonoKey k = 0;
            for (int r = 0; r < n; ++r) {
                w *= binom(alpha[r], j[r]);
                k = key_set(k, r, j[r]);
                k = key_set(k, n + r, alpha[r] - j[r]);
            }
            zsum.add_key(k, w);
        }
    }
    return symbolcalc::from_z_basis(zsum).real_part();
}

PhasePolynomial average_phase(const PhasePolynomial& f)
{
    return symbolcalc::flow_pullback(f).component(0, 0);
}

double average_numeric(const Callable& V, const std::vector<double>& x, const std::vector<double>& p, int nodes)
{
    if (nodes < 16) throw std::invalid_argument("average_numeric needs at least 16 nodes");
    if (x.size() != p.size()) throw DimensionError("x and p sizes differ");
    const std::size_t n = x.size();
    std::vector<double> y(n);
    double acc = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const double s = 2.0 * std::numbers::pi * k / nodes;
        const double cs = std::cos(s), sn = std::sin(s);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * cs + p[i] * sn;
        const double v = V(y);
        if (!std::isfinite(v)) throw std::domain_error("potential returned a non-finite value");
        acc += v;
    }
    return acc / nodes;
}

NumericAverage average_numeric_converged(const Callable& V, const std::vector<double>& x,
                                         const std::vector<double>& p, int start_nodes, double rel_tol,
                                         int max_nodes)
{
    int nodes = std::max(16, start_nodes);
    double prev = average_numeric(V, x, p, nodes);
    while (nodes * 2 <= max_nodes) {
        nodes *= 2;
        double cur = average_numeric(V, x, p, nodes);
        double gap = std::abs(cur - prev);
        if (gap <= rel_tol * std::max(1.0, std::abs(cur))) return {cur, nodes, gap};
        prev = cur;
    }
    throw std::runtime_error("circle average did not converge within " + std::to_string(max_nodes) + " nodes");
}

PhasePolynomial double_bracket_integral(const PhasePolynomial& f, const PhasePolynomial& g)
{
    using symbolcalc::poisson_bracket;
    const double tp = 2.0 * std::numbers::pi;
    const cplx I(0.0, 1.0);
    auto pf = symbolcalc::flow_pullback(f);
    auto pg = symbolcalc::flow_pullback(g);
    PhasePolynomial acc(f.dim());
    for (const auto& [ks, Ps] : pf.terms()) {
        const int m = ks.second;
        for (const auto& [ku, Pu] : pg.terms()) {
            const int mp = ku.second;
            // int_0^{2pi} int_0^u e^{ims} e^{im'u} ds du
            cplx d = 0.0;
            if (m == 0) {
                d = (mp == 0) ? cplx(tp * tp / 2.0) : cplx(tp) / (I * double(mp));
            } else {
                double delta = (m + mp == 0 ? 1.0 : 0.0) - (mp == 0 ? 1.0 : 0.0);
                if (delta == 0.0) continue;
                d = cplx(tp * delta) / (I * double(m));
            }
            acc += poisson_bracket(Ps, Pu) * d;
        }
    }
    return acc.chopped(1e-14 * std::max(1.0, acc.max_abs()));
}

PhasePolynomial delta_average_phase(const PhasePolynomial& f)
{
    PhasePolynomial acc = double_bracket_integral(f, f) * cplx(-1.0 / (4.0 * std::numbers::pi));
    return acc.chopped(1e-14 * std::max(1.0, acc.max_abs()));
}

PhasePolynomial delta_average(const Potential& V)
{
    if (!V.is_polynomial()) throw std::invalid_argument("delta_average needs a polynomial potential");
    return delta_average_phase(V.to_phase());
}

double gamma_coeff(int k, int r)
{
    if (k < 0) throw std::invalid_argument("gamma_coeff needs k >= 0");
    if (std::abs(r) > k) return 0.0;
    // 4^{-k} C(2k, k+r), accumulated as a product to stay in range
    double v = 1.0;
    const int top = k + std::abs(r);
    for (int i = 1; i <= 2 * k - top; ++i) v *= double(top + i) / i;
    return v * std::pow(0.25, k);
}

double gamma_asymptotic(int k, int /*r*/)
{
    if (k <= 0) throw std::invalid_argument("gamma_asymptotic needs k >= 1");
    return 1.0 / std::sqrt(std::numbers::pi * k);
}

Poly1 b_r_apply(const Poly1& f, int r)
{
    Poly1 out;
    out.c.assign(f.c.size(), 0.0);
    for (std::size_t i = 0; i < f.c.size(); ++i) {
        if (f.c[i] == 0.0) continue;
        if (i % 2 != 0) throw std::invalid_argument("b_r_apply needs an even polynomial");
        out.c[i] = f.c[i] * gamma_coeff(static_cast<int>(i / 2), r);
    }
    return out;
}

namespace {

void require_even_2d(const Potential& V, const char* what)
{
    if (V.dim() != 2) throw DimensionError(std::string(what) + " is defined for n = 2 only");
    if (!V.is_polynomial()) throw std::invalid_argument(std::string(what) + " needs a polynomial");
    if (!V.is_even_each()) throw std::invalid_argument(std::string(what) + " needs V even in each variable");
}

} // namespace

FourierComponentMap r_n_decompose(const Potential& V)
{
    require_even_2d(V, "r_n_decompose");
    FourierComponentMap out;
    for (const auto& [alpha, c] : V.terms()) {
        const int k = alpha[0] / 2, l = alpha[1] / 2;
        const int rm = std::min(k, l);
        for (int r = -rm; r <= rm; ++r) {
            auto it = out.find(r);
            if (it == out.end()) it = out.emplace(r, Potential(2)).first;
            it->second.add_term(alpha, c * gamma_coeff(k, r) * gamma_coeff(l, r));
        }
    }
    if (out.find(0) == out.end()) out.emplace(0, Potential(2));
    return out;
}

Potential a0_apply(const Potential& g)
{
    require_even_2d(g, "a0_apply");
    Potential out(2);
    for (const auto& [alpha, c] : g.terms())
        out.add_term(alpha, c * gamma_coeff(alpha[0] / 2, 0) * gamma_coeff(alpha[1] / 2, 0));
    return out;
}

Potential a0_invert(const Potential& g)
{
    require_even_2d(g, "a0_invert");
    Potential out(2);
    for (const auto& [alpha, c] : g.terms())
        out.add_term(alpha, c / (gamma_coeff(alpha[0] / 2, 0) * gamma_coeff(alpha[1] / 2, 0)));
    return out;
}

} // namespace oscbands::averaging
