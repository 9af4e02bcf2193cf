#include "oscbands/symbolcalc.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oscbands::symbolcalc {

namespace {

const cplx I(0.0, 1.0);

double factorial(int k)
{
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

double binom(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

void require_same_dim(int a, int b)
{
    if (a != b) throw DimensionError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

// All vectors of `len` nonnegative ints summing to k.
void compositions(int len, int k, std::vector<int>& cur, int pos, std::vector<std::vector<int>>& out)
{
    if (pos == len - 1) {
        cur[pos] = k;
        out.push_back(cur);
        return;
    }
    for (int v = 0; v <= k; ++v) {
        cur[pos] = v;
        compositions(len, k - v, cur, pos + 1, out);
    }
}

std::vector<std::vector<int>> compositions(int len, int k)
{
    std::vector<std::vector<int>> out;
    std::vector<int> cur(len, 0);
    compositions(len, k, cur, 0, out);
    return out;
}

PhasePolynomial deriv(const PhasePolynomial& a, const std::vector<int>& orders)
{
    PhasePolynomial r = a;
    for (std::size_t s = 0; s < orders.size(); ++s)
        for (int t = 0; t < orders[s]; ++t) r = r.dslot(static_cast<int>(s));
    return r;
}

ExpPolySymbol deriv(const ExpPolySymbol& a, const std::vector<int>& orders)
{
    ExpPolySymbol r = a;
    for (std::size_t s = 0; s < orders.size(); ++s)
        for (int t = 0; t < orders[s]; ++t) r = r.dslot(static_cast<int>(s));
    return r;
}

template <class R, class A, class B>
R bracket_impl(const A& a, const B& b, int k, R zero)
{
    const int n = a.dim();
    R acc = std::move(zero);
    for (const auto& g : compositions(2 * n, k)) {
        // g[0..n) = alpha, g[n..2n) = beta
        std::vector<int> oa(2 * n), ob(2 * n);
        int abs_alpha = 0;
        double denom = 1.0;
        for (int i = 0; i < n; ++i) {
            int al = g[i], be = g[n + i];
            abs_alpha += al;
            denom *= factorial(al) * factorial(be);
            oa[i] = al;      // d_x^alpha on a
            oa[n + i] = be;  // d_p^beta on a
            ob[i] = be;      // d_x^beta on b
            ob[n + i] = al;  // d_p^alpha on b
        }
        auto da = deriv(a, oa);
        auto db = deriv(b, ob);
        double sign = (abs_alpha % 2 == 0) ? 1.0 : -1.0;
        acc += (da * db) * cplx(sign / denom);
    }
    return acc;
}

cplx moyal_scale(int j) { return std::pow(cplx(0.0, 2.0), -j); }

} // namespace

PhasePolynomial poisson_bracket(const PhasePolynomial& f, const PhasePolynomial& g)
{
    require_same_dim(f.dim(), g.dim());
    PhasePolynomial r(f.dim());
    for (int i = 0; i < f.dim(); ++i) {
        r += f.dx(i) * g.dp(i);
        r -= f.dp(i) * g.dx(i);
    }
    return r;
}

PhasePolynomial higher_bracket(const PhasePolynomial& a, const PhasePolynomial& b, int k)
{
    require_same_dim(a.dim(), b.dim());
    if (k < 0) throw std::invalid_argument("bracket order must be nonnegative");
    return bracket_impl(a, b, k, PhasePolynomial(a.dim()));
}

PhasePolynomial moyal_term(const PhasePolynomial& a, const PhasePolynomial& b, int j)
{
    return higher_bracket(a, b, j) * moyal_scale(j);
}

std::vector<PhasePolynomial> moyal_product(const PhasePolynomial& a, const PhasePolynomial& b)
{
    require_same_dim(a.dim(), b.dim());
    int top = std::max(0, std::min(a.degree(), b.degree()));
    std::vector<PhasePolynomial> out;
    for (int j = 0; j <= top; ++j) out.push_back(moyal_term(a, b, j));
    return out;
}

Series moyal_series_product(const Series& a, const Series& b, int max_order)
{
    if (a.empty() || b.empty()) throw std::invalid_argument("empty series");
    const int n = a.front().dim();
    Series out(max_order + 1, PhasePolynomial(n));
    for (int i = 0; i < static_cast<int>(a.size()) && i <= max_order; ++i) {
        if (a[i].is_zero()) continue;
        for (int j = 0; j < static_cast<int>(b.size()) && i + j <= max_order; ++j) {
            if (b[j].is_zero()) continue;
            for (int l = 0; i + j + l <= max_order; ++l) out[i + j + l] += moyal_term(a[i], b[j], l);
        }
    }
    return out;
}

// ------------------------------------------------------------ ExpPolySymbol

ExpPolySymbol ExpPolySymbol::dslot(int slot) const
{
    // d(P e^{tau H0}) = (dP + tau * y P) e^{tau H0}, y the slot coordinate
    PhasePolynomial y(dim());
    y.add_key(key_unit(slot), 1.0);
    PhasePolynomial d = prefactor.dslot(slot);
    if (rate != cplx(0.0)) d += (y * prefactor) * rate;
    return {d, rate};
}

cplx ExpPolySymbol::evaluate(const std::vector<double>& x, const std::vector<double>& p) const
{
    double h = 0.0;
    for (double v : x) h += 0.5 * v * v;
    for (double v : p) h += 0.5 * v * v;
    return prefactor.evaluate(x, p) * std::exp(rate * h);
}

ExpPolySymbol& ExpPolySymbol::operator+=(const ExpPolySymbol& o)
{
    if (o.prefactor.is_zero()) return *this;
    if (prefactor.is_zero()) {
        *this = o;
        return *this;
    }
    if (o.rate != rate) throw std::invalid_argument("cannot add exponential symbols with different rates");
    prefactor += o.prefactor;
    return *this;
}

bool ExpPolySymbol::approx_equal(const ExpPolySymbol& o, double tol) const
{
    if (prefactor.is_zero() && o.prefactor.is_zero()) return true;
    return std::abs(rate - o.rate) <= tol && prefactor.approx_equal(o.prefactor, tol);
}

ExpPolySymbol operator*(const ExpPolySymbol& a, const PhasePolynomial& b) { return {a.prefactor * b, a.rate}; }
ExpPolySymbol operator*(const PhasePolynomial& a, const ExpPolySymbol& b) { return {a * b.prefactor, b.rate}; }
ExpPolySymbol operator*(const ExpPolySymbol& a, const ExpPolySymbol& b)
{
    return {a.prefactor * b.prefactor, a.rate + b.rate};
}

ExpPolySymbol higher_bracket(const ExpPolySymbol& a, const PhasePolynomial& b, int k)
{
    require_same_dim(a.dim(), b.dim());
    return bracket_impl(a, b, k, ExpPolySymbol(PhasePolynomial(a.dim()), a.rate));
}

ExpPolySymbol higher_bracket(const PhasePolynomial& a, const ExpPolySymbol& b, int k)
{
    require_same_dim(a.dim(), b.dim());
    return bracket_impl(a, b, k, ExpPolySymbol(PhasePolynomial(a.dim()), b.rate));
}

ExpPolySymbol higher_bracket(const ExpPolySymbol& a, const ExpPolySymbol& b, int k)
{
    require_same_dim(a.dim(), b.dim());
    if (a.rate != b.rate)
        throw std::invalid_argument("bidifferential terms of two exponential symbols need equal rates");
    return bracket_impl(a, b, k, ExpPolySymbol(PhasePolynomial(a.dim()), a.rate + b.rate));
}

ExpPolySymbol moyal_term(const ExpPolySymbol& a, const PhasePolynomial& b, int j)
{
    return higher_bracket(a, b, j) * moyal_scale(j);
}

ExpPolySymbol moyal_term(const PhasePolynomial& a, const ExpPolySymbol& b, int j)
{
    return higher_bracket(a, b, j) * moyal_scale(j);
}

ExpPolySymbol moyal_term(const ExpPolySymbol& a, const ExpPolySymbol& b, int j)
{
    return higher_bracket(a, b, j) * moyal_scale(j);
}

// ---------------------------------------------------------------- TimeSymbol

TimeSymbol TimeSymbol::constant(const PhasePolynomial& p)
{
    TimeSymbol r(p.dim());
    r.add(0, 0, p);
    return r;
}

void TimeSymbol::add(int q, int m, const PhasePolynomial& p)
{
    if (q < 0) throw std::invalid_argument("negative t-power");
    require_same_dim(dim_, p.dim());
    if (p.is_zero()) return;
    auto it = terms_.find({q, m});
    if (it == terms_.end()) {
        terms_.emplace(Key{q, m}, p);
    } else {
        it->second += p;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

PhasePolynomial TimeSymbol::component(int q, int m) const
{
    auto it = terms_.find({q, m});
    return it == terms_.end() ? PhasePolynomial(dim_) : it->second;
}

PhasePolynomial TimeSymbol::at(double t) const
{
    PhasePolynomial r(dim_);
    for (const auto& [k, p] : terms_) r += p * (std::pow(t, k.first) * std::exp(I * (k.second * t)));
    return r;
}

PhasePolynomial TimeSymbol::at_2pi() const
{
    // e^{2 pi i m} = 1 exactly
    const double tp = 2.0 * std::numbers::pi;
    PhasePolynomial r(dim_);
    for (const auto& [k, p] : terms_) r += p * cplx(std::pow(tp, k.first));
    return r;
}

TimeSymbol TimeSymbol::d_dt() const
{
    TimeSymbol r(dim_);
    for (const auto& [k, p] : terms_) {
        auto [q, m] = k;
        if (q > 0) r.add(q - 1, m, p * cplx(q));
        if (m != 0) r.add(q, m, p * (I * double(m)));
    }
    return r;
}

TimeSymbol& TimeSymbol::operator+=(const TimeSymbol& o)
{
    for (const auto& [k, p] : o.terms_) add(k.first, k.second, p);
    return *this;
}

TimeSymbol& TimeSymbol::operator-=(const TimeSymbol& o)
{
    for (const auto& [k, p] : o.terms_) add(k.first, k.second, -p);
    return *this;
}

TimeSymbol operator*(const TimeSymbol& a, const TimeSymbol& b)
{
    require_same_dim(a.dim_, b.dim_);
    TimeSymbol r(a.dim_);
    for (const auto& [ka, pa] : a.terms_)
        for (const auto& [kb, pb] : b.terms_) r.add(ka.first + kb.first, ka.second + kb.second, pa * pb);
    return r;
}

TimeSymbol operator*(TimeSymbol a, cplx s)
{
    TimeSymbol r(a.dim_);
    for (const auto& [k, p] : a.terms_) r.add(k.first, k.second, p * s);
    return r;
}

double TimeSymbol::max_abs() const
{
    double m = 0.0;
    for (const auto& [k, p] : terms_) m = std::max(m, p.max_abs());
    return m;
}

bool TimeSymbol::approx_equal(const TimeSymbol& o, double tol) const
{
    return (*this - o).max_abs() <= tol;
}

// ------------------------------------------------------------- z coordinates

namespace {

// (x, p) -> (z, zbar): x^a p^b = 2^{-a} (2i)^{-b} (z + zbar)^a (z - zbar)^b
std::vector<cplx> xp_to_z_1d(int a, int b)
{
    std::vector<cplx> out(a + b + 1, 0.0);
    cplx scale = std::pow(0.5, a) * std::pow(cplx(0.0, 2.0), -b);
    for (int i = 0; i <= a; ++i)
        for (int j = 0; j <= b; ++j) {
            // z^{i+j} zbar^{a-i+b-j}, sign (-1)^{b-j}
            double s = ((b - j) % 2 == 0) ? 1.0 : -1.0;
            out[i + j] += scale * binom(a, i) * binom(b, j) * s;
        }
    return out;
}

// (z, zbar) -> (x, p): z^c zbar^d = (x + ip)^c (x - ip)^d, entry e is the x^e p^{c+d-e} coefficient
std::vector<cplx> z_to_xp_1d(int c, int d)
{
    std::vector<cplx> out(c + d + 1, 0.0);
    for (int i = 0; i <= c; ++i)
        for (int j = 0; j <= d; ++j) {
            // x^{i+j} p^{c-i+d-j}, factor i^{c-i} (-i)^{d-j}
            cplx f = std::pow(I, c - i) * std::pow(-I, d - j);
            out[i + j] += binom(c, i) * binom(d, j) * f;
        }
    return out;
}

template <class Expand>
PhasePolynomial change_basis(const PhasePolynomial& p, Expand expand)
{
    const int n = p.dim();
    PhasePolynomial out(n);
    for (const auto& [k, c] : p.raw()) {
        std::vector<std::pair<MonoKey, cplx>> cur{{0, c}};
        for (int i = 0; i < n; ++i) {
            int a = key_get(k, i), b = key_get(k, n + i);
            auto e = expand(a, b);
            std::vector<std::pair<MonoKey, cplx>> next;
            next.reserve(cur.size() * e.size());
            for (const auto& [ck, cc] : cur)
                for (int u = 0; u < static_cast<int>(e.size()); ++u) {
                    if (e[u] == cplx(0.0)) continue;
                    MonoKey nk = key_set(key_set(ck, i, u), n + i, a + b - u);
                    next.emplace_back(nk, cc * e[u]);
                }
            cur.swap(next);
        }
        for (const auto& [ck, cc] : cur) out.add_key(ck, cc);
    }
    return out;
}

TimeSymbol pullback_impl(const PhasePolynomial& f, int orientation)
{
    const int n = f.dim();
    PhasePolynomial z = to_z_basis(f);
    std::map<int, PhasePolynomial> by_freq;
    for (const auto& [k, c] : z.raw()) {
        int nz = 0, nzb = 0;
        for (int i = 0; i < n; ++i) {
            nz += key_get(k, i);
            nzb += key_get(k, n + i);
        }
        // forward flow: z -> e^{-is} z, zbar -> e^{is} zbar
        int m = orientation * (nzb - nz);
        auto it = by_freq.find(m);
        if (it == by_freq.end()) it = by_freq.emplace(m, PhasePolynomial(n)).first;
        it->second.add_key(k, c);
    }
    TimeSymbol r(n);
    for (const auto& [m, zp] : by_freq) r.add(0, m, from_z_basis(zp));
    return r;
}

} // namespace

PhasePolynomial to_z_basis(const PhasePolynomial& p) { return change_basis(p, xp_to_z_1d); }
PhasePolynomial from_z_basis(const PhasePolynomial& z) { return change_basis(z, z_to_xp_1d); }

TimeSymbol flow_pullback(const PhasePolynomial& f) { return pullback_impl(f, +1); }
TimeSymbol flow_pullback_backward(const PhasePolynomial& f) { return pullback_impl(f, -1); }

TimeSymbol duhamel(const TimeSymbol& F)
{
    const int n = F.dim();
    TimeSymbol r(n);
    for (const auto& [key, P] : F.terms()) {
        const auto [q, m] = key;
        TimeSymbol pb = flow_pullback_backward(P);
        for (const auto& [k2, Q] : pb.terms()) {
            const int mp = k2.second;  // e^{i m' (t - s)}
            const int w = m - mp;
            if (w == 0) {
                r.add(q + 1, mp, Q * cplx(1.0 / (q + 1)));
                continue;
            }
            const cplx iw = I * double(w);
            const double qf = factorial(q);
            for (int j = 0; j <= q; ++j) {
                double s = ((q - j) % 2 == 0) ? 1.0 : -1.0;
                cplx c = s * (qf / factorial(j)) / std::pow(iw, q - j + 1);
                r.add(j, m, Q * c);
            }
            double s0 = (q % 2 == 0) ? 1.0 : -1.0;
            r.add(0, mp, Q * (-s0 * qf / std::pow(iw, q + 1)));
        }
    }
    return r;
}

TransportResult transport_symbols(const Potential& V, int K, int max_order)
{
    if (!V.is_polynomial()) throw std::invalid_argument("transport needs a polynomial potential");
    if (K < 0 || K > max_order)
        throw std::invalid_argument("transport order " + std::to_string(K) + " exceeds bound " +
                                    std::to_string(max_order));
    const int n = V.dim();
    const PhasePolynomial v = V.to_phase();
    TransportResult res;
    for (int k = 0; k <= K; ++k) {
        TimeSymbol F(n);
        if (k == 0) {
            F = TimeSymbol::constant(v) * cplx(0.0, -1.0);
        } else {
            for (int l = 0; l <= k - 1; ++l) {
                const TimeSymbol& prev = res.r[k - 1 - l];
                F += prev.map([&](const PhasePolynomial& P) { return moyal_term(v, P, l); }) * cplx(0.0, -1.0);
            }
        }
        res.r.push_back(duhamel(F));
    }
    // W = (i / 2 pi hbar) log(I + hbar R) with R = sum hbar^k r_k(2 pi)
    Series R;
    for (const auto& rk : res.r) R.push_back(rk.at_2pi());
    std::vector<PhasePolynomial> w(K + 1, PhasePolynomial(n));
    Series power = R;  // R^{#m}
    for (int m = 1; m <= K + 1; ++m) {
        if (m > 1) power = moyal_series_product(power, R, K);
        double sign = (m % 2 == 1) ? 1.0 : -1.0;
        for (int k = m - 1; k <= K; ++k) {
            int idx = k - (m - 1);
            if (idx < static_cast<int>(power.size())) w[k] += power[idx] * cplx(sign / m);
        }
    }
    const cplx pref = I / (2.0 * std::numbers::pi);
    for (auto& wk : w) {
        wk = wk * pref;
        wk = wk.chopped(1e-13 * std::max(1.0, wk.max_abs()));
    }
    res.w = std::move(w);
    return res;
}

std::pair<PhasePolynomial, PhasePolynomial> moyal_power_expansion(const PhasePolynomial& w0,
                                                                  const PhasePolynomial& w2, int l)
{
    require_same_dim(w0.dim(), w2.dim());
    if (l < 0) throw std::invalid_argument("l must be nonnegative");
    PhasePolynomial lead = w0.pow(l + 1);
    PhasePolynomial second = w0.pow(l) * w2 * cplx(l + 1);
    for (int j = 0; j <= l - 1; ++j) second += w0.pow(j) * moyal_term(w0, w0.pow(l - j), 2);
    return {lead, second};
}

} // namespace oscbands::symbolcalc
