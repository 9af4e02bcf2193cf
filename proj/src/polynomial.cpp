#include "oscbands/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oscbands {

namespace {

void check_dim(int dim)
{
    if (dim < 1 || dim > kMaxDim)
        throw DimensionError("phase polynomial dimension must lie in [1, 4], got " + std::to_string(dim));
}

} // namespace

PhasePolynomial::PhasePolynomial(int dim) : dim_(dim) { check_dim(dim); }

PhasePolynomial PhasePolynomial::constant(int dim, cplx c)
{
    PhasePolynomial r(dim);
    r.add_key(0, c);
    return r;
}

PhasePolynomial PhasePolynomial::x(int dim, int i)
{
    PhasePolynomial r(dim);
    r.add_key(key_unit(i), 1.0);
    return r;
}

PhasePolynomial PhasePolynomial::p(int dim, int i)
{
    PhasePolynomial r(dim);
    r.add_key(key_unit(dim + i), 1.0);
    return r;
}

PhasePolynomial PhasePolynomial::H0(int dim)
{
    PhasePolynomial r(dim);
    for (int i = 0; i < dim; ++i) {
        r.add_key(2 * key_unit(i), 0.5);
        r.add_key(2 * key_unit(dim + i), 0.5);
    }
    return r;
}

PhasePolynomial PhasePolynomial::abs_z_sq(int dim, int i)
{
    PhasePolynomial r(dim);
    r.add_key(2 * key_unit(i), 1.0);
    r.add_key(2 * key_unit(dim + i), 1.0);
    return r;
}

int PhasePolynomial::key_degree(MonoKey k) const
{
    int d = 0;
    for (int s = 0; s < 2 * dim_; ++s) d += key_get(k, s);
    return d;
}

int PhasePolynomial::degree() const
{
    int d = -1;
    for (const auto& [k, c] : terms_) d = std::max(d, key_degree(k));
    return d;
}

MonoKey PhasePolynomial::make_key(const std::vector<int>& ax, const std::vector<int>& ap) const
{
    if (static_cast<int>(ax.size()) != dim_ || static_cast<int>(ap.size()) != dim_)
        throw DimensionError("exponent length does not match polynomial dimension");
    MonoKey k = 0;
    for (int i = 0; i < dim_; ++i) {
        if (ax[i] < 0 || ap[i] < 0 || ax[i] > 255 || ap[i] > 255)
            throw std::invalid_argument("exponent out of range");
        k = key_set(k, i, ax[i]);
        k = key_set(k, dim_ + i, ap[i]);
    }
    return k;
}

void PhasePolynomial::add_key(MonoKey k, cplx c)
{
    if (c == cplx(0.0)) return;
    auto it = terms_.find(k);
    if (it == terms_.end()) {
        terms_.emplace(k, c);
    } else {
        it->second += c;
        if (it->second == cplx(0.0)) terms_.erase(it);
    }
}

void PhasePolynomial::add_term(const std::vector<int>& ax, const std::vector<int>& ap, cplx c)
{
    add_key(make_key(ax, ap), c);
}

cplx PhasePolynomial::coeff_key(MonoKey k) const
{
    auto it = terms_.find(k);
    return it == terms_.end() ? cplx(0.0) : it->second;
}

cplx PhasePolynomial::coeff(const std::vector<int>& ax, const std::vector<int>& ap) const
{
    return coeff_key(make_key(ax, ap));
}

std::vector<std::pair<MonoKey, cplx>> PhasePolynomial::sorted_keys() const
{
    std::vector<std::pair<MonoKey, cplx>> v(terms_.begin(), terms_.end());
    std::sort(v.begin(), v.end(), [this](const auto& a, const auto& b) {
        int da = key_degree(a.first), db = key_degree(b.first);
        if (da != db) return da < db;
        for (int s = 0; s < 2 * dim_; ++s) {
            int ea = key_get(a.first, s), eb = key_get(b.first, s);
            if (ea != eb) return ea > eb;
        }
        return false;
    });
    return v;
}

std::vector<Term> PhasePolynomial::terms() const
{
    std::vector<Term> out;
    for (const auto& [k, c] : sorted_keys()) {
        Term t{std::vector<int>(dim_), std::vector<int>(dim_), c};
        for (int i = 0; i < dim_; ++i) {
            t.ax[i] = key_get(k, i);
            t.ap[i] = key_get(k, dim_ + i);
        }
        out.push_back(std::move(t));
    }
    return out;
}

PhasePolynomial& PhasePolynomial::operator+=(const PhasePolynomial& o)
{
    if (o.dim_ != dim_) throw DimensionError("dimension mismatch in addition");
    for (const auto& [k, c] : o.terms_) add_key(k, c);
    return *this;
}

PhasePolynomial& PhasePolynomial::operator-=(const PhasePolynomial& o)
{
    if (o.dim_ != dim_) throw DimensionError("dimension mismatch in subtraction");
    for (const auto& [k, c] : o.terms_) add_key(k, -c);
    return *this;
}

PhasePolynomial& PhasePolynomial::operator*=(cplx s)
{
    if (s == cplx(0.0)) {
        terms_.clear();
        return *this;
    }
    for (auto& [k, c] : terms_) c *= s;
    return *this;
}

PhasePolynomial operator*(const PhasePolynomial& a, const PhasePolynomial& b)
{
    if (a.dim_ != b.dim_) throw DimensionError("dimension mismatch in product");
    auto slot_max = [](const PhasePolynomial& q, int slot) {
        int m = 0;
        for (const auto& [k, c] : q.terms_) m = std::max(m, key_get(k, slot));
        return m;
    };
    for (int s = 0; s < 2 * a.dim_; ++s)
        if (slot_max(a, s) + slot_max(b, s) > 255) throw std::overflow_error("phase polynomial exponent exceeds 255");
    PhasePolynomial r(a.dim_);
    r.terms_.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& [ka, ca] : a.terms_)
        for (const auto& [kb, cb] : b.terms_) r.add_key(ka + kb, ca * cb);
    return r;
}

PhasePolynomial PhasePolynomial::pow(int k) const
{
    if (k < 0) throw std::invalid_argument("negative power");
    PhasePolynomial r = constant(dim_, 1.0);
    PhasePolynomial base = *this;
    while (k > 0) {
        if (k & 1) r = r * base;
        k >>= 1;
        if (k) base = base * base;
    }
    return r;
}

PhasePolynomial PhasePolynomial::dslot(int slot) const
{
    PhasePolynomial r(dim_);
    for (const auto& [k, c] : terms_) {
        int e = key_get(k, slot);
        if (e == 0) continue;
        r.add_key(key_set(k, slot, e - 1), c * static_cast<double>(e));
    }
    return r;
}

PhasePolynomial PhasePolynomial::dx(int i) const { return dslot(i); }
PhasePolynomial PhasePolynomial::dp(int i) const { return dslot(dim_ + i); }

PhasePolynomial PhasePolynomial::homogeneous_part(int d) const
{
    PhasePolynomial r(dim_);
    for (const auto& [k, c] : terms_)
        if (key_degree(k) == d) r.add_key(k, c);
    return r;
}

PhasePolynomial PhasePolynomial::conj() const
{
    PhasePolynomial r(dim_);
    for (const auto& [k, c] : terms_) r.add_key(k, std::conj(c));
    return r;
}

PhasePolynomial PhasePolynomial::real_part() const
{
    PhasePolynomial r(dim_);
    for (const auto& [k, c] : terms_) r.add_key(k, c.real());
    return r;
}

PhasePolynomial PhasePolynomial::imag_part() const
{
    PhasePolynomial r(dim_);
    for (const auto& [k, c] : terms_) r.add_key(k, c.imag());
    return r;
}

PhasePolynomial PhasePolynomial::chopped(double tol) const
{
    PhasePolynomial r(dim_);
    for (const auto& [k, c] : terms_) {
        double re = std::abs(c.real()) <= tol ? 0.0 : c.real();
        double im = std::abs(c.imag()) <= tol ? 0.0 : c.imag();
        r.add_key(k, cplx(re, im));
    }
    return r;
}

double PhasePolynomial::max_abs() const
{
    double m = 0.0;
    for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

cplx PhasePolynomial::evaluate(const std::vector<cplx>& x, const std::vector<cplx>& p) const
{
    if (static_cast<int>(x.size()) != dim_ || static_cast<int>(p.size()) != dim_)
        throw DimensionError("evaluation point dimension mismatch");
    cplx sum = 0.0;
    for (const auto& [k, c] : terms_) {
        cplx v = c;
        for (int i = 0; i < dim_; ++i) {
            int ex = key_get(k, i), ep = key_get(k, dim_ + i);
            if (ex) v *= std::pow(x[i], ex);
            if (ep) v *= std::pow(p[i], ep);
        }
        sum += v;
    }
    return sum;
}

cplx PhasePolynomial::evaluate(const std::vector<double>& x, const std::vector<double>& p) const
{
    std::vector<cplx> cx(x.begin(), x.end()), cp(p.begin(), p.end());
    return evaluate(cx, cp);
}

bool PhasePolynomial::approx_equal(const PhasePolynomial& o, double tol) const
{
    return dim_ == o.dim_ && max_abs_diff(*this, o) <= tol;
}

bool PhasePolynomial::operator==(const PhasePolynomial& o) const
{
    return dim_ == o.dim_ && terms_ == o.terms_;
}

std::string PhasePolynomial::to_string() const
{
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& t : terms()) {
        if (!first) os << " + ";
        first = false;
        os << "(" << t.c.real();
        if (t.c.imag() != 0.0) os << (t.c.imag() < 0 ? "-" : "+") << std::abs(t.c.imag()) << "i";
        os << ")";
        for (int i = 0; i < dim_; ++i) {
            if (t.ax[i]) os << "*x" << (i + 1) << (t.ax[i] > 1 ? "^" + std::to_string(t.ax[i]) : "");
            if (t.ap[i]) os << "*p" << (i + 1) << (t.ap[i] > 1 ? "^" + std::to_string(t.ap[i]) : "");
        }
    }
    return os.str();
}

double max_abs_diff(const PhasePolynomial& a, const PhasePolynomial& b)
{
    return (a - b).max_abs();
}

// ---------------------------------------------------------------- Potential

Potential::Potential(int dim) : dim_(dim) { check_dim(dim); }

Potential Potential::monomial(int dim, const std::vector<int>& alpha, double c)
{
    Potential v(dim);
    v.add_term(alpha, c);
    return v;
}

Potential Potential::from_callable(int dim, std::function<double(const std::vector<double>&)> f)
{
    Potential v(dim);
    v.callable_ = std::move(f);
    return v;
}

void Potential::require_poly(const char* what) const
{
    if (callable_) throw std::invalid_argument(std::string(what) + " requires a polynomial potential");
}

void Potential::add_term(const std::vector<int>& alpha, double c)
{
    require_poly("add_term");
    if (static_cast<int>(alpha.size()) != dim_) throw DimensionError("multi-index length mismatch");
    for (int a : alpha)
        if (a < 0) throw std::invalid_argument("negative exponent");
    if (c == 0.0) return;
    auto it = terms_.find(alpha);
    if (it == terms_.end()) {
        terms_.emplace(alpha, c);
    } else {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

double Potential::coeff(const std::vector<int>& alpha) const
{
    auto it = terms_.find(alpha);
    return it == terms_.end() ? 0.0 : it->second;
}

int Potential::degree() const
{
    require_poly("degree");
    int d = -1;
    for (const auto& [a, c] : terms_) {
        int s = 0;
        for (int e : a) s += e;
        d = std::max(d, s);
    }
    return d;
}

double Potential::evaluate(const std::vector<double>& x) const
{
    if (static_cast<int>(x.size()) != dim_) throw DimensionError("evaluation point dimension mismatch");
    if (callable_) return callable_(x);
    double s = 0.0;
    for (const auto& [a, c] : terms_) {
        double v = c;
        for (int i = 0; i < dim_; ++i)
            if (a[i]) v *= std::pow(x[i], a[i]);
        s += v;
    }
    return s;
}

bool Potential::is_odd() const
{
    require_poly("is_odd");
    for (const auto& [a, c] : terms_) {
        int s = 0;
        for (int e : a) s += e;
        if (s % 2 == 0) return false;
    }
    return true;
}

bool Potential::is_even() const
{
    require_poly("is_even");
    for (const auto& [a, c] : terms_) {
        int s = 0;
        for (int e : a) s += e;
        if (s % 2 != 0) return false;
    }
    return true;
}

bool Potential::is_even_each() const
{
    require_poly("is_even_each");
    for (const auto& [a, c] : terms_)
        for (int e : a)
            if (e % 2 != 0) return false;
    return true;
}

Potential Potential::homogeneous_part(int d) const
{
    require_poly("homogeneous_part");
    Potential r(dim_);
    for (const auto& [a, c] : terms_) {
        int s = 0;
        for (int e : a) s += e;
        if (s == d) r.add_term(a, c);
    }
    return r;
}

Potential Potential::even_part() const
{
    require_poly("even_part");
    Potential r(dim_);
    for (const auto& [a, c] : terms_) {
        int s = 0;
        for (int e : a) s += e;
        if (s % 2 == 0) r.add_term(a, c);
    }
    return r;
}

Potential Potential::odd_part() const
{
    require_poly("odd_part");
    Potential r(dim_);
    for (const auto& [a, c] : terms_) {
        int s = 0;
        for (int e : a) s += e;
        if (s % 2 != 0) r.add_term(a, c);
    }
    return r;
}

PhasePolynomial Potential::to_phase() const
{
    require_poly("to_phase");
    PhasePolynomial r(dim_);
    std::vector<int> zero(dim_, 0);
    for (const auto& [a, c] : terms_) r.add_term(a, zero, c);
    return r;
}

Potential& Potential::operator+=(const Potential& o)
{
    require_poly("addition");
    o.require_poly("addition");
    if (o.dim_ != dim_) throw DimensionError("dimension mismatch in potential sum");
    for (const auto& [a, c] : o.terms_) add_term(a, c);
    return *this;
}

Potential Potential::operator*(double s) const
{
    require_poly("scaling");
    Potential r(dim_);
    for (const auto& [a, c] : terms_) r.add_term(a, c * s);
    return r;
}

Potential operator*(const Potential& a, const Potential& b)
{
    a.require_poly("product");
    b.require_poly("product");
    if (a.dim_ != b.dim_) throw DimensionError("dimension mismatch in potential product");
    Potential r(a.dim_);
    for (const auto& [ea, ca] : a.terms_)
        for (const auto& [eb, cb] : b.terms_) {
            std::vector<int> e(a.dim_);
            for (int i = 0; i < a.dim_; ++i) e[i] = ea[i] + eb[i];
            r.add_term(e, ca * cb);
        }
    return r;
}

bool Potential::approx_equal(const Potential& o, double tol) const
{
    if (dim_ != o.dim_) return false;
    Potential d = *this - o;
    for (const auto& [a, c] : d.terms_)
        if (std::abs(c) > tol) return false;
    return true;
}

std::string Potential::to_string() const
{
    if (callable_) return "<callable>";
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [a, c] : terms_) {
        if (!first) os << " + ";
        first = false;
        os << c;
        for (int i = 0; i < dim_; ++i)
            if (a[i]) os << "*x" << (i + 1) << (a[i] > 1 ? "^" + std::to_string(a[i]) : "");
    }
    return os.str();
}

double Poly1::operator()(double s) const
{
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
    return v;
}

Poly1 Poly1::derivative() const
{
    Poly1 d;
    for (std::size_t k = 1; k < c.size(); ++k) d.c.push_back(c[k] * static_cast<double>(k));
    return d;
}

int Poly1::degree() const
{
    for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k)
        if (c[k] != 0.0) return k;
    return -1;
}

} // namespace oscbands
