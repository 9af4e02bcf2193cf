#pragma once

#include "oscbands/polynomial.hpp"

#include <map>
#include <utility>
#include <vector>

namespace oscbands::symbolcalc {

/// {f,g} = sum_i df/dx_i dg/dp_i - df/dp_i dg/dx_i
PhasePolynomial poisson_bracket(const PhasePolynomial& f, const PhasePolynomial& g);

/// {a,b}_k = sum_{|alpha|+|beta|=k} (-1)^{|alpha|}/(alpha! beta!) d_p^beta d_x^alpha a * d_p^alpha d_x^beta b
PhasePolynomial higher_bracket(const PhasePolynomial& a, const PhasePolynomial& b, int k);

/// hbar^j coefficient of the Weyl product a # b, normalized so that x#p - p#x = i hbar.
/// Equals (2i)^{-j} {a,b}_j.
PhasePolynomial moyal_term(const PhasePolynomial& a, const PhasePolynomial& b, int j);

/// Full hbar expansion of a # b (finite for polynomials), entry j is the hbar^j term.
std::vector<PhasePolynomial> moyal_product(const PhasePolynomial& a, const PhasePolynomial& b);

/// Polynomial hbar-series, entry k is the hbar^k coefficient.
using Series = std::vector<PhasePolynomial>;
/// Weyl product of two hbar-series truncated at order max_order.
Series moyal_series_product(const Series& a, const Series& b, int max_order);

/// prefactor * exp(rate * H0)
struct ExpPolySymbol {
    PhasePolynomial prefactor;
    cplx rate{0.0};

    ExpPolySymbol() = default;
    ExpPolySymbol(PhasePolynomial pre, cplx r) : prefactor(std::move(pre)), rate(r) {}

    int dim() const { return prefactor.dim(); }
    ExpPolySymbol dslot(int slot) const;
    cplx evaluate(const std::vector<double>& x, const std::vector<double>& p) const;
    ExpPolySymbol& operator+=(const ExpPolySymbol& o);
    ExpPolySymbol operator*(cplx s) const { return {prefactor * s, rate}; }
    bool approx_equal(const ExpPolySymbol& o, double tol) const;
};

ExpPolySymbol operator*(const ExpPolySymbol& a, const PhasePolynomial& b);
ExpPolySymbol operator*(const PhasePolynomial& a, const ExpPolySymbol& b);
ExpPolySymbol operator*(const ExpPolySymbol& a, const ExpPolySymbol& b);

ExpPolySymbol higher_bracket(const ExpPolySymbol& a, const PhasePolynomial& b, int k);
ExpPolySymbol higher_bracket(const PhasePolynomial& a, const ExpPolySymbol& b, int k);
ExpPolySymbol higher_bracket(const ExpPolySymbol& a, const ExpPolySymbol& b, int k);
ExpPolySymbol moyal_term(const ExpPolySymbol& a, const PhasePolynomial& b, int j);
ExpPolySymbol moyal_term(const PhasePolynomial& a, const ExpPolySymbol& b, int j);
/// Both factors must share the same rate.
ExpPolySymbol moyal_term(const ExpPolySymbol& a, const ExpPolySymbol& b, int j);

/// sum_{q,m} t^q e^{imt} P_{q,m}(x,p)
class TimeSymbol {
public:
    using Key = std::pair<int, int>;

    TimeSymbol() = default;
    explicit TimeSymbol(int dim) : dim_(dim) {}
    static TimeSymbol constant(const PhasePolynomial& p);

    int dim() const { return dim_; }
    const std::map<Key, PhasePolynomial>& terms() const { return terms_; }
    void add(int q, int m, const PhasePolynomial& p);
    PhasePolynomial component(int q, int m) const;

    PhasePolynomial at(double t) const;
    PhasePolynomial at_2pi() const;
    TimeSymbol d_dt() const;

    TimeSymbol& operator+=(const TimeSymbol& o);
    TimeSymbol& operator-=(const TimeSymbol& o);
    friend TimeSymbol operator+(TimeSymbol a, const TimeSymbol& b) { return a += b; }
    friend TimeSymbol operator-(TimeSymbol a, const TimeSymbol& b) { return a -= b; }
    friend TimeSymbol operator*(const TimeSymbol& a, const TimeSymbol& b);
    friend TimeSymbol operator*(TimeSymbol a, cplx s);
    friend TimeSymbol operator*(cplx s, TimeSymbol a) { return std::move(a) * s; }

    template <class F>
    TimeSymbol map(F&& f) const
    {
        TimeSymbol r(dim_);
        for (const auto& [k, p] : terms_) r.add(k.first, k.second, f(p));
        return r;
    }

    double max_abs() const;
    bool approx_equal(const TimeSymbol& o, double tol) const;

private:
    int dim_ = 1;
    std::map<Key, PhasePolynomial> terms_;
};

/// Rewrites P(x,p) in the coordinates z = x + i p, zbar = x - i p (slot i holds the
/// power of z_i, slot n+i the power of zbar_i).
PhasePolynomial to_z_basis(const PhasePolynomial& p);
PhasePolynomial from_z_basis(const PhasePolynomial& z);

/// f o phi_s with phi_s(x,p) = (x cos s + p sin s, p cos s - x sin s).
TimeSymbol flow_pullback(const PhasePolynomial& f);
/// f o phi_{-s}.
TimeSymbol flow_pullback_backward(const PhasePolynomial& f);

/// Solves rdot = {H0, r} + F(t), r(0) = 0, i.e. r(t) = int_0^t F(s) o phi_{-(t-s)} ds.
TimeSymbol duhamel(const TimeSymbol& F);

struct TransportResult {
    std::vector<TimeSymbol> r;
    std::vector<PhasePolynomial> w;
};

constexpr int kDefaultTransportOrder = 4;

/// r_0..r_K and w_0..w_K for S0 + hbar^2 V.
TransportResult transport_symbols(const Potential& V, int K, int max_order = kDefaultTransportOrder);

/// (w0^{l+1}, (l+1) w0^l w2 + sum_{j<l} w0^j B2(w0, w0^{l-j})).
std::pair<PhasePolynomial, PhasePolynomial> moyal_power_expansion(const PhasePolynomial& w0,
                                                                  const PhasePolynomial& w2, int l);

} // namespace oscbands::symbolcalc
