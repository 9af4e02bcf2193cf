#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace oscbands {

using cplx = std::complex<double>;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

constexpr int kMaxDim = 4;

// Packed exponent: 8 bits per slot, slots 0..n-1 hold x exponents and
// n..2n-1 hold p exponents.
using MonoKey = std::uint64_t;

inline int key_get(MonoKey k, int slot) { return static_cast<int>((k >> (8 * slot)) & 0xFFu); }
inline MonoKey key_set(MonoKey k, int slot, int e)
{
    MonoKey mask = MonoKey(0xFF) << (8 * slot);
    return (k & ~mask) | (MonoKey(static_cast<unsigned>(e)) << (8 * slot));
}
inline MonoKey key_unit(int slot) { return MonoKey(1) << (8 * slot); }

struct Term {
    std::vector<int> ax;
    std::vector<int> ap;
    cplx c;
};

/// Sparse polynomial in (x, p) with complex coefficients.
class PhasePolynomial {
public:
    using Map = std::unordered_map<MonoKey, cplx>;

    PhasePolynomial() = default;
    explicit PhasePolynomial(int dim);

    static PhasePolynomial constant(int dim, cplx c);
    static PhasePolynomial x(int dim, int i);
    static PhasePolynomial p(int dim, int i);
    static PhasePolynomial H0(int dim);
    /// x_i^2 + p_i^2
    static PhasePolynomial abs_z_sq(int dim, int i);

    int dim() const { return dim_; }
    std::size_t size() const { return terms_.size(); }
    bool is_zero() const { return terms_.empty(); }
    int degree() const;
    const Map& raw() const { return terms_; }

    void add_term(const std::vector<int>& ax, const std::vector<int>& ap, cplx c);
    void add_key(MonoKey k, cplx c);
    cplx coeff(const std::vector<int>& ax, const std::vector<int>& ap) const;
    cplx coeff_key(MonoKey k) const;

    /// Terms sorted by (total degree, exponent) for deterministic output.
    std::vector<Term> terms() const;
    std::vector<std::pair<MonoKey, cplx>> sorted_keys() const;

    MonoKey make_key(const std::vector<int>& ax, const std::vector<int>& ap) const;
    int key_degree(MonoKey k) const;

    PhasePolynomial& operator+=(const PhasePolynomial& o);
    PhasePolynomial& operator-=(const PhasePolynomial& o);
    PhasePolynomial& operator*=(cplx s);
    friend PhasePolynomial operator+(PhasePolynomial a, const PhasePolynomial& b) { return a += b; }
    friend PhasePolynomial operator-(PhasePolynomial a, const PhasePolynomial& b) { return a -= b; }
    friend PhasePolynomial operator*(PhasePolynomial a, cplx s) { return a *= s; }
    friend PhasePolynomial operator*(cplx s, PhasePolynomial a) { return a *= s; }
    friend PhasePolynomial operator*(const PhasePolynomial& a, const PhasePolynomial& b);
    PhasePolynomial operator-() const { return (*this) * cplx(-1.0); }

    PhasePolynomial pow(int k) const;
    PhasePolynomial dx(int i) const;
    PhasePolynomial dp(int i) const;
    /// Derivative with respect to slot (0..n-1 are x, n..2n-1 are p).
    PhasePolynomial dslot(int slot) const;
    PhasePolynomial homogeneous_part(int d) const;
    PhasePolynomial conj() const;
    PhasePolynomial real_part() const;
    PhasePolynomial imag_part() const;
    /// Drops coefficients with |c| <= tol.
    PhasePolynomial chopped(double tol) const;
    double max_abs() const;

    cplx evaluate(const std::vector<double>& x, const std::vector<double>& p) const;
    cplx evaluate(const std::vector<cplx>& x, const std::vector<cplx>& p) const;

    bool approx_equal(const PhasePolynomial& o, double tol) const;
    bool operator==(const PhasePolynomial& o) const;

    std::string to_string() const;

private:
    int dim_ = 1;
    Map terms_;
};

double max_abs_diff(const PhasePolynomial& a, const PhasePolynomial& b);

/// Polynomial potential V(x) with real coefficients, optionally evaluation-only.
class Potential {
public:
    Potential() = default;
    explicit Potential(int dim);

    static Potential monomial(int dim, const std::vector<int>& alpha, double c);
    /// Evaluation-only potential; no closed-form path is available for it.
    static Potential from_callable(int dim, std::function<double(const std::vector<double>&)> f);

    int dim() const { return dim_; }
    bool is_polynomial() const { return !callable_; }
    const std::map<std::vector<int>, double>& terms() const { return terms_; }

    void add_term(const std::vector<int>& alpha, double c);
    double coeff(const std::vector<int>& alpha) const;
    int degree() const;
    double evaluate(const std::vector<double>& x) const;

    /// Every monomial has odd total degree.
    bool is_odd() const;
    /// Every monomial has even total degree.
    bool is_even() const;
    /// Every exponent is even.
    bool is_even_each() const;

    Potential homogeneous_part(int d) const;
    Potential even_part() const;
    Potential odd_part() const;
    PhasePolynomial to_phase() const;

    Potential& operator+=(const Potential& o);
    friend Potential operator+(Potential a, const Potential& b) { return a += b; }
    Potential operator*(double s) const;
    friend Potential operator*(const Potential& a, const Potential& b);
    Potential operator-(const Potential& o) const { return *this + o * -1.0; }

    bool approx_equal(const Potential& o, double tol) const;
    std::string to_string() const;

private:
    void require_poly(const char* what) const;
    int dim_ = 1;
    std::map<std::vector<int>, double> terms_;
    std::function<double(const std::vector<double>&)> callable_;
};

/// V0 + hbar V1 + hbar^2 V2 + ...
struct SemiclassicalPotential {
    std::vector<Potential> orders;
    int dim() const { return orders.empty() ? 1 : orders.front().dim(); }
};

/// Real polynomial in one variable, coefficient c[k] of s^k.
struct Poly1 {
    std::vector<double> c;
    double operator()(double s) const;
    Poly1 derivative() const;
    int degree() const;
};

} // namespace oscbands
