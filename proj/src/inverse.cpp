#include "oscbands/inverse.hpp"

#include "oscbands/averaging.hpp"
#include "oscbands/invariants.hpp"
#include "oscbands/oscillator.hpp"
#include "oscbands/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <memory>
#include <numbers>

namespace oscbands::inverse {

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int k)
{
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

double binom(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

// Lazily extended powers of one phase polynomial.
struct PowerCache {
    explicit PowerCache(PhasePolynomial b) : base(std::move(b)) { pw.push_back(PhasePolynomial::constant(base.dim(), 1.0)); }
    const PhasePolynomial& get(int m)
    {
        if (m < 0) throw std::invalid_argument("negative power");
        while (static_cast<int>(pw.size()) <= m) pw.push_back(pw.back() * base);
        return pw[m];
    }
    PhasePolynomial base;
    std::vector<PhasePolynomial> pw;
};

// (V0^ave)^l Vk^ave, built on demand.
struct ProductCache {
    ProductCache(std::shared_ptr<PowerCache> a, const SemiclassicalPotential& Vs) : ave(std::move(a))
    {
        for (const auto& Vk : Vs.orders) higher.push_back(averaging::average_poly(Vk));
    }
    const PhasePolynomial& get(int l, int k)
    {
        if (k < 1) throw std::invalid_argument("k must be at least 1");
        auto key = std::make_pair(l, k);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        PhasePolynomial v = k < static_cast<int>(higher.size()) ? ave->get(l) * higher[k] : PhasePolynomial(ave->base.dim());
        return cache.emplace(key, std::move(v)).first->second;
    }
    std::shared_ptr<PowerCache> ave;
    std::vector<PhasePolynomial> higher;
    std::map<std::pair<int, int>, PhasePolynomial> cache;
};

// |z_i|^{2k} = (x_i^2 + p_i^2)^k
PhasePolynomial radial_power(int n, int i, int k) { return PhasePolynomial::abs_z_sq(n, i).pow(k); }

Potential derivative(const Potential& V, int i)
{
    Potential out(V.dim());
    for (const auto& [a, c] : V.terms()) {
        if (a[i] == 0) continue;
        auto b = a;
        b[i] -= 1;
        out.add_term(b, c * a[i]);
    }
    return out;
}

Potential chop(const Potential& V, double tol)
{
    Potential out(V.dim());
    for (const auto& [a, c] : V.terms())
        if (std::abs(c) > tol) out.add_term(a, c);
    return out;
}

// F(0) from the quadratic through three samples.
double extrapolate_zero(double x1, double y1, double x2, double y2, double x3, double y3)
{
    return y1 * (x2 * x3) / ((x1 - x2) * (x1 - x3)) + y2 * (x1 * x3) / ((x2 - x1) * (x2 - x3)) +
           y3 * (x1 * x2) / ((x3 - x1) * (x3 - x2));
}

// Linear interpolation on an ascending grid; constant beyond the ends.
double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x)
{
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] * (1.0 - t) + ys[i] * t;
}

// Four-point Lagrange interpolation on an ascending grid.
double interp_cubic(const std::vector<double>& xs, const std::vector<double>& ys, double x)
{
    const std::size_t n = xs.size();
    if (n < 4) return interp(xs, ys, x);
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs.begin());
    std::size_t lo = i >= 2 ? i - 2 : 0;
    if (lo + 4 > n) lo = n - 4;
    double acc = 0.0;
    for (std::size_t a = lo; a < lo + 4; ++a) {
        double w = 1.0;
        for (std::size_t b = lo; b < lo + 4; ++b)
            if (b != a) w *= (x - xs[b]) / (xs[a] - xs[b]);
        acc += w * ys[a];
    }
    return acc;
}

constexpr int kCirclePoints = 256;

// t-expansions of int exp(-(nu/t) H0) (V^ave)^j, cached per j.
class MomentSeries {
public:
    MomentSeries(const InvariantOracle& o, double nu) : o_(o), nu_(nu) {}

    cplx coeff(int j, int p)
    {
        if (j == 0) return p == o_.dim ? std::pow(2.0 * kPi / nu_, o_.dim) : 0.0;
        auto it = cache_.find(j);
        if (it == cache_.end()) {
            std::vector<cplx> c;
            if (o_.first_series) {
                c = o_.first_series(nu_, j);
            } else {
                const double nu = nu_;
                const auto& o = o_;
                c = taylor_coefficients([&](cplx t) { return o.first(nu / t, j); }, kCirclePoints, kCirclePoints);
            }
            it = cache_.emplace(j, std::move(c)).first;
        }
        return p < static_cast<int>(it->second.size()) ? it->second[p] : 0.0;
    }

    // [t^p] int exp(-(nu/t) H0) (V^ave - c)^m
    cplx centered(double c, int m, int p)
    {
        cplx acc = 0.0;
        for (int j = 0; j <= m; ++j) acc += binom(m, j) * std::pow(-c, m - j) * coeff(j, p);
        return acc;
    }

    double constant_term() { return (coeff(1, o_.dim) / std::pow(2.0 * kPi / nu_, o_.dim)).real(); }

private:
    const InvariantOracle& o_;
    double nu_;
    std::map<int, std::vector<cplx>> cache_;
};

struct LeastSquares {
    Eigen::VectorXd x;
    double condition = 0.0;
    double sigma_min = 0.0;
    double residual = 0.0;
};

LeastSquares solve_normalized(const Eigen::MatrixXd& A, const Eigen::VectorXd& y)
{
    Eigen::VectorXd scale = A.colwise().norm().transpose();
    for (int i = 0; i < scale.size(); ++i)
        if (scale(i) == 0.0) scale(i) = 1.0;
    Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    LeastSquares ls;
    ls.sigma_min = sv(sv.size() - 1);
    ls.condition = sv(0) / ls.sigma_min;
    ls.x = svd.solve(y).cwiseQuotient(scale);
    ls.residual = (A * ls.x - y).norm() / std::max(1e-300, y.norm());
    return ls;
}

} // namespace

// ------------------------------------------------------------------ oracles

InvariantOracle classical_oracle(const Potential& V)
{
    SemiclassicalPotential Vs;
    Vs.orders.push_back(V);
    return classical_oracle(Vs);
}

InvariantOracle classical_oracle(const SemiclassicalPotential& Vs)
{
    if (Vs.orders.empty()) throw std::invalid_argument("empty semiclassical potential");
    const Potential V0 = Vs.orders[0];
    InvariantOracle o;
    o.source = "classical";
    o.dim = V0.dim();
    auto ave = std::make_shared<PowerCache>(averaging::average_poly(V0));
    o.first = [ave](cplx nu, int m) { return invariants::gaussian_phase_integral(ave->get(m), nu / 2.0); };
    auto vd = std::make_shared<PhasePolynomial>(averaging::delta_average(V0));
    o.odd = [vd](cplx nu) { return invariants::gaussian_phase_integral(*vd, nu / 2.0); };
    o.second_l0 = [V0](cplx nu) { return invariants::second_invariant_analytic(V0, nu, 0); };
    auto products = std::make_shared<ProductCache>(ave, Vs);
    o.semiclassical = [products](cplx nu, int l, int k) -> cplx {
        return invariants::gaussian_phase_integral(products->get(l, k), nu / 2.0);
    };
    o.sphere = [ave](double E, int m) { return invariants::sphere_average(ave->get(m), E); };
    o.first_series = [ave](double nu, int m) { return invariants::gaussian_phase_expansion(ave->get(m), nu / 2.0); };
    o.semiclassical_series = [products](double nu, int l, int k) {
        return invariants::gaussian_phase_expansion(products->get(l, k), nu / 2.0);
    };
    return o;
}

std::vector<cplx> taylor_coefficients(const std::function<cplx(cplx)>& P, int count, int points, double radius)
{
    if (count < 1 || points < count) throw std::invalid_argument("taylor_coefficients needs points >= count >= 1");
    if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
    std::vector<cplx> vals(points);
    for (int j = 0; j < points; ++j) vals[j] = P(std::polar(radius, 2.0 * kPi * j / points));
    std::vector<cplx> c(count);
    for (int k = 0; k < count; ++k) {
        cplx acc = 0.0;
        for (int j = 0; j < points; ++j) acc += vals[j] * std::polar(1.0, -2.0 * kPi * double(j) * k / points);
        c[k] = acc / (double(points) * std::pow(radius, k));
    }
    return c;
}

// ------------------------------------------------------------- gauge moves

Potential rotate(const Potential& V, const std::vector<std::vector<double>>& O)
{
    const int n = V.dim();
    if (static_cast<int>(O.size()) != n) throw DimensionError("rotation matrix has the wrong size");
    for (const auto& row : O)
        if (static_cast<int>(row.size()) != n) throw DimensionError("rotation matrix has the wrong size");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += O[k][i] * O[k][j];
            if (std::abs(s - (i == j ? 1.0 : 0.0)) > 1e-12) throw std::invalid_argument("matrix is not orthogonal");
        }
    std::vector<Potential> lin;
    for (int i = 0; i < n; ++i) {
        Potential L(n);
        for (int j = 0; j < n; ++j) {
            std::vector<int> a(n, 0);
            a[j] = 1;
            if (O[i][j] != 0.0) L.add_term(a, O[i][j]);
        }
        lin.push_back(L);
    }
    Potential out(n);
    double scale = 0.0;
    for (const auto& [a, c] : V.terms()) {
        Potential t = Potential::monomial(n, std::vector<int>(n, 0), c);
        for (int i = 0; i < n; ++i)
            for (int e = 0; e < a[i]; ++e) t = t * lin[i];
        out += t;
        scale = std::max(scale, std::abs(c));
    }
    return chop(out, 1e-14 * std::max(1.0, scale));
}

Potential rotate(const Potential& V, double theta)
{
    if (V.dim() != 2) throw DimensionError("angle rotation needs two variables");
    const double c = std::cos(theta), s = std::sin(theta);
    return rotate(V, {{c, -s}, {s, c}});
}

SemiclassicalPotential translate(const SemiclassicalPotential& Vs, const std::vector<double>& b)
{
    if (Vs.orders.empty()) throw std::invalid_argument("empty semiclassical potential");
    const int n = Vs.dim();
    if (static_cast<int>(b.size()) != n) throw DimensionError("translation vector has the wrong length");
    int maxdeg = 0;
    for (const auto& V : Vs.orders) maxdeg = std::max(maxdeg, V.degree());
    const int K = static_cast<int>(Vs.orders.size()) - 1;
    SemiclassicalPotential out;
    out.orders.assign(std::max(K + 2 * maxdeg, 2) + 1, Potential(n));
    for (int k = 0; k <= K; ++k) {
        Potential D = Vs.orders[k];
        for (int j = 0; j <= maxdeg; ++j) {
            out.orders[k + 2 * j] += D * (1.0 / factorial(j));
            Potential next(n);
            for (int i = 0; i < n; ++i)
                if (b[i] != 0.0) next += derivative(D, i) * b[i];
            D = next;
        }
    }
    double bb = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<int> a(n, 0);
        a[i] = 1;
        if (b[i] != 0.0) out.orders[0].add_term(a, b[i]);
        bb += b[i] * b[i];
    }
    if (bb != 0.0) out.orders[2].add_term(std::vector<int>(n, 0), 0.5 * bb);
    while (out.orders.size() > 1 && out.orders.back().terms().empty()) out.orders.pop_back();
    return out;
}

Potential collapse(const SemiclassicalPotential& Vs, double hbar)
{
    if (Vs.orders.empty()) throw std::invalid_argument("empty semiclassical potential");
    Potential out(Vs.dim());
    double h = 1.0;
    for (const auto& V : Vs.orders) {
        out += V * h;
        h *= hbar;
    }
    return out;
}

// ------------------------------------------------------------- one variable

ProfileSamples classical_even1d_samples(const Potential& V, double R, int count)
{
    if (V.dim() != 1) throw DimensionError("even 1-D samples need one variable");
    if (!(R > 0.0) || count < 4) throw std::invalid_argument("need R > 0 and at least 4 samples");
    ProfileSamples s;
    for (int i = 1; i <= count; ++i) {
        const double rho = R * R * i / count;
        s.r.push_back(std::sqrt(rho));
        s.g.push_back(invariants::sphere_invariant(V, 0.5 * rho, Poly1{{0.0, 1.0}}));
    }
    return s;
}

ProfileSamples quantum_even1d_samples(const Potential& V, double hbar, double R)
{
    if (V.dim() != 1) throw DimensionError("even 1-D samples need one variable");
    if (!(hbar > 0.0) || !(R > 0.0)) throw std::invalid_argument("need hbar > 0 and R > 0");
    const int jmax = static_cast<int>(std::floor(R * R / (2.0 * hbar) - 0.5 + 1e-12));
    if (jmax < 3) throw std::invalid_argument("hbar too large for the requested radius");
    const int J = oscillator::basis_for_level(jmax, V.degree());
    auto cs = oscillator::make_clusters(oscillator::compute_spectrum(V, oscillator::make_basis(1, hbar, J)));
    ProfileSamples s;
    for (const auto& c : cs.clusters) {
        if (c.j > jmax) break;
        s.r.push_back(std::sqrt(2.0 * hbar * (c.j + 0.5)));
        s.g.push_back(c.shifts.front());
    }
    return s;
}

RecoveryReport recover_even_1d(const ProfileSamples& data, double residual_tol)
{
    const std::size_t M = data.r.size();
    if (M < 4 || data.g.size() != M) throw std::invalid_argument("even 1-D recovery needs at least 4 samples");
    std::vector<double> rho(M + 1, 0.0), F(M + 1, 0.0);
    for (std::size_t i = 0; i < M; ++i) {
        if (!(data.r[i] > 0.0)) throw std::invalid_argument("radii must be positive");
        rho[i + 1] = data.r[i] * data.r[i];
        F[i + 1] = 0.5 * kPi * data.g[i];
    }
    const double step = rho[2] - rho[1];
    for (std::size_t i = 2; i <= M; ++i)
        if (std::abs(rho[i] - rho[i - 1] - step) > 1e-8 * std::max(1.0, step) || !(step > 0.0))
            throw std::invalid_argument("radii must form a uniform ascending grid in r^2");
    F[0] = extrapolate_zero(rho[1], F[1], rho[2], F[2], rho[3], F[3]);

    // V(s) = (2/pi)[F(0) + s int_0^{s^2} F'(q) (s^2 - q)^{-1/2} dq], F piecewise linear
    std::vector<double> s(M + 1), V(M + 1);
    for (std::size_t k = 0; k <= M; ++k) {
        const double u = rho[k];
        double acc = 0.0;
        for (std::size_t i = 1; i <= k; ++i) {
            const double d = (F[i] - F[i - 1]) / (rho[i] - rho[i - 1]);
            acc += d * 2.0 * (std::sqrt(u - rho[i - 1]) - std::sqrt(std::max(0.0, u - rho[i])));
        }
        s[k] = std::sqrt(u);
        V[k] = 2.0 / kPi * (F[0] + s[k] * acc);
    }

    // forward map of the recovered profile, interpolated in s^2
    auto rule = quadrature::gauss_legendre(200, 0.0, 0.5 * kPi);
    double res = 0.0, gmax = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        double g = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double x = data.r[i] * std::cos(rule.nodes[q]);
            g += rule.weights[q] * interp(rho, V, x * x);
        }
        g *= 2.0 / kPi;
        res = std::max(res, std::abs(g - data.g[i]));
        gmax = std::max(gmax, std::abs(data.g[i]));
    }
    RecoveryReport rep;
    rep.method = "even-1d";
    rep.series["s"] = s;
    rep.series["V"] = V;
    rep.residuals["forward"] = res / std::max(1.0, gmax);
    if (rep.residuals["forward"] > residual_tol)
        throw RecoveryError("even 1-D forward residual " + std::to_string(rep.residuals["forward"]) +
                            " exceeds tolerance; refine the grid");
    return rep;
}

RecoveryReport recover_odd_1d(const InvariantOracle& oracle, int D, double nu, double tol)
{
    if (oracle.dim != 1) throw DimensionError("odd recovery needs one variable");
    if (D < 1 || D % 2 == 0) throw std::invalid_argument("D must be odd and positive");
    if (!oracle.odd) throw std::invalid_argument("oracle has no odd invariant");
    const int points = std::max(64, 4 * D);
    auto P = [&](cplx t) { return oracle.odd(nu / t); };
    const auto pc = taylor_coefficients(P, D + 1, points);

    // C(k, l) is the t^{(k+l)/2} coefficient contributed by a_k a_l
    const PhasePolynomial x = PhasePolynomial::x(1, 0);
    auto C = [&](int k, int l) {
        return (-1.0 / (4.0 * kPi) *
                invariants::gaussian_phase_integral(averaging::double_bracket_integral(x.pow(k), x.pow(l)), nu / 2.0))
            .real();
    };
    double scale = 0.0;
    for (const auto& v : pc) scale = std::max(scale, std::abs(v));
    std::vector<double> a(D + 1, 0.0);
    RecoveryReport rep;
    rep.method = "odd-1d";
    rep.flags["sign_ambiguity"] = scale > 0.0;
    if (scale > 0.0) {
        int k = -1;
        for (int m = 1; m <= D; ++m)
            if (std::abs(pc[m]) > tol * scale) {
                k = m;
                break;
            }
        if (k < 0 || k % 2 == 0) throw RecoveryError("odd expansion has no admissible leading coefficient");
        const double sq = pc[k].real() / C(k, k);
        if (!(sq > 0.0)) throw RecoveryError("leading coefficient has the wrong sign for an odd potential");
        a[k] = std::sqrt(sq);
        rep.flags["linear_case"] = k == 1;
        for (int l = k + 2; l <= D; l += 2) {
            const int m = (k + l) / 2;
            if (m > D) break;
            double known = 0.0;
            for (int i = k; i < l; i += 2) {
                const int j = 2 * m - i;
                if (j < k || j >= l) continue;
                known += a[i] * a[j] * C(i, j);
            }
            a[l] = (pc[m].real() - known) / (a[k] * (C(k, l) + C(l, k)));
        }
    }
    double res = 0.0;
    for (int m = 0; m <= D; ++m) {
        double pred = 0.0;
        for (int i = 1; i <= D; i += 2) {
            const int j = 2 * m - i;
            if (j >= 1 && j <= D && j % 2 == 1) pred += a[i] * a[j] * C(i, j);
        }
        res = std::max(res, std::abs(pred - pc[m].real()) + std::abs(pc[m].imag()));
    }
    rep.residuals["expansion"] = res / std::max(1e-300, scale);
    for (int i = 1; i <= D; i += 2) rep.values.push_back(a[i]);
    Potential V(1);
    for (int i = 1; i <= D; i += 2)
        if (a[i] != 0.0) V.add_term({i}, a[i]);
    rep.potential = V;
    if (scale > 0.0 && rep.residuals["expansion"] > 1e-6)
        throw RecoveryError("odd expansion residual " + std::to_string(rep.residuals["expansion"]) +
                            "; data not generated by an odd potential of degree " + std::to_string(D));
    return rep;
}

// ------------------------------------------------------- several variables

RecoveryReport recover_hessian(const InvariantOracle& oracle, double nu)
{
    const int n = oracle.dim;
    if (!oracle.first) throw std::invalid_argument("oracle has no first invariant");
    MomentSeries ms(oracle, nu);
    const double c = ms.constant_term();
    const double mass = std::pow(2.0 * kPi / nu, n);
    // raw moments of Q = V2^ave under the normalized weight exp(-nu H0)
    std::vector<double> mom(n + 1, 1.0), kappa(n + 1, 0.0), p(n + 1, 0.0);
    for (int m = 1; m <= n; ++m) mom[m] = ms.centered(c, m, n + m).real() / mass;
    for (int m = 1; m <= n; ++m) {
        double k = mom[m];
        for (int j = 1; j < m; ++j) k -= binom(m - 1, j - 1) * kappa[j] * mom[m - j];
        kappa[m] = k;
        p[m] = k * std::pow(nu, m) / factorial(m - 1);
    }
    // Newton identities
    std::vector<double> e(n + 1, 0.0);
    e[0] = 1.0;
    for (int k = 1; k <= n; ++k) {
        double s = 0.0;
        for (int i = 1; i <= k; ++i) s += (i % 2 ? 1.0 : -1.0) * e[k - i] * p[i];
        e[k] = s / k;
    }
    std::vector<double> roots;
    double imag = 0.0;
    if (n == 1) {
        roots.push_back(e[1]);
    } else if (n == 2) {
        // a double root leaves a rounding-level negative discriminant
        const double disc = e[1] * e[1] - 4.0 * e[2];
        const double tiny = 1e-10 * std::max(1.0, e[1] * e[1]);
        if (disc < -tiny) imag = 0.5 * std::sqrt(-disc);
        const double sq = std::sqrt(std::max(0.0, disc));
        roots = {0.5 * (e[1] - sq), 0.5 * (e[1] + sq)};
    } else {
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
        for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
        for (int i = 0; i < n; ++i) comp(i, n - 1) = (((n - i) % 2) ? 1.0 : -1.0) * e[n - i];
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
        for (int i = 0; i < n; ++i) {
            roots.push_back(es.eigenvalues()(i).real());
            imag = std::max(imag, std::abs(es.eigenvalues()(i).imag()));
        }
    }
    std::sort(roots.begin(), roots.end());
    double scale = 0.0, gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < roots.size(); ++i) {
        scale = std::max(scale, std::abs(roots[i]));
        if (i) gap = std::min(gap, roots[i] - roots[i - 1]);
    }
    RecoveryReport rep;
    rep.method = "hessian";
    rep.values = roots;
    rep.residuals["constant"] = c;
    rep.residuals["imaginary_part"] = imag;
    rep.flags["near_degenerate"] = n > 1 && gap < 1e-6 * std::max(1.0, scale);
    rep.condition_numbers["root_separation"] = n > 1 ? std::max(1.0, scale) / std::max(gap, 1e-300) : 1.0;
    if (imag > 1e-6 * std::max(1.0, scale))
        throw RecoveryError("moment data give complex eigenvalues (imaginary part " + std::to_string(imag) + ")");
    return rep;
}

double hessian_laplace_value(const std::vector<double>& a, double mu, int terms)
{
    const int n = static_cast<int>(a.size());
    if (n < 1 || n > kMaxDim) throw DimensionError("bad dimension for the Laplace value");
    for (double ai : a)
        if (!(mu > ai)) throw std::invalid_argument("mu must exceed every eigenvalue");
    if (terms < 1 || terms > 120) throw std::invalid_argument("terms must lie in [1, 120]");
    // int exp(-mu|z|^2) Q^k summed with 1/k!, Q = sum a_i |z_i|^2
    PhasePolynomial Q(n);
    for (int i = 0; i < n; ++i) Q += PhasePolynomial::abs_z_sq(n, i) * cplx(a[i]);
    PhasePolynomial pw = PhasePolynomial::constant(n, 1.0);
    double total = 0.0;
    for (int k = 0; k < terms; ++k) {
        if (k > 0) pw = pw * Q * cplx(1.0 / k);
        total += invariants::gaussian_phase_integral(pw, mu).real();
    }
    return total;
}

RecoveryReport recover_linear_norm(const InvariantOracle& oracle, double nu, double class_tol)
{
    const int n = oracle.dim;
    if (!oracle.first || !oracle.second_l0) throw std::invalid_argument("oracle lacks the needed invariants");
    const int points = 128;
    MomentSeries ms(oracle, nu);
    const double c = ms.constant_term();
    const double mass = std::pow(2.0 * kPi / nu, n);
    // hbar^2 invariant with the constant's R(f) contribution removed
    auto P = [&](cplx t) {
        const cplx lam = nu / t;
        return oracle.second_l0(lam) + c * double(n) * std::pow(2.0 * kPi, n) * std::pow(lam, 2 - n) / 24.0;
    };
    const auto pc = taylor_coefficients(P, n + 1, points);
    const double norm2 = -2.0 * pc[n].real() / mass;
    const double quad = ms.centered(c, 2, n + 2).real() / mass;
    const double quart = ms.centered(c, 2, n + 4).real() / mass;
    RecoveryReport rep;
    rep.method = "linear-norm";
    rep.values = {norm2};
    rep.residuals["quadratic_moment"] = quad;
    rep.residuals["quartic_moment"] = quart;
    double low = 0.0;
    for (int k = 0; k < n; ++k) low = std::max(low, std::abs(pc[k]));
    rep.residuals["lower_orders"] = low;
    const bool in_class = std::abs(quad) <= class_tol * std::max(1.0, norm2) &&
                          std::abs(quart) <= class_tol * std::max(1.0, norm2);
    rep.flags["class_ok"] = in_class;
    if (!in_class)
        throw RecoveryError("potential has a quadratic or averaged quartic part; the linear norm is not determined");
    return rep;
}

namespace {

// Monotone quantile q on [0,1] (Legendre coefficients) with prescribed standardized moments.
std::vector<double> fit_quantile(const std::vector<double>& target, int degree)
{
    const int K = static_cast<int>(target.size()) - 1;
    const int d = std::min(degree, K - 1);
    auto rule = quadrature::gauss_legendre(96, 0.0, 1.0);
    const int Q = static_cast<int>(rule.nodes.size());
    Eigen::MatrixXd B(Q, d + 1);
    for (int q = 0; q < Q; ++q) {
        const double x = 2.0 * rule.nodes[q] - 1.0;
        double p0 = 1.0, p1 = x;
        B(q, 0) = 1.0;
        if (d >= 1) B(q, 1) = x;
        for (int j = 2; j <= d; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            B(q, j) = p2;
            p0 = p1;
            p1 = p2;
        }
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
    beta(1) = std::sqrt(3.0);
    auto residual = [&](const Eigen::VectorXd& b, Eigen::MatrixXd* J) {
        Eigen::VectorXd vals = B * b;
        Eigen::VectorXd r(K);
        if (J) J->resize(K, d + 1);
        for (int k = 1; k <= K; ++k) {
            const double w = 1.0 / (1.0 + std::abs(target[k]));
            double acc = 0.0;
            Eigen::VectorXd g = Eigen::VectorXd::Zero(d + 1);
            for (int q = 0; q < Q; ++q) {
                acc += rule.weights[q] * std::pow(vals(q), k);
                if (J) g += rule.weights[q] * k * std::pow(vals(q), k - 1) * B.row(q).transpose();
            }
            r(k - 1) = w * (acc - target[k]);
            if (J) J->row(k - 1) = w * g.transpose();
        }
        return r;
    };
    double lambda = 1e-3;
    Eigen::MatrixXd J;
    Eigen::VectorXd r = residual(beta, &J);
    for (int it = 0; it < 500 && r.norm() > 1e-15; ++it) {
        Eigen::MatrixXd A = J.transpose() * J;
        A.diagonal() += lambda * A.diagonal().cwiseMax(1e-12);
        Eigen::VectorXd step = A.ldlt().solve(-J.transpose() * r);
        Eigen::VectorXd trial = beta + step;
        Eigen::MatrixXd Jt;
        Eigen::VectorXd rt = residual(trial, &Jt);
        if (rt.norm() < r.norm()) {
            beta = trial;
            r = rt;
            J = Jt;
            lambda = std::max(1e-12, lambda / 3.0);
            if (step.norm() < 1e-15 * (1.0 + beta.norm())) break;
        } else {
            lambda *= 4.0;
            if (lambda > 1e12) break;
        }
    }
    return {beta.data(), beta.data() + beta.size()};
}

double legendre_eval(const std::vector<double>& beta, double u)
{
    const double x = 2.0 * u - 1.0;
    double p0 = 1.0, p1 = x, acc = beta[0];
    if (beta.size() > 1) acc += beta[1] * x;
    for (std::size_t j = 2; j < beta.size(); ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        acc += beta[j] * p2;
        p0 = p1;
        p1 = p2;
    }
    return acc;
}

// Pool-adjacent-violators, nondecreasing fit with equal weights.
std::vector<double> isotonic(const std::vector<double>& y)
{
    std::vector<double> val;
    std::vector<int> cnt;
    for (double v : y) {
        val.push_back(v);
        cnt.push_back(1);
        while (val.size() > 1 && val[val.size() - 2] > val.back()) {
            const double merged = (val[val.size() - 2] * cnt[cnt.size() - 2] + val.back() * cnt.back()) /
                                  (cnt[cnt.size() - 2] + cnt.back());
            const int c = cnt[cnt.size() - 2] + cnt.back();
            val.pop_back();
            cnt.pop_back();
            val.back() = merged;
            cnt.back() = c;
        }
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < val.size(); ++i) out.insert(out.end(), cnt[i], val[i]);
    return out;
}

} // namespace

RecoveryReport recover_separable(const InvariantOracle& oracle, double R, int count, const SeparableOptions& opt)
{
    if (oracle.dim != 2) throw DimensionError("separable recovery needs two variables");
    if (!oracle.sphere) throw std::invalid_argument("oracle has no sphere moments");
    if (!(R > 0.0) || count < 4) throw std::invalid_argument("need R > 0 and at least 4 radii");
    if (opt.moments < 4 || opt.nodes < 10) throw std::invalid_argument("need at least 4 moments and 10 nodes");
    const int K = opt.moments;
    std::vector<double> rho(count), lo(count), hi(count), m1(count), pav(count);
    std::vector<std::vector<double>> moments(count, std::vector<double>(K + 1, 1.0));
    for (int i = 0; i < count; ++i) {
        rho[i] = R * R * (i + 1) / count;
        for (int k = 1; k <= K; ++k) moments[i][k] = oracle.sphere(0.5 * rho[i], k);
        const double c = moments[i][1];
        const double var = std::max(0.0, moments[i][2] - c * c);
        const double sd = std::sqrt(var);
        m1[i] = c;
        if (sd <= 1e-14 * std::max(1.0, std::abs(c))) {
            lo[i] = hi[i] = c;
            continue;
        }
        std::vector<double> z(K + 1, 0.0);
        for (int k = 0; k <= K; ++k) {
            double acc = 0.0;
            for (int j = 0; j <= k; ++j) acc += binom(k, j) * moments[i][j] * std::pow(-c, k - j);
            z[k] = acc / std::pow(sd, k);
        }
        auto beta = fit_quantile(z, opt.fit_degree);
        std::vector<double> ys(opt.nodes);
        for (int q = 0; q < opt.nodes; ++q) ys[q] = legendre_eval(beta, (q + 0.5) / opt.nodes);
        auto mono = isotonic(ys);
        double corr = 0.0;
        for (int q = 0; q < opt.nodes; ++q) corr = std::max(corr, std::abs(mono[q] - ys[q]));
        pav[i] = corr * sd;
        lo[i] = c + sd * std::min(legendre_eval(beta, 0.0), mono.front());
        hi[i] = c + sd * std::max(legendre_eval(beta, 1.0), mono.back());
    }
    const double v0 = extrapolate_zero(rho[0], m1[0], rho[1], m1[1], rho[2], m1[2]);

    // phi1 takes the lower profile, phi2(0) = 0
    std::vector<double> grid{0.0}, phi1{v0}, phi2{0.0};
    for (int i = 0; i < count; ++i) {
        grid.push_back(rho[i]);
        phi1.push_back(lo[i]);
        phi2.push_back(hi[i] - v0);
    }

    // forward moments of the split profiles
    auto rule = quadrature::gauss_legendre(64, 0.0, 1.0);
    double gen = 0.0;
    for (int i = 0; i < count; ++i) {
        const double scale = std::max(1e-300, std::max(std::abs(hi[i]), std::abs(lo[i])));
        for (int k = 1; k <= std::min(K, 4); ++k) {
            double acc = 0.0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double u = rule.nodes[q];
                const double psi = interp_cubic(grid, phi1, rho[i] * (1.0 - u)) + interp_cubic(grid, phi2, rho[i] * u);
                acc += rule.weights[q] * std::pow(psi, k);
            }
            gen = std::max(gen, std::abs(acc - moments[i][k]) / std::pow(scale, k));
        }
    }

    RecoveryReport rep;
    rep.method = "separable";
    rep.series["rho"] = grid;
    rep.series["phi1"] = phi1;
    rep.series["phi2"] = phi2;
    rep.residuals["genericity"] = gen;
    rep.residuals["monotone_correction"] = *std::max_element(pav.begin(), pav.end());
    rep.flags["swap_ambiguity"] = true;
    rep.flags["constant_split"] = true;
    rep.flags["generic"] = gen <= opt.genericity_tol;
    if (!rep.flags["generic"])
        throw RecoveryError("forward sphere moments disagree (" + std::to_string(gen) +
                            "); profiles are not monotone on these spheres");
    for (int j = 1; j <= 2; ++j) {
        ProfileSamples ps;
        const auto& phi = j == 1 ? phi1 : phi2;
        for (int i = 0; i < count; ++i) {
            ps.r.push_back(std::sqrt(rho[i]));
            ps.g.push_back(phi[i + 1]);
        }
        auto ab = recover_even_1d(ps);
        std::vector<double> s2;
        for (double s : ab.series["s"]) s2.push_back(s * s);
        rep.series["s"] = s2;
        rep.series[j == 1 ? "f1" : "f2"] = ab.series["V"];
        rep.residuals[j == 1 ? "abel1" : "abel2"] = ab.residuals["forward"];
    }
    return rep;
}

namespace {

// A_0 rows: int exp(-nu H0) W |z1|^{2i} |z2|^{2(m-i)}
struct InductionStep {
    Potential part;
    double condition = 0.0;
    double sigma_min = 0.0;
    double residual = 0.0;
};

InductionStep solve_even_level(const std::vector<cplx>& data, const std::vector<PhasePolynomial>& weights, int m,
                               double nu)
{
    const int rows = static_cast<int>(data.size());
    Eigen::MatrixXd A(rows, m + 1);
    Eigen::VectorXd y(rows);
    for (int r = 0; r < rows; ++r) {
        y(r) = data[r].real();
        for (int i = 0; i <= m; ++i)
            A(r, i) = invariants::gaussian_phase_integral(weights[r] * radial_power(2, 0, i) * radial_power(2, 1, m - i),
                                                         nu / 2.0)
                          .real();
    }
    auto ls = solve_normalized(A, y);
    InductionStep st;
    st.condition = ls.condition;
    st.sigma_min = ls.sigma_min;
    st.residual = ls.residual;
    Potential g(2);
    for (int i = 0; i <= m; ++i) g.add_term({2 * i, 2 * (m - i)}, ls.x(i));
    st.part = averaging::a0_invert(g);
    return st;
}

PhasePolynomial sum_parts(const std::vector<PhasePolynomial>& parts, int upto)
{
    PhasePolynomial s(2);
    for (int i = 1; i <= upto && i < static_cast<int>(parts.size()); ++i) s += parts[i];
    return s;
}

} // namespace

RecoveryReport recover_analytic_2d(const InvariantOracle& oracle, int D, double nu)
{
    if (oracle.dim != 2) throw DimensionError("analytic recovery needs two variables");
    if (D < 2 || D % 2) throw std::invalid_argument("D must be even and at least 2");
    MomentSeries ms(oracle, nu);
    auto hess = recover_hessian(oracle, nu);
    const double a = hess.values[0], b = hess.values[1];
    if (hess.flags["near_degenerate"] || std::abs(b - a) < 1e-6 * std::max(1.0, std::abs(b)))
        throw RecoveryError("quadratic part has equal eigenvalues; the even moment system is rank deficient");
    const double c = hess.residuals["constant"];
    RecoveryReport rep;
    rep.method = "analytic-2d";
    rep.flags["swap_ambiguity"] = true;
    Potential V(2);
    V.add_term({0, 0}, c);
    V.add_term({2, 0}, a);
    V.add_term({0, 2}, b);
    // U[m] is the average of the degree 2m part
    std::vector<PhasePolynomial> U(2, PhasePolynomial(2));
    U[1] = averaging::average_poly(V.homogeneous_part(2));
    const PhasePolynomial Qp = U[1];
    double worst_cond = 1.0, worst_res = 0.0;
    for (int m = 2; m <= D / 2; ++m) {
        const int rows = m + 4;
        std::vector<cplx> data;
        std::vector<PhasePolynomial> weights;
        const PhasePolynomial known_sum = sum_parts(U, m - 1);
        for (int k = 0; k < rows; ++k) {
            const int p = 2 + k + m;
            const cplx coef = ms.centered(c, k + 1, p);
            const PhasePolynomial kn = known_sum.pow(k + 1).homogeneous_part(2 * (k + m));
            const cplx known = invariants::gaussian_phase_integral(kn, nu / 2.0);
            data.push_back((coef - known) / double(k + 1));
            weights.push_back(Qp.pow(k));
        }
        auto st = solve_even_level(data, weights, m, nu);
        worst_cond = std::max(worst_cond, st.condition);
        worst_res = std::max(worst_res, st.residual);
        if (st.sigma_min < 1e-12) throw RecoveryError("even moment system is rank deficient at degree " +
                                                      std::to_string(2 * m));
        V += st.part;
        U.push_back(averaging::average_poly(st.part));
    }
    rep.potential = chop(V, 1e-13);
    rep.values = {a, b};
    rep.condition_numbers["moment_system"] = worst_cond;
    rep.residuals["moment_system"] = worst_res;
    // forward check on the first two moments at a second weight
    double fwd = 0.0;
    auto check = classical_oracle(*rep.potential);
    for (int m = 1; m <= 3; ++m) {
        const double want = oracle.first(1.3 * nu, m).real(), got = check.first(1.3 * nu, m).real();
        fwd = std::max(fwd, std::abs(want - got) / std::max(1.0, std::abs(want)));
    }
    rep.residuals["forward"] = fwd;
    return rep;
}

RecoveryReport recover_semiclassical_2d(const InvariantOracle& oracle, int D, int K)
{
    if (!oracle.semiclassical) throw std::invalid_argument("oracle has no semiclassical invariants");
    if (K < 1) throw std::invalid_argument("K must be at least 1");
    auto base = recover_analytic_2d(oracle, D);
    const Potential V0 = *base.potential;
    const double c = V0.coeff({0, 0});
    const double a = base.values[0], b = base.values[1];
    const bool quadratic = V0.degree() <= 2;
    RecoveryReport rep;
    rep.method = "semiclassical-2d";
    rep.flags["swap_ambiguity"] = true;
    rep.flags["odd_part_invisible"] = true;
    rep.condition_numbers = base.condition_numbers;
    SemiclassicalPotential out;
    out.orders.push_back(V0);
    double worst_cond = 1.0, worst_res = 0.0;

    std::vector<std::pair<int, int>> cols;
    for (int s = 0; s <= D / 2; ++s)
        for (int i = 0; i <= s; ++i) cols.emplace_back(i, s - i);

    for (int k = 1; k <= K; ++k) {
        Potential Vk(2);
        if (quadratic) {
            // int exp(-nu H0 - sigma V0^ave) Vk^ave = e^{-sigma c} int exp(-mu1 h1 - mu2 h2) Vk^ave
            const double amax = std::max({std::abs(a), std::abs(b), 1e-300});
            std::vector<std::array<double, 3>> grid;
            for (double nu : {0.7, 1.0, 1.4, 2.0})
                for (double s : {-0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4}) grid.push_back({nu, s * nu / amax, 0});
            Eigen::MatrixXd A(grid.size(), cols.size());
            Eigen::VectorXd y(grid.size());
            for (std::size_t r = 0; r < grid.size(); ++r) {
                const double nu = grid[r][0], sg = grid[r][1];
                const double mu1 = nu + sg * a, mu2 = nu + sg * b;
                if (!(mu1 > 0.0 && mu2 > 0.0)) throw RecoveryError("Laplace grid leaves the positive wedge");
                cplx acc = 0.0, term_scale = 1.0;
                for (int l = 0; l < 120; ++l) {
                    if (l > 0) term_scale *= -sg / l;
                    const cplx term = term_scale * oracle.semiclassical(nu, l, k);
                    acc += term;
                    if (l > 4 && std::abs(term) < 1e-17 * std::abs(acc)) break;
                }
                y(r) = (acc * std::exp(sg * c)).real();
                for (std::size_t j = 0; j < cols.size(); ++j) {
                    const auto [i1, i2] = cols[j];
                    A(r, j) = kPi * factorial(i1) * std::pow(2.0 / mu1, i1 + 1) * kPi * factorial(i2) *
                              std::pow(2.0 / mu2, i2 + 1);
                }
            }
            auto ls = solve_normalized(A, y);
            worst_cond = std::max(worst_cond, ls.condition);
            worst_res = std::max(worst_res, ls.residual);
            if (ls.sigma_min < 1e-12) throw RecoveryError("Laplace system is rank deficient");
            Potential g(2);
            for (std::size_t j = 0; j < cols.size(); ++j) g.add_term({2 * cols[j].first, 2 * cols[j].second}, ls.x(j));
            Vk = averaging::a0_invert(g);
        } else {
            // induction on the degree through the t-expansion
            const double nu = 1.0;
            std::map<std::pair<int, int>, std::vector<cplx>> cache;
            auto series = [&](int l, int kk, int p) -> cplx {
                auto key = std::make_pair(l, kk);
                auto it = cache.find(key);
                if (it == cache.end()) {
                    std::vector<cplx> v;
                    if (oracle.semiclassical_series)
                        v = oracle.semiclassical_series(nu, l, kk);
                    else
                        v = taylor_coefficients([&](cplx t) { return oracle.semiclassical(nu / t, l, kk); },
                                                kCirclePoints, kCirclePoints);
                    it = cache.emplace(key, std::move(v)).first;
                }
                return p < static_cast<int>(it->second.size()) ? it->second[p] : 0.0;
            };
            const PhasePolynomial W0 = averaging::average_poly(V0) - PhasePolynomial::constant(2, c);
            const PhasePolynomial Qp = averaging::average_poly(V0.homogeneous_part(2));
            std::vector<PhasePolynomial> Y;
            for (int m = 0; m <= D / 2; ++m) {
                const int rows = m + 4;
                std::vector<cplx> data;
                std::vector<PhasePolynomial> weights;
                for (int l = 0; l < rows; ++l) {
                    const int p = 2 + l + m;
                    cplx coef = 0.0;
                    for (int j = 0; j <= l; ++j)
                        coef += binom(l, j) * std::pow(-c, l - j) * series(j, k, p);
                    const PhasePolynomial Wl = W0.pow(l);
                    PhasePolynomial kn(2);
                    for (int q = 0; q < m; ++q) kn += Wl.homogeneous_part(2 * (l + m - q)) * Y[q];
                    data.push_back(coef - invariants::gaussian_phase_integral(kn, nu / 2.0));
                    weights.push_back(Qp.pow(l));
                }
                auto st = solve_even_level(data, weights, m, nu);
                worst_cond = std::max(worst_cond, st.condition);
                worst_res = std::max(worst_res, st.residual);
                if (st.sigma_min < 1e-12) throw RecoveryError("induction system is rank deficient");
                Vk += st.part;
                Y.push_back(averaging::average_poly(st.part));
            }
        }
        out.orders.push_back(chop(Vk, 1e-13));
    }
    rep.semiclassical = out;
    rep.potential = V0;
    rep.values = {a, b};
    rep.condition_numbers["order_systems"] = worst_cond;
    rep.residuals["order_systems"] = worst_res;
    return rep;
}

RigidityResult rigidity_svd(double a, double b, int D)
{
    if (D < 0 || D % 2) throw std::invalid_argument("D must be even and nonnegative");
    std::vector<std::pair<int, int>> cols;
    for (int s = 0; s <= D / 2; ++s)
        for (int i = 0; i <= s; ++i) cols.emplace_back(i, s - i);
    const double amax = std::max({std::abs(a), std::abs(b), 1e-300});
    std::vector<std::pair<double, double>> rows;
    for (int iv = 0; iv < 6; ++iv) {
        const double nu = 0.5 * std::pow(4.0, iv / 5.0);
        for (int is = 0; is < 9; ++is) {
            const double s = -0.4 + 0.1 * is;
            rows.emplace_back(nu + s * nu * a / amax, nu + s * nu * b / amax);
        }
    }
    Eigen::MatrixXd A(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto [i1, i2] = cols[j];
            const auto [mu1, mu2] = rows[r];
            A(r, j) = averaging::gamma_coeff(i1, 0) * averaging::gamma_coeff(i2, 0) * kPi * factorial(i1) *
                      std::pow(2.0 / mu1, i1 + 1) * kPi * factorial(i2) * std::pow(2.0 / mu2, i2 + 1);
        }
    for (int j = 0; j < A.cols(); ++j) A.col(j) /= A.col(j).norm();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    RigidityResult res;
    res.sigma_max = svd.singularValues()(0);
    res.sigma_min = svd.singularValues()(svd.singularValues().size() - 1);
    res.columns = static_cast<int>(A.cols());
    res.rows = static_cast<int>(A.rows());
    return res;
}

} // namespace oscbands::inverse
