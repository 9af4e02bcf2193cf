#include "oscbands/averaging.hpp"
#include "oscbands/invariants.hpp"
#include "oscbands/quadrature.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace oscbands;
using namespace oscbands::invariants;
using std::numbers::pi;

namespace {

Potential mono(std::vector<int> a, double c) { return Potential::monomial(static_cast<int>(a.size()), a, c); }
const Poly1 kId{{0.0, 1.0}};
const Poly1 kOne{{1.0}};

double fact(int k) { return std::tgamma(k + 1.0); }

// int_{R^2} exp(-mu r^2 / 2) r^{2a} dx dp = pi a! (2/mu)^{a+1}
double radial_moment(int a, double mu) { return pi * fact(a) * std::pow(2.0 / mu, a + 1); }

} // namespace

TEST_CASE("gaussian phase integrals")
{
    const double mu = 1.3;
    CHECK(std::abs(gaussian_phase_integral(PhasePolynomial::constant(2, 1.0), mu).real() - pi * pi / (mu * mu)) <= 1e-13);
    CHECK(std::abs(gaussian_phase_integral(PhasePolynomial::abs_z_sq(2, 0), mu).real() - pi * pi / std::pow(mu, 3)) <=
          1e-13);
    auto odd = PhasePolynomial::x(2, 0) * PhasePolynomial::p(2, 1) * PhasePolynomial::p(2, 1);
    CHECK(std::abs(gaussian_phase_integral(odd, mu)) <= 1e-15);

    // against a Gauss-Legendre product rule on a box wide enough for the gaussian
    const double L = 9.0 / std::sqrt(mu);
    const auto r = quadrature::gauss_legendre(120, -L, L);
    for (int trial = 0; trial < 4; ++trial) {
        auto P = testutil::random_phase(1, 6);
        cplx q = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i)
            for (std::size_t j = 0; j < r.nodes.size(); ++j) {
                const double x = r.nodes[i], p = r.nodes[j];
                q += r.weights[i] * r.weights[j] * std::exp(-mu * (x * x + p * p)) * P.evaluate(std::vector<double>{x}, std::vector<double>{p});
            }
        CHECK(std::abs(gaussian_phase_integral(P, mu) - q) <= 1e-10 * std::max(1.0, std::abs(q)));
    }
    // linear and positive on even monomials
    auto a = PhasePolynomial::x(1, 0).pow(4), b = PhasePolynomial::p(1, 0).pow(2);
    CHECK(gaussian_phase_integral(a, mu).real() > 0.0);
    CHECK(std::abs(gaussian_phase_integral(2.0 * a + b, mu) -
                   (2.0 * gaussian_phase_integral(a, mu) + gaussian_phase_integral(b, mu))) <= 1e-13);
}

TEST_CASE("sphere invariants")
{
    const double E = 1.7;
    CHECK(std::abs(sphere_invariant(mono({2}, 1.0), E, kId) - E) <= 1e-13);
    CHECK(std::abs(sphere_invariant(mono({2, 0}, 1.0), E, kId) - E / 2) <= 1e-13);
    CHECK(std::abs(sphere_invariant(mono({3, 1}, 1.0), E, kOne) - 1.0) <= 1e-13);
    Potential V(2);
    V.add_term({4, 0}, 1.0);
    V.add_term({0, 2}, 1.0);
    const Poly1 sq{{0, 0, 1}};
    const double exact = sphere_invariant(V, E, sq);
    const double quad = sphere_invariant(V, E, [](double s) { return s * s; });
    CHECK(std::abs(exact - quad) <= 1e-9 * std::abs(exact));
}

TEST_CASE("first band invariant")
{
    const double mu = 1.0;
    auto w = WeightSpec::gaussian(mu);
    CHECK(std::abs(band_invariant_first(mono({2}, 1.0), w, kId) - 2 * pi / (mu * mu)) <= 1e-12);
    CHECK(std::abs(band_invariant_first(mono({3}, 1.0) + mono({1}, 2.0), w, kId)) <= 1e-14);
    const double mass = std::pow(2 * pi / mu, 2);
    CHECK(std::abs(band_invariant_first(mono({2, 2}, 1.0), w, kOne) - mass) <= 1e-12);
    // closed form against quadrature in a general phi
    Potential V = mono({2, 0}, 1.0) + mono({0, 2}, 3.0);
    CHECK(std::abs(band_invariant_first(V, w, kId) - band_invariant_first(V, w, [](double s) { return s; })) <= 1e-8);
    CHECK_THROWS(band_invariant_first(mono({2}, 1.0), w, [](double s) { return std::exp(s * s); }));
    CHECK_THROWS(WeightSpec::gaussian(-1.0).validate());
    CHECK_THROWS(WeightSpec::bump(1.0, 0.0).validate());
}

TEST_CASE("second invariant")
{
    const double mu = 1.0;
    auto w = WeightSpec::gaussian(mu);
    auto lin = second_invariant(mono({1}, 1.0), w, 0);
    CHECK(std::abs(lin.total() + pi / mu) <= 1e-12);
    CHECK(std::abs(lin.delta_term + pi / mu) <= 1e-12);
    auto c = second_invariant(mono({0}, 0.7), w, 0);
    CHECK(c.delta_term == 0.0);
    auto a = second_invariant_analytic(mono({2}, 1.0), cplx(mu, 0.0), 0);
    CHECK(std::abs(a.real() - second_invariant(mono({2}, 1.0), w, 0).total()) <= 1e-12);
}

TEST_CASE("odd invariant")
{
    const double mu = 1.3;
    auto w = WeightSpec::gaussian(mu);
    CHECK(std::abs(odd_invariant(mono({1}, 1.0), w, kId) + pi / mu) <= 1e-12);
    CHECK(std::abs(odd_invariant(mono({3}, 1.0), w, kOne) - 2 * pi / mu) <= 1e-12);
    CHECK_THROWS(odd_invariant(mono({2}, 1.0), w, kId));

    // V = x^3: V^Delta(r) = -(9 r^4 / 4 pi) int int cos^2 s cos^2 u sin(u - s), radial integral by hand
    const auto o = quadrature::gauss_legendre(60, 0.0, 2 * pi);
    double K = 0.0;
    for (std::size_t i = 0; i < o.nodes.size(); ++i) {
        const double u = o.nodes[i];
        const auto in = quadrature::gauss_legendre(60, 0.0, u);
        double acc = 0.0;
        for (std::size_t j = 0; j < in.nodes.size(); ++j) {
            const double s = in.nodes[j];
            acc += in.weights[j] * std::pow(std::cos(s), 2) * std::pow(std::cos(u), 2) * std::sin(u - s);
        }
        K += o.weights[i] * acc;
    }
    const double expect = -9.0 / (4 * pi) * K * radial_moment(2, mu);
    CHECK(std::abs(odd_invariant(mono({3}, 1.0), w, kId) - expect) <= 1e-10 * std::abs(expect));
}

TEST_CASE("odd kernel integrals")
{
    const double mu = 1.7;
    CHECK(std::abs(odd_kernel_integral(1, 3, mu) + 12 * pi * pi / (mu * mu)) <= 1e-11);
    CHECK(std::abs(odd_kernel_integral(1, 1, mu) + 2 * pi * pi / mu) <= 1e-12);
    CHECK(odd_kernel_integral(3, 3, mu) != 0.0);
    CHECK_THROWS(odd_kernel_integral(2, 3, mu));
    for (int l : {1, 3, 5, 7}) {
        const double a = odd_kernel_integral(1, l, 0.8) * std::pow(0.8, (l + 1) / 2.0);
        const double b = odd_kernel_integral(1, l, 2.5) * std::pow(2.5, (l + 1) / 2.0);
        CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    }
    CHECK(std::abs(odd_kernel_integral(3, 5, cplx(mu, 0.0)).real() - odd_kernel_integral(3, 5, mu)) <= 1e-10);
}

TEST_CASE("trace moments")
{
    const double h = 0.05, mu = 1.0;
    auto w = WeightSpec::gaussian(mu);
    const int J = oscillator::basis_for_level(static_cast<int>(w.support_max() / h) + 2, 1);
    auto b = oscillator::make_basis(1, h, J);
    auto zero = oscillator::make_clusters(oscillator::compute_spectrum(Potential(1), b));
    CHECK(std::abs(trace_moments(zero, w, [](double s) { return s; })) <= 1e-12);

    b.refine = true;
    auto lin = oscillator::make_clusters(oscillator::compute_spectrum(mono({1}, 1.0), b));
    // 2 pi hbar (-hbar^2/2) sum_j exp(-mu hbar (j + 1/2)), up to the exp(-30) tail
    const double exact = -pi * h * h * h / (2 * std::sinh(mu * h / 2));
    CHECK(std::abs(trace_moments(lin, w, [](double s) { return s; }) - exact) <= 1e-10 * std::abs(exact));

    auto small = oscillator::make_clusters(oscillator::compute_spectrum(mono({1}, 1.0), oscillator::make_basis(1, h, 40)));
    CHECK_THROWS(trace_moments(small, w, [](double s) { return s; }));
}

TEST_CASE("expansion fit")
{
    std::vector<double> hs = geometric_grid(0.1, 0.8, 8), ys;
    for (double h : hs) ys.push_back(3.0 + 5.0 * h * h);
    auto f = expansion_fit(hs, ys, {0, 1, 2});
    CHECK(std::abs(f.coefficient(0) - 3.0) <= 1e-10);
    CHECK(std::abs(f.coefficient(1)) <= 1e-10);
    CHECK(std::abs(f.coefficient(2) - 5.0) <= 1e-10);
    CHECK_THROWS(f.coefficient(3));
    CHECK_THROWS(expansion_fit({0.1, 0.09, 0.08, 0.07}, {1, 1, 1, 1}));
    CHECK_THROWS(expansion_fit(geometric_grid(0.1, 0.999, 8), std::vector<double>(8, 1.0), {0, 1, 2, 3, 4, 5, 6}));
    for (std::size_t i = 1; i < hs.size(); ++i) CHECK(hs[i] > hs[i - 1]);
}

TEST_CASE("trace series of x^2 tends to the first invariant")
{
    auto w = WeightSpec::gaussian(1.0);
    auto ts = trace_series(mono({2}, 1.0), w, [](double s) { return s; }, geometric_grid(0.2, 0.8, 6));
    auto f = expansion_fit(ts.hbars, ts.values, {0, 1, 2});
    const double c0 = band_invariant_first(mono({2}, 1.0), w, kId);
    CHECK(std::abs(f.coefficient(0) - c0) <= 0.01 * std::abs(c0));
    CHECK(std::abs(f.coefficient(1)) <= 0.01 * std::abs(c0));
}

TEST_CASE("szego gaps")
{
    for (const auto& s : szego_compare(Potential(1), 1.0, [](double x) { return x; }, {10, 20})) CHECK(s.gap <= 1e-12);
    auto g = szego_compare(mono({2}, 1.0), 1.0, [](double x) { return x; }, {10, 20, 40});
    CHECK(g[1].gap < g[0].gap);
    CHECK(g[2].gap < g[1].gap);
    CHECK_THROWS(szego_compare(mono({2}, 1.0), -1.0, [](double x) { return x; }, {10}));
    CHECK_THROWS(szego_compare(mono({2}, 1.0), 1.0, [](double x) { return x; }, {10}, true));
}

TEST_CASE("semiclassical invariant")
{
    const double mu = 1.1;
    auto w = WeightSpec::gaussian(mu);
    SemiclassicalPotential zero0{{Potential(2), mono({2, 2}, 1.0)}};
    CHECK(std::abs(semiclassical_invariant(zero0, w, 2, 1)) <= 1e-14);
    CHECK(std::abs(semiclassical_invariant(zero0, w, 0, 1) - band_invariant_first(mono({2, 2}, 1.0), w, kId)) <= 1e-12);

    // V0 = x1^2 + 3 x2^2, V1 = x1^4: V0^ave = |z1|^2/2 + 3|z2|^2/2, V1^ave = 3|z1|^4/8
    SemiclassicalPotential Vs{{mono({2, 0}, 1.0) + mono({0, 2}, 3.0), mono({4, 0}, 1.0)}};
    const double expect =
        0.375 * (0.5 * radial_moment(3, mu) * radial_moment(0, mu) + 1.5 * radial_moment(2, mu) * radial_moment(1, mu));
    CHECK(std::abs(semiclassical_invariant(Vs, w, 1, 1) - expect) <= 1e-12 * expect);

    SemiclassicalPotential odd{{mono({2, 0}, 1.0), mono({3, 0}, 1.0) + mono({1, 2}, 0.5)}};
    CHECK(std::abs(semiclassical_invariant(odd, w, 1, 1)) <= 1e-14);
    CHECK_THROWS(semiclassical_invariant(Vs, w, 1, 0));
}
