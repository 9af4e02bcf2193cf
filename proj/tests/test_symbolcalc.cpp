#include "oscbands/averaging.hpp"
#include "oscbands/symbolcalc.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace oscbands;
using namespace oscbands::symbolcalc;
using testutil::random_phase;
using testutil::random_potential;

namespace {

const cplx I(0.0, 1.0);

PhasePolynomial X(int n = 1, int i = 0) { return PhasePolynomial::x(n, i); }
PhasePolynomial Pp(int n = 1, int i = 0) { return PhasePolynomial::p(n, i); }
PhasePolynomial C(cplx c, int n = 1) { return PhasePolynomial::constant(n, c); }

} // namespace

TEST_CASE("poisson bracket examples")
{
    CHECK(poisson_bracket(X(), Pp()).approx_equal(C(1.0), 1e-15));
    const auto H0 = PhasePolynomial::H0(2);
    CHECK(poisson_bracket(H0, H0).is_zero());
    CHECK(poisson_bracket(X() * X(), Pp() * Pp()).approx_equal(4.0 * X() * Pp(), 1e-15));
    CHECK_THROWS(poisson_bracket(X(1), X(2)));
}

TEST_CASE("poisson bracket antisymmetry and Jacobi identity")
{
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 1 + trial % 2;
        auto f = random_phase(n, 3), g = random_phase(n, 3), h = random_phase(n, 3);
        CHECK((poisson_bracket(f, g) + poisson_bracket(g, f)).max_abs() <= 1e-12);
        auto jac = poisson_bracket(f, poisson_bracket(g, h)) + poisson_bracket(g, poisson_bracket(h, f)) +
                   poisson_bracket(h, poisson_bracket(f, g));
        CHECK(jac.max_abs() <= 1e-12);
    }
}

TEST_CASE("higher brackets")
{
    auto a = random_phase(2, 3), b = random_phase(2, 4);
    CHECK(higher_bracket(a, b, 0).approx_equal(a * b, 1e-12));
    // k = 1 is minus the Poisson bracket with this sign convention
    CHECK((higher_bracket(a, b, 1) + poisson_bracket(a, b)).max_abs() <= 1e-12);
    const auto H0 = PhasePolynomial::H0(2);
    for (int k = 3; k <= 5; ++k) CHECK(higher_bracket(H0, b, k).is_zero());
    // (1/2!) d_x^2 (x^2) d_p^2 (p^2) = 2 under the sign rule of the bidifferential sum
    CHECK(higher_bracket(X() * X(), Pp() * Pp(), 2).approx_equal(C(2.0), 1e-15));
}

TEST_CASE("moyal terms")
{
    CHECK(moyal_term(X(), Pp(), 0).approx_equal(X() * Pp(), 1e-15));
    // x#p - p#x = i hbar
    auto comm = moyal_term(X(), Pp(), 1) - moyal_term(Pp(), X(), 1);
    CHECK(comm.approx_equal(C(I), 1e-15));

    // same commutator from ladder matrices, away from the truncation corner
    const int N = 12;
    const double h = 0.3;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(N, N);
    for (int k = 1; k < N; ++k) a(k - 1, k) = std::sqrt(double(k));
    Eigen::MatrixXcd x = std::sqrt(h / 2) * (a + a.adjoint());
    Eigen::MatrixXcd p = I * std::sqrt(h / 2) * (a.adjoint() - a);
    Eigen::MatrixXcd c = x * p - p * x;
    for (int k = 0; k + 1 < N; ++k) CHECK(std::abs(c(k, k) - comm.coeff({0}, {0}) * h) <= 1e-14);

    CHECK_THROWS(moyal_term(ExpPolySymbol(C(1.0), I), ExpPolySymbol(C(1.0), 2.0 * I), 1));
}

TEST_CASE("B2 of H0 against exp(itH0)")
{
    for (int n = 1; n <= 2; ++n)
        for (double t : {0.3, 1.7}) {
            const auto H0 = PhasePolynomial::H0(n);
            ExpPolySymbol u0(C(1.0, n), I * t);
            auto b2 = moyal_term(H0, u0, 2);
            ExpPolySymbol expect((0.25 * t * t) * H0 - C(0.25 * I * double(n) * t, n), I * t);
            CHECK(b2.approx_equal(expect, 1e-12));
        }
}

TEST_CASE("flow pullback")
{
    const double s = 0.37;
    const double c = std::cos(s), sn = std::sin(s);
    CHECK(flow_pullback(X()).at(s).approx_equal(c * X() + sn * Pp(), 1e-14));
    auto h = flow_pullback(PhasePolynomial::H0(2));
    for (const auto& [key, P] : h.terms()) CHECK((key.second == 0 || P.is_zero()));
    auto x2 = flow_pullback(X() * X()).at(s);
    auto expect = 0.5 * (X() * X() + Pp() * Pp()) + (0.5 * std::cos(2 * s)) * (X() * X() - Pp() * Pp()) +
                  std::sin(2 * s) * X() * Pp();
    CHECK(x2.approx_equal(expect, 1e-14));
    for (int trial = 0; trial < 5; ++trial) {
        auto f = random_phase(2, 4);
        CHECK(flow_pullback(f).at_2pi().approx_equal(f, 1e-12));
        CHECK(flow_pullback(f).at(0.0).approx_equal(f, 1e-12));
    }
}

TEST_CASE("transport symbols")
{
    SUBCASE("linear potential")
    {
        auto tr = transport_symbols(Potential::monomial(1, {1}, 1.0), 2);
        CHECK(tr.w[0].max_abs() <= 1e-14);
        CHECK(tr.w[1].max_abs() <= 1e-14);
        CHECK(tr.w[2].approx_equal(C(-0.5), 1e-13));
    }
    SUBCASE("odd potential has vanishing w0")
    {
        Potential V(2);
        V.add_term({3, 0}, 1.0);
        V.add_term({1, 2}, -0.4);
        V.add_term({0, 1}, 2.0);
        CHECK(transport_symbols(V, 0).w[0].max_abs() <= 1e-14);
    }
    SUBCASE("quadratic potential")
    {
        auto tr = transport_symbols(Potential::monomial(1, {2}, 1.0), 0);
        CHECK(tr.w[0].approx_equal(0.5 * (X() * X() + Pp() * Pp()), 1e-13));
    }
    SUBCASE("r0 solves its transport equation")
    {
        for (int trial = 0; trial < 4; ++trial) {
            const int n = 1 + trial % 2;
            auto V = random_potential(n, 4);
            auto tr = transport_symbols(V, 1);
            const auto Hn = PhasePolynomial::H0(n);
            TimeSymbol lhs = tr.r[0].d_dt() - tr.r[0].map([&](const PhasePolynomial& q) { return poisson_bracket(Hn, q); });
            lhs += TimeSymbol::constant(I * V.to_phase());
            CHECK(lhs.max_abs() <= 1e-12);
            CHECK(tr.r[1].at_2pi().approx_equal(0.5 * tr.r[0].at_2pi() * tr.r[0].at_2pi(), 1e-11));
        }
    }
    SUBCASE("w1 vanishes and w2 is the second average")
    {
        for (int trial = 0; trial < 4; ++trial) {
            const int n = 1 + trial % 2;
            auto V = random_potential(n, n == 1 ? 6 : 4);
            auto tr = transport_symbols(V, 2);
            CHECK(tr.w[0].approx_equal(averaging::average_poly(V), 1e-12));
            CHECK(tr.w[1].max_abs() <= 1e-11);
            CHECK(tr.w[2].approx_equal(averaging::delta_average(V), 1e-12));
        }
    }
    SUBCASE("errors")
    {
        CHECK_THROWS(transport_symbols(Potential::monomial(1, {2}, 1.0), kDefaultTransportOrder + 1));
        CHECK_THROWS(transport_symbols(Potential::from_callable(1, [](const std::vector<double>& x) { return x[0]; }), 1));
    }
}

TEST_CASE("u2 transport identity")
{
    // u2 = i e^{itH0} (t^3 H0/12 + n t^2/(8i) + t s2) with s2 constant in t
    for (int n = 1; n <= 2; ++n) {
        auto V = random_potential(n, 2, 4);
        const auto s2 = V.to_phase() - averaging::average_poly(V);
        const auto H0 = PhasePolynomial::H0(n);
        for (double t : {0.4, 1.3}) {
            auto u2_pre = [&](double tt) {
                return I * ((tt * tt * tt / 12.0) * H0 + C(double(n) * tt * tt / (8.0 * I), n) + tt * s2);
            };
            // d/dt of prefactor e^{itH0}: i H0 (.) + derivative of the bracket
            auto dpre = I * ((t * t / 4.0) * H0 + C(double(n) * t / (4.0 * I), n) + s2);
            ExpPolySymbol u2(u2_pre(t), I * t);
            ExpPolySymbol u2dot(dpre + I * H0 * u2_pre(t), I * t);
            ExpPolySymbol u0(C(1.0, n), I * t);
            ExpPolySymbol rhs = moyal_term(H0, u0, 2);
            rhs += H0 * u2;
            rhs += u0 * s2;
            CHECK((u2dot * cplx(-I)).approx_equal(rhs, 1e-12));
        }
    }
}

TEST_CASE("moyal power expansion")
{
    auto w0 = random_phase(1, 2), w2 = random_phase(1, 2);
    auto [a, b] = moyal_power_expansion(w0, w2, 0);
    CHECK(a.approx_equal(w0, 1e-14));
    CHECK(b.approx_equal(w2, 1e-14));

    auto c = C(cplx(0.7, 0.2));
    auto [ca, cb] = moyal_power_expansion(c, w2, 3);
    CHECK(ca.approx_equal(c.pow(4), 1e-13));
    CHECK(cb.approx_equal(4.0 * c.pow(3) * w2, 1e-13));

    for (int l = 1; l <= 3; ++l) {
        Series w{w0, PhasePolynomial(1), w2};
        Series prod = w;
        for (int k = 0; k < l; ++k) prod = moyal_series_product(prod, w, 2);
        auto [e0, e2] = moyal_power_expansion(w0, w2, l);
        CHECK(e0.approx_equal(prod[0], 1e-12));
        CHECK(e2.approx_equal(prod[2], 1e-12));
    }
}

TEST_CASE("z basis round trip")
{
    auto f = random_phase(2, 4);
    CHECK(from_z_basis(to_z_basis(f)).approx_equal(f, 1e-12));
}
