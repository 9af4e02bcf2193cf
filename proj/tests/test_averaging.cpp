#include "oscbands/averaging.hpp"
#include "oscbands/quadrature.hpp"
#include "oscbands/symbolcalc.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

using namespace oscbands;
using namespace oscbands::averaging;
using testutil::random_point;
using testutil::random_potential;

namespace {

PhasePolynomial X(int n = 1, int i = 0) { return PhasePolynomial::x(n, i); }
PhasePolynomial Pp(int n = 1, int i = 0) { return PhasePolynomial::p(n, i); }

Callable as_callable(const Potential& V)
{
    return [V](const std::vector<double>& x) { return V.evaluate(x); };
}

// -(1/4pi) int_0^{2pi} int_0^u {V o phi_s, V o phi_u} ds du at (x, p), n = 1, by Gauss-Legendre.
// The bracket of the two pullbacks is V'(X_s) V'(X_u) sin(u - s), X_s = x cos s + p sin s.
double delta_by_quadrature(const Poly1& V, double x, double p)
{
    const Poly1 dV = V.derivative();
    auto Xs = [&](double s) { return x * std::cos(s) + p * std::sin(s); };
    const auto outer = quadrature::gauss_legendre(60, 0.0, 2 * std::numbers::pi);
    double acc = 0.0;
    for (std::size_t a = 0; a < outer.nodes.size(); ++a) {
        const double u = outer.nodes[a];
        const auto inner = quadrature::gauss_legendre(60, 0.0, u);
        double in = 0.0;
        for (std::size_t b = 0; b < inner.nodes.size(); ++b) {
            const double s = inner.nodes[b];
            in += inner.weights[b] * dV(Xs(s)) * dV(Xs(u)) * std::sin(u - s);
        }
        acc += outer.weights[a] * in;
    }
    return -acc / (4 * std::numbers::pi);
}

} // namespace

TEST_CASE("average_poly examples")
{
    CHECK(average_poly(Potential::monomial(1, {2}, 1.0)).approx_equal(0.5 * (X() * X() + Pp() * Pp()), 1e-15));
    CHECK(average_poly(Potential::monomial(1, {3}, 1.0)).is_zero());
    // |z1|^2 |z2|^2 = z1 zbar1 z2 zbar2 carries coefficient 1/4
    auto z = symbolcalc::to_z_basis(average_poly(Potential::monomial(2, {2, 2}, 1.0)));
    CHECK(std::abs(z.coeff({1, 1}, {1, 1}) - 0.25) <= 1e-15);
}

TEST_CASE("average_numeric")
{
    auto x2 = as_callable(Potential::monomial(1, {2}, 1.0));
    CHECK(std::abs(average_numeric(x2, {1.0}, {0.0}, 64) - 0.5) <= 1e-15);
    auto odd = as_callable(Potential::monomial(1, {3}, 1.0) + Potential::monomial(1, {1}, -2.0));
    CHECK(std::abs(average_numeric(odd, {0.7}, {-1.1}, 32)) <= 1e-14);
    CHECK_THROWS(average_numeric(x2, {1.0}, {0.0}, 8));
    auto bad = [](const std::vector<double>& x) { return std::sqrt(x[0]); }; // NaN on half the circle
    CHECK_THROWS(average_numeric(bad, {1.0}, {0.0}, 16));

    // 1/(1+x^2) averages to 1/sqrt(1+r^2): decay like 1/|z|, not 1/|z|^2
    auto lorentz = [](const std::vector<double>& x) { return 1.0 / (1.0 + x[0] * x[0]); };
    for (double r : {1e2, 1e3}) {
        auto a = average_numeric_converged(lorentz, {r}, {0.0}, 16, 1e-10, 1 << 20);
        CHECK(std::abs(a.value * r - 1.0) <= 1e-3);
        CHECK(std::abs(a.value - 1.0 / std::sqrt(1 + r * r)) <= 1e-9 / r);
    }
}

TEST_CASE("average_poly agrees with the trapezoid average")
{
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 1 + trial % 2;
        auto V = random_potential(n, 8);
        auto A = average_poly(V);
        for (int k = 0; k < 10; ++k) {
            auto x = random_point(n), p = random_point(n);
            const double num = average_numeric(as_callable(V), x, p, default_nodes(V.degree()));
            CHECK(std::abs(A.evaluate(x, p).real() - num) <= 1e-12);
        }
    }
}

TEST_CASE("delta_average")
{
    CHECK(delta_average(Potential::monomial(1, {1}, 1.0)).approx_equal(PhasePolynomial::constant(1, -0.5), 1e-14));
    CHECK(delta_average(Potential::monomial(2, {0, 0}, 3.0)).is_zero());
    for (int k = 0; k < 4; ++k) {
        const double x = testutil::uniform(), p = testutil::uniform();
        const double exact = delta_average(Potential::monomial(1, {2}, 1.0)).evaluate(std::vector<double>{x}, std::vector<double>{p}).real();
        CHECK(std::abs(exact - delta_by_quadrature(Poly1{{0, 0, 1}}, x, p)) <= 1e-12);
        Potential V(1);
        V.add_term({3}, 1.0);
        V.add_term({1}, -0.5);
        CHECK(std::abs(delta_average(V).evaluate(std::vector<double>{x}, std::vector<double>{p}).real() - delta_by_quadrature(Poly1{{0, -0.5, 0, 1}}, x, p)) <=
              1e-12);
    }
}

TEST_CASE("b_r_apply")
{
    CHECK(b_r_apply(Poly1{{0, 0, 1}}, 0).c[2] == doctest::Approx(0.5).epsilon(1e-15));
    auto z = b_r_apply(Poly1{{0, 0, 1}}, 2);
    for (double c : z.c) CHECK(c == 0.0);
    CHECK(b_r_apply(Poly1{{0, 0, 0, 0, 1}}, 1).c[4] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS(b_r_apply(Poly1{{0, 1}}, 0));
}

TEST_CASE("gamma coefficients")
{
    CHECK(gamma_coeff(1, 0) == 0.5);
    CHECK(gamma_coeff(3, 4) == 0.0);
    CHECK(gamma_coeff(3, -4) == 0.0);
    const double g = gamma_coeff(10, 0), a = gamma_asymptotic(10, 0);
    // 4^-10 C(20,10) = 184756 / 1048576
    CHECK(std::abs(g - 184756.0 / 1048576.0) <= 1e-16);
    CHECK(std::abs(g / a - 1.0) <= 1.0 / 40.0);
}

TEST_CASE("r_n_decompose")
{
    auto m = r_n_decompose(Potential::monomial(2, {2, 2}, 1.0));
    CHECK(m.at(0).approx_equal(Potential::monomial(2, {2, 2}, 0.25), 1e-15));
    CHECK(m.at(1).approx_equal(Potential::monomial(2, {2, 2}, 1.0 / 16), 1e-15));
    CHECK(m.at(-1).approx_equal(m.at(1), 1e-15));

    auto q = r_n_decompose(Potential::monomial(2, {2, 0}, 1.0) + Potential::monomial(2, {0, 2}, 1.0));
    for (const auto& [r, A] : q)
        if (r != 0) CHECK(A.approx_equal(Potential(2), 1e-15));
    CHECK_THROWS(r_n_decompose(Potential::monomial(2, {1, 2}, 1.0)));
    CHECK_THROWS(r_n_decompose(Potential::monomial(1, {2}, 1.0)));
}

TEST_CASE("a0_invert")
{
    CHECK(a0_invert(Potential::monomial(2, {2, 2}, 0.25)).approx_equal(Potential::monomial(2, {2, 2}, 1.0), 1e-15));
    CHECK(a0_invert(Potential::monomial(2, {0, 0}, 1.7)).approx_equal(Potential::monomial(2, {0, 0}, 1.7), 1e-15));
    for (int trial = 0; trial < 5; ++trial) {
        Potential g(2);
        for (int k = 0; k <= 4; ++k)
            for (int l = 0; k + l <= 4; ++l) g.add_term({2 * k, 2 * l}, testutil::uniform());
        CHECK(a0_invert(a0_apply(g)).approx_equal(g, 1e-12));
        CHECK(a0_apply(a0_invert(g)).approx_equal(g, 1e-12));
    }
}

TEST_CASE("homogeneity")
{
    for (int m = 1; m <= 6; ++m) {
        auto V = random_potential(2, 8).homogeneous_part(m);
        auto A = average_poly(V);
        CHECK(A.approx_equal(A.homogeneous_part(m), 0.0));
    }
}

TEST_CASE("locality")
{
    // V2 - V1 = eps x^{2m}, scaled to stay below 1e-13 on |x| <= r
    const double r = 0.5;
    auto V1 = random_potential(2, 4);
    const int m = 20;
    const double eps = 1e-13 / std::pow(r, 2 * m);
    Potential V2 = V1 + Potential::monomial(2, {2 * m, 0}, eps);
    auto A1 = average_poly(V1), A2 = average_poly(V2);
    for (int k = 0; k < 20; ++k) {
        auto x = random_point(2, r / 2), p = random_point(2, r / 2);
        CHECK(std::abs(A1.evaluate(x, p).real() - A2.evaluate(x, p).real()) <= 1e-13);
    }
}

TEST_CASE("averaging is injective on even polynomials")
{
    for (int n = 1; n <= 2; ++n) {
        const int D = n == 1 ? 10 : 8;
        std::vector<Potential> basis;
        for (int a = 0; a <= D; ++a)
            for (int b = 0; a + b <= D; ++b) {
                if (n == 1 && b > 0) continue;
                if ((a + b) % 2) continue;
                basis.push_back(n == 1 ? Potential::monomial(1, {a}, 1.0) : Potential::monomial(2, {a, b}, 1.0));
            }
        std::vector<PhasePolynomial> cols;
        std::map<MonoKey, int> rows;
        for (const auto& V : basis) {
            cols.push_back(average_poly(V));
            for (const auto& [k, c] : cols.back().raw()) rows.emplace(k, 0);
        }
        int i = 0;
        for (auto& [k, idx] : rows) idx = i++;
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows.size(), cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j)
            for (const auto& [k, c] : cols[j].raw()) M(rows.at(k), j) = c.real();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        CHECK(svd.rank() == static_cast<Eigen::Index>(cols.size()));
    }
    // odd monomials average to zero
    CHECK(average_poly(Potential::monomial(2, {3, 2}, 1.0)).is_zero());
}

TEST_CASE("averages commute with H0")
{
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 1 + trial % 2;
        auto V = random_potential(n, 8);
        CHECK(symbolcalc::poisson_bracket(PhasePolynomial::H0(n), average_poly(V)).max_abs() <= 1e-12);
        auto odd = V.odd_part();
        CHECK(symbolcalc::poisson_bracket(PhasePolynomial::H0(n), delta_average(odd)).max_abs() <= 1e-11);
    }
}
