#include "oscbands/oscillator.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace oscbands;
using namespace oscbands::oscillator;

namespace {

Potential mono(std::vector<int> a, double c) { return Potential::monomial(static_cast<int>(a.size()), a, c); }

} // namespace

TEST_CASE("basis bookkeeping")
{
    CHECK(multiplicity(1, 5) == 1);
    CHECK(multiplicity(2, 5) == 6);
    CHECK(make_basis(2, 0.1, 10).size() == 66);
    CHECK(make_basis(1, 0.1, 10).J_trust == 6);
    CHECK_THROWS_AS(make_basis(3, 0.1, 10), DimensionError);
    CHECK_THROWS(make_basis(1, 0.1, 10, 10));
    CHECK_THROWS(make_basis(1, -0.1, 10));
    CHECK_THROWS(check_basis(make_basis(1, 0.1, 20, 18), 4));
}

TEST_CASE("unperturbed ladder")
{
    for (int n = 1; n <= 2; ++n) {
        auto b = make_basis(n, 0.2, 20);
        auto H = assemble_hamiltonian(Potential(n), b);
        CHECK((H - Eigen::MatrixXd(H.diagonal().asDiagonal())).norm() == 0.0);
        auto cs = detect_clusters(compute_spectrum(Potential(n), b, Backend::dense));
        for (const auto& c : cs.clusters) {
            CHECK(static_cast<long>(c.shifts.size()) == multiplicity(n, c.j));
            for (double e : c.energies) CHECK(std::abs(e - 0.2 * c.j) <= 1e-14);
            for (double m : c.shifts) CHECK(std::abs(m) <= 1e-12);
        }
    }
}

TEST_CASE("linear potential gives a tridiagonal matrix")
{
    auto H = assemble_hamiltonian(mono({1}, 1.0), make_basis(1, 0.1, 30));
    for (int i = 0; i < H.rows(); ++i)
        for (int j = 0; j < H.cols(); ++j)
            if (std::abs(i - j) > 1) CHECK(H(i, j) == 0.0);
    CHECK(H(0, 1) != 0.0);
}

TEST_CASE("quadratic closed form")
{
    auto z = quadratic_exact_spectrum(0.0, 0.0, 2, 0.1, 5);
    for (int j = 0; j <= 5; ++j) CHECK(std::abs(z[j] - 0.1 * j) <= 1e-15);
    const double h = 0.1;
    CHECK(std::abs(quadratic_exact_spectrum(1.0, 0.0, 1, h, 0)[0] - (h * std::sqrt(1 + 2 * h * h) * 0.5 - h / 2)) <=
          1e-16);
    CHECK_THROWS(quadratic_exact_spectrum(-60.0, 0.0, 1, 0.1, 3));

    for (int n = 1; n <= 2; ++n) {
        Potential V(n);
        for (int i = 0; i < n; ++i) {
            std::vector<int> a(n, 0);
            a[i] = 2;
            V.add_term(a, 0.5);
        }
        V.add_term(std::vector<int>(n, 0), 0.3);
        auto b = make_basis(n, 0.1, n == 1 ? 200 : 60);
        auto cs = make_clusters(compute_spectrum(V, b, Backend::dense));
        auto exact = quadratic_exact_spectrum(0.5, 0.3, n, 0.1, b.J_trust);
        for (const auto& c : cs.clusters)
            for (double e : c.energies) CHECK(std::abs(e - exact[c.j]) <= 1e-10 * std::abs(exact[c.j]) + 1e-15);
    }
}

TEST_CASE("eigensolve")
{
    Eigen::MatrixXd d = Eigen::Vector3d(3, 1, 2).asDiagonal();
    auto v = eigensolve(d);
    CHECK(v == std::vector<double>{1, 2, 3});
    Eigen::Matrix2d ex;
    ex << 0, 1, 1, 0;
    auto w = eigensolve(ex);
    CHECK(std::abs(w[0] + 1) <= 1e-15);
    CHECK(std::abs(w[1] - 1) <= 1e-15);
    Eigen::Matrix2d ns;
    ns << 0, 1, 0.5, 0;
    CHECK_THROWS(eigensolve(ns));

    auto H = assemble_hamiltonian(mono({4}, 1.0), make_basis(1, 0.1, 60));
    auto ep = eigensolve_pairs(H);
    for (int c = 0; c < H.cols(); c += 7) {
        const double r = (H * ep.vectors.col(c) - ep.values(c) * ep.vectors.col(c)).norm();
        CHECK(r <= 1e-10 * H.norm());
    }
}

TEST_CASE("cluster detection")
{
    const double h = 0.1;
    auto cs = detect_clusters(compute_spectrum(mono({1}, 1.0), make_basis(1, h, 300)));
    for (const auto& c : cs.clusters)
        for (double m : c.shifts) CHECK(std::abs(m + 0.5 * h * h) <= 1e-9);

    auto q = detect_clusters(compute_spectrum(mono({2}, 1.0), make_basis(1, h, 40)));
    for (const auto& c : q.clusters) {
        CHECK(c.shifts.size() == 1);
        CHECK(std::abs(c.shifts[0] / (h * (c.j + 0.5)) - 1.0) <= 2 * h * h);
    }

    CHECK_THROWS_AS(detect_clusters(compute_spectrum(mono({2}, 80.0), make_basis(1, 0.3, 40))), ClusterOverlapError);
}

TEST_CASE("cluster width scan")
{
    for (const auto& w : cluster_width_scan(Potential(1), 1.0, {0.1, 0.05})) CHECK(w.width <= 1e-14);
    auto lin = cluster_width_scan(mono({1}, 1.0), 1.0, {0.2, 0.1});
    CHECK(std::abs(lin[0].width - std::pow(0.2, 4) / 2) <= 1e-12);
    CHECK(std::abs(lin[1].width / lin[0].width - 1.0 / 16) <= 1e-6);

    Potential V(2);
    V.add_term({4, 0}, 1.0);
    V.add_term({0, 2}, 1.0);
    auto ws = cluster_width_scan(V, 1.0, {0.1, 0.05});
    CHECK(std::abs(ws[1].width / ws[0].width / 0.25 - 1.0) <= 0.2);
}

TEST_CASE("truncation only lowers trusted eigenvalues")
{
    Potential V1 = mono({4}, 1.0) + mono({1}, 0.3);
    Potential V2(2);
    V2.add_term({2, 2}, 1.0);
    V2.add_term({4, 0}, 0.5);
    for (const Potential* V : {&V1, &V2}) {
        const int J = V->dim() == 1 ? 60 : 24;
        auto small = compute_spectrum(*V, make_basis(V->dim(), 0.1, J), Backend::dense);
        auto big = compute_spectrum(*V, make_basis(V->dim(), 0.1, 2 * J, static_cast<int>(0.6 * J)), Backend::dense);
        REQUIRE(big.eigenvalues.size() >= small.eigenvalues.size());
        for (std::size_t i = 0; i < small.eigenvalues.size(); ++i)
            CHECK(big.eigenvalues[i] <= small.eigenvalues[i] + 1e-10);
    }
}

TEST_CASE("cluster counts match multiplicities")
{
    Potential V(2);
    V.add_term({2, 2}, 1.0);
    V.add_term({4, 0}, 0.5);
    V.add_term({1, 1}, 0.2);
    auto cs = detect_clusters(compute_spectrum(V, make_basis(2, 0.05, 40)));
    for (const auto& c : cs.clusters) CHECK(static_cast<long>(c.shifts.size()) == multiplicity(2, c.j));
}

TEST_CASE("separable backend matches the dense one")
{
    Potential V(2);
    V.add_term({4, 0}, 0.1);
    V.add_term({0, 2}, 0.5);
    V.add_term({0, 0}, 0.1);
    auto b = make_basis(2, 0.05, 40);
    auto dense = compute_spectrum(V, b, Backend::dense);
    auto sep = compute_spectrum(V, b, Backend::separable);
    auto cd = make_clusters(dense), cs = make_clusters(sep);
    REQUIRE(cd.clusters.size() <= cs.clusters.size());
    for (std::size_t i = 0; i < cd.clusters.size(); ++i) {
        auto a = cd.clusters[i].energies, c = cs.clusters[i].energies;
        std::sort(a.begin(), a.end());
        std::sort(c.begin(), c.end());
        REQUIRE(a.size() == c.size());
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - c[k]) <= 1e-10);
    }
    CHECK_THROWS(compute_spectrum(mono({1, 1}, 1.0), b, Backend::separable));
}

TEST_CASE("refined eigenvalues keep the shift digits")
{
    // V = x at small hbar: the shift -hbar^2/2 is far below eps * |H|
    const double h = 0.03;
    auto b = make_basis(1, h, 1000);
    b.refine = true;
    auto cs = make_clusters(compute_spectrum(mono({1}, 1.0), b));
    // what is left is the rounding of the stored energy itself, ulp(E) / hbar^4
    double worst = 0.0;
    for (const auto& c : cs.clusters) {
        const double floor = std::numeric_limits<double>::epsilon() * (h * c.j + 1.0) / std::pow(h, 4);
        for (double m : c.shifts) worst = std::max(worst, std::abs(m / (h * h) + 0.5) / floor);
    }
    CHECK(worst <= 2.0);

    // dense refinement path in two variables
    auto b2 = make_basis(2, 0.1, 30);
    auto plain = compute_spectrum(mono({1, 0}, 1.0) + mono({0, 3}, 0.5), b2);
    b2.refine = true;
    auto fine = compute_spectrum(mono({1, 0}, 1.0) + mono({0, 3}, 0.5), b2);
    REQUIRE(plain.eigenvalues.size() == fine.eigenvalues.size());
    for (std::size_t i = 0; i < fine.eigenvalues.size(); ++i)
        CHECK(std::abs(plain.eigenvalues[i] - fine.eigenvalues[i]) <= 1e-12);
}
