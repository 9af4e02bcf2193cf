#pragma once

#include "oscbands/polynomial.hpp"

#include <random>
#include <vector>

namespace testutil {

using namespace oscbands;

// Fixed-seed generators keep every run identical.
inline std::mt19937& rng()
{
    static std::mt19937 g(424242u);
    return g;
}

inline double uniform(double a = -1.0, double b = 1.0)
{
    return std::uniform_real_distribution<double>(a, b)(rng());
}

inline int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng()); }

/// Random real potential of total degree <= deg with about `terms` monomials.
inline Potential random_potential(int n, int deg, int terms = 6)
{
    Potential V(n);
    for (int t = 0; t < terms; ++t) {
        std::vector<int> a(n, 0);
        int budget = pick(0, deg);
        for (int i = 0; i < n; ++i) {
            const int e = i + 1 == n ? budget : pick(0, budget);
            a[i] = e;
            budget -= e;
        }
        V.add_term(a, uniform());
    }
    return V;
}

/// Random complex phase polynomial of total degree <= deg.
inline PhasePolynomial random_phase(int n, int deg, int terms = 6)
{
    PhasePolynomial P(n);
    for (int t = 0; t < terms; ++t) {
        std::vector<int> ax(n, 0), ap(n, 0);
        int budget = pick(0, deg);
        for (int s = 0; s < 2 * n; ++s) {
            const int e = s + 1 == 2 * n ? budget : pick(0, budget);
            (s < n ? ax[s] : ap[s - n]) = e;
            budget -= e;
        }
        P.add_term(ax, ap, cplx(uniform(), uniform()));
    }
    return P;
}

inline std::vector<double> random_point(int n, double scale = 1.0)
{
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(-scale, scale);
    return v;
}

} // namespace testutil
