#include "oscbands/oscillator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace oscbands::oscillator {

long multiplicity(int n, int j)
{
    if (j < 0) return 0;
    // C(n+j-1, n-1)
    long r = 1;
    for (int i = 1; i <= n - 1; ++i) r = r * (j + i) / i;
    return r;
}

long BasisSpec::size() const
{
    long s = 0;
    for (int j = 0; j <= J; ++j) s += multiplicity(dim, j);
    return s;
}

BasisSpec make_basis(int dim, double hbar, int J, int J_trust)
{
    if (dim < 1 || dim > 2) throw DimensionError("matrix backend supports n = 1 or 2, got " + std::to_string(dim));
    if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
    if (J < 1) throw std::invalid_argument("J must be at least 1");
    BasisSpec b;
    b.dim = dim;
    b.hbar = hbar;
    b.J = J;
    b.J_trust = J_trust < 0 ? static_cast<int>(std::floor(0.6 * J)) : J_trust;
    if (b.J_trust >= J) throw std::invalid_argument("J_trust must be smaller than J");
    return b;
}

void check_basis(const BasisSpec& b, int potential_degree, int safety)
{
    const int buffer = std::max(1, safety * std::max(potential_degree, 1));
    if (b.J_trust > b.J - buffer)
        throw std::invalid_argument("J_trust = " + std::to_string(b.J_trust) + " exceeds J - buffer = " +
                                    std::to_string(b.J - buffer));
}

int basis_for_level(int j_needed, int potential_degree, double trust_fraction)
{
    int J = static_cast<int>(std::ceil((j_needed + 1) / trust_fraction));
    J = std::max(J, j_needed + 2 * std::max(potential_degree, 1) + 2);
    return J;
}

Eigen::MatrixXd position_power(int size, double hbar, int k)
{
    if (size < 1) throw std::invalid_argument("position_power needs size >= 1");
    if (k < 0) throw std::invalid_argument("negative power");
    const int M = size + k;
    std::vector<double> off(M, 0.0);  // X[i][i+1]
    for (int i = 0; i + 1 < M; ++i) off[i] = std::sqrt(hbar * (i + 1) / 2.0);
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(M, M);
    for (int q = 1; q <= k; ++q) {
        Eigen::MatrixXd N = Eigen::MatrixXd::Zero(M, M);
        for (int i = 0; i < M; ++i) {
            const int lo = std::max(0, i - q), hi = std::min(M - 1, i + q);
            for (int j = lo; j <= hi; ++j) {
                double v = 0.0;
                if (j >= 1) v += P(i, j - 1) * off[j - 1];
                if (j + 1 < M) v += P(i, j + 1) * off[j];
                N(i, j) = v;
            }
        }
        P.swap(N);
    }
    return P.topLeftCorner(size, size);
}

std::vector<std::vector<int>> basis_states(const BasisSpec& basis)
{
    std::vector<std::vector<int>> out;
    for (int j = 0; j <= basis.J; ++j) {
        if (basis.dim == 1) {
            out.push_back({j});
        } else {
            for (int k1 = j; k1 >= 0; --k1) out.push_back({k1, j - k1});
        }
    }
    return out;
}

namespace {

void require_poly_backend(const Potential& V, const BasisSpec& basis)
{
    if (!V.is_polynomial()) throw std::invalid_argument("matrix assembly needs a polynomial potential");
    if (V.dim() != basis.dim) throw DimensionError("potential and basis dimensions differ");
    if (basis.dim < 1 || basis.dim > 2) throw DimensionError("matrix backend supports n = 1 or 2");
}

struct PowerCache {
    int size;
    double hbar;
    std::map<int, Eigen::MatrixXd> m;
    const Eigen::MatrixXd& get(int k)
    {
        auto it = m.find(k);
        if (it == m.end()) it = m.emplace(k, position_power(size, hbar, k)).first;
        return it->second;
    }
};

// Block of S0 + hbar^2 V on the listed states.
Eigen::MatrixXd assemble_block(const Potential& V, const BasisSpec& basis,
                               const std::vector<std::vector<int>>& states)
{
    const int N = static_cast<int>(states.size());
    const double h = basis.hbar;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, N);
    PowerCache cache{basis.J + 1, h, {}};
    if (basis.dim == 1) {
        std::vector<int> pos(basis.J + 1, -1);
        for (int i = 0; i < N; ++i) pos[states[i][0]] = i;
        for (int i = 0; i < N; ++i) H(i, i) += h * states[i][0];
        for (const auto& [alpha, c] : V.terms()) {
            const auto& X = cache.get(alpha[0]);
            for (int i = 0; i < N; ++i) {
                const int k = states[i][0];
                for (int kp = std::max(0, k - alpha[0]); kp <= std::min(basis.J, k + alpha[0]); ++kp) {
                    const int ip = pos[kp];
                    if (ip < 0) continue;
                    H(i, ip) += h * h * c * X(k, kp);
                }
            }
        }
        return H;
    }
    // n = 2, index by (k1, k2)
    const int S = basis.J + 1;
    std::vector<int> pos(S * S, -1);
    for (int i = 0; i < N; ++i) pos[states[i][0] * S + states[i][1]] = i;
    for (int i = 0; i < N; ++i) H(i, i) += h * (states[i][0] + states[i][1]);
    for (const auto& [alpha, c] : V.terms()) {
        const auto& X1 = cache.get(alpha[0]);
        const auto& X2 = cache.get(alpha[1]);
        const double cc = h * h * c;
        for (int i = 0; i < N; ++i) {
            const int k1 = states[i][0], k2 = states[i][1];
            for (int q1 = std::max(0, k1 - alpha[0]); q1 <= std::min(basis.J, k1 + alpha[0]); q1 += 1) {
                const double a = X1(k1, q1);
                if (a == 0.0) continue;
                for (int q2 = std::max(0, k2 - alpha[1]); q2 <= std::min(basis.J - q1, k2 + alpha[1]); ++q2) {
                    const double b = X2(k2, q2);
                    if (b == 0.0) continue;
                    const int ip = pos[q1 * S + q2];
                    if (ip < 0) continue;
                    H(i, ip) += cc * a * b;
                }
            }
        }
    }
    return H;
}

// Parity label of a state; states in different sectors never couple.
int sector_of(const std::vector<int>& k, bool even1, bool even2, bool even_total)
{
    int s = 0;
    if (even1) s |= (k[0] & 1);
    if (k.size() > 1) {
        if (even2) s |= (k[1] & 1) << 1;
        if (even_total) s |= ((k[0] + k[1]) & 1) << 2;
    }
    return s;
}

std::vector<std::vector<std::vector<int>>> parity_sectors(const Potential& V, const BasisSpec& basis)
{
    bool even1 = true, even2 = true, even_total = true;
    for (const auto& [alpha, c] : V.terms()) {
        if (alpha[0] % 2) even1 = false;
        if (alpha.size() > 1 && alpha[1] % 2) even2 = false;
        int t = 0;
        for (int a : alpha) t += a;
        if (t % 2) even_total = false;
    }
    std::map<int, std::vector<std::vector<int>>> by;
    for (auto& s : basis_states(basis)) by[sector_of(s, even1, even2, even_total)].push_back(s);
    std::vector<std::vector<std::vector<int>>> out;
    for (auto& [k, v] : by) out.push_back(std::move(v));
    return out;
}

void check_symmetric(const Eigen::MatrixXd& M, double sym_tol)
{
    if (M.rows() != M.cols()) throw std::invalid_argument("eigensolve needs a square matrix");
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
    if (asym > sym_tol * scale)
        throw std::invalid_argument("matrix is not symmetric: asymmetry " + std::to_string(asym));
}

// A - sigma I in band storage with room for pivoting fill-in, factored by LU with partial pivoting.
class BandLU {
public:
    BandLU(const Eigen::MatrixXd& A, int b, double sigma) : n_(static_cast<int>(A.rows())), b_(b), w_(3 * b + 1),
                                                            a_(static_cast<std::size_t>(n_) * w_, 0.0), piv_(n_)
    {
        for (int i = 0; i < n_; ++i)
            for (int j = std::max(0, i - b_); j <= std::min(n_ - 1, i + b_); ++j) at(i, j) = A(i, j) - (i == j ? sigma : 0.0);
        for (int k = 0; k < n_; ++k) {
            const int last = std::min(n_ - 1, k + b_), right = std::min(n_ - 1, k + 2 * b_);
            int p = k;
            for (int i = k + 1; i <= last; ++i)
                if (std::abs(at(i, k)) > std::abs(at(p, k))) p = i;
            piv_[k] = p;
            if (p != k)
                for (int j = k; j <= right; ++j) std::swap(at(k, j), at(p, j));
            if (at(k, k) == 0.0) at(k, k) = 1e-300;
            for (int i = k + 1; i <= last; ++i) {
                const double l = at(i, k) / at(k, k);
                at(i, k) = l;
                for (int j = k + 1; j <= right; ++j) at(i, j) -= l * at(k, j);
            }
        }
    }

    void solve(Eigen::VectorXd& x) const
    {
        for (int k = 0; k < n_; ++k) {
            std::swap(x(k), x(piv_[k]));
            for (int i = k + 1; i <= std::min(n_ - 1, k + b_); ++i) x(i) -= at(i, k) * x(k);
        }
        for (int k = n_ - 1; k >= 0; --k) {
            double r = x(k);
            for (int j = k + 1; j <= std::min(n_ - 1, k + 2 * b_); ++j) r -= at(k, j) * x(j);
            x(k) = r / at(k, k);
        }
    }

private:
    double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * w_ + (j - i + b_)]; }
    double at(int i, int j) const { return a_[static_cast<std::size_t>(i) * w_ + (j - i + b_)]; }
    int n_, b_, w_;
    std::vector<double> a_;
    std::vector<int> piv_;
};

int bandwidth(const Eigen::MatrixXd& H)
{
    int b = 0;
    for (int j = 0; j < H.cols(); ++j)
        for (int i = 0; i < H.rows(); ++i)
            if (H(i, j) != 0.0) b = std::max(b, std::abs(i - j));
    return b;
}

// Eigenvalues of a block with each one rebuilt as hbar*j + <v, (H - hbar*j) v>. The diagonal part
// hbar*(|k| - j) is formed exactly, so the cluster shift does not inherit the eps*|H| error of the
// eigenvalue itself; the Rayleigh quotient error is quadratic in the eigenvector error.
// Simple spectra with a narrow band get their vectors by inverse iteration, anything else by a dense solve.
std::vector<double> refined_eigenvalues(const Eigen::MatrixXd& H, const std::vector<std::vector<int>>& states, double h,
                                        bool simple)
{
    const int N = static_cast<int>(H.rows());
    if (N == 0) return {};
    Eigen::VectorXd level(N);
    Eigen::MatrixXd W = H;
    for (int i = 0; i < N; ++i) {
        level(i) = std::accumulate(states[i].begin(), states[i].end(), 0);
        W(i, i) -= h * level(i);
    }
    auto rayleigh = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& Wv, double lambda) {
        const double j = std::round(lambda / h);
        double q = v.dot(Wv);
        for (int i = 0; i < N; ++i) q += v(i) * v(i) * (h * (level(i) - j));
        return h * j + q / v.squaredNorm();
    };

    std::vector<double> out(N);
    const int b = bandwidth(H);
    if (simple && 8 * b < N) {
        const std::vector<double> rough = eigensolve(H);
        std::mt19937 rng(12345);
        std::uniform_real_distribution<double> u(0.5, 1.5);
        Eigen::VectorXd start(N);
        for (int i = 0; i < N; ++i) start(i) = u(rng);
        for (int c = 0; c < N; ++c) {
            const BandLU lu(H, b, rough[c]);
            Eigen::VectorXd v = start;
            for (int it = 0; it < 3; ++it) {
                lu.solve(v);
                v /= v.norm();
            }
            Eigen::VectorXd Wv = Eigen::VectorXd::Zero(N);
            for (int i = 0; i < N; ++i)
                for (int k = std::max(0, i - b); k <= std::min(N - 1, i + b); ++k) Wv(i) += W(i, k) * v(k);
            out[c] = rayleigh(v, Wv, rough[c]);
        }
    } else {
        const EigenPairs ep = eigensolve_pairs(H);
        const Eigen::MatrixXd WV = W * ep.vectors;
        for (int c = 0; c < N; ++c) out[c] = rayleigh(ep.vectors.col(c), WV.col(c), ep.values(c));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> one_dim_levels(const Potential& f, const BasisSpec& b1)
{
    SpectralData d = compute_spectrum(f, b1, Backend::dense);
    return d.eigenvalues;
}

} // namespace

Eigen::MatrixXd assemble_hamiltonian(const Potential& V, const BasisSpec& basis)
{
    require_poly_backend(V, basis);
    return assemble_block(V, basis, basis_states(basis));
}

std::vector<double> eigensolve(const Eigen::MatrixXd& M, double sym_tol)
{
    check_symmetric(M, sym_tol);
    if (M.rows() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver did not converge");
    std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(v.begin(), v.end());
    return v;
}

EigenPairs eigensolve_pairs(const Eigen::MatrixXd& M, double sym_tol)
{
    check_symmetric(M, sym_tol);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

bool is_separable(const Potential& V)
{
    for (const auto& [alpha, c] : V.terms()) {
        int nz = 0;
        for (int a : alpha) nz += (a > 0);
        if (nz > 1) return false;
    }
    return true;
}

SpectralData compute_spectrum(const Potential& V, const BasisSpec& basis, Backend backend)
{
    require_poly_backend(V, basis);
    SpectralData out;
    out.basis = basis;
    if (backend == Backend::automatic)
        backend = (basis.dim > 1 && is_separable(V)) ? Backend::separable : Backend::dense;

    if (backend == Backend::separable && basis.dim > 1) {
        if (!is_separable(V)) throw std::invalid_argument("separable backend needs V = c + sum f_i(x_i)");
        std::vector<std::vector<double>> levels;
        for (int i = 0; i < basis.dim; ++i) {
            Potential f(1);
            for (const auto& [alpha, c] : V.terms()) {
                bool constant = std::all_of(alpha.begin(), alpha.end(), [](int a) { return a == 0; });
                if (constant) {
                    if (i == 0) f.add_term({0}, c);
                } else if (alpha[i] > 0) {
                    f.add_term({alpha[i]}, c);
                }
            }
            BasisSpec b1 = basis;
            b1.dim = 1;
            levels.push_back(one_dim_levels(f, b1));
        }
        std::vector<std::pair<double, int>> ev;
        for (int k1 = 0; k1 <= basis.J_trust; ++k1)
            for (int k2 = 0; k1 + k2 <= basis.J_trust; ++k2) ev.emplace_back(levels[0][k1] + levels[1][k2], k1 + k2);
        std::sort(ev.begin(), ev.end());
        for (auto& [e, j] : ev) {
            out.eigenvalues.push_back(e);
            out.labels.push_back(j);
        }
        out.trusted_max_energy = ev.empty() ? 0.0 : ev.back().first;
        return out;
    }

    std::vector<double> all;
    for (const auto& sec : parity_sectors(V, basis)) {
        const Eigen::MatrixXd H = assemble_block(V, basis, sec);
        auto vals = basis.refine ? refined_eigenvalues(H, sec, basis.hbar, basis.dim == 1) : eigensolve(H);
        all.insert(all.end(), vals.begin(), vals.end());
    }
    std::sort(all.begin(), all.end());
    if (basis.dim == 1) {
        // simple spectrum, ordering is preserved along V -> tV
        for (int j = 0; j <= basis.J_trust && j < static_cast<int>(all.size()); ++j) {
            out.eigenvalues.push_back(all[j]);
            out.labels.push_back(j);
        }
        out.trusted_max_energy = out.eigenvalues.back();
    } else {
        out.trusted_max_energy = basis.hbar * (basis.J_trust + 0.5);
        for (double e : all)
            if (e <= out.trusted_max_energy) out.eigenvalues.push_back(e);
    }
    return out;
}

ClusterSet detect_clusters(const SpectralData& data, double margin)
{
    const double h = data.basis.hbar;
    ClusterSet cs;
    cs.dim = data.basis.dim;
    cs.hbar = h;
    std::map<int, Cluster> by;
    for (double e : data.eigenvalues) {
        if (e > data.trusted_max_energy) continue;
        const int j = static_cast<int>(std::lround(e / h));
        const double dev = std::abs(e - h * j);
        if (dev >= 0.5 * h * (1.0 - margin))
            throw ClusterOverlapError("eigenvalue " + std::to_string(e) + " lies " + std::to_string(dev / h) +
                                      " hbar from the ladder; clusters overlap at hbar = " + std::to_string(h));
        cs.max_deviation = std::max(cs.max_deviation, dev / h);
        auto& c = by[j];
        c.j = j;
        c.energies.push_back(e);
        c.shifts.push_back((e - h * j) / (h * h));
    }
    for (auto& [j, c] : by) {
        if (j > data.basis.J_trust) continue;
        if (static_cast<long>(c.energies.size()) != multiplicity(cs.dim, j))
            throw ClusterOverlapError("cluster " + std::to_string(j) + " has " + std::to_string(c.energies.size()) +
                                      " members, expected " + std::to_string(multiplicity(cs.dim, j)));
        cs.clusters.push_back(std::move(c));
    }
    return cs;
}

ClusterSet clusters_from_labels(const SpectralData& data)
{
    if (data.labels.size() != data.eigenvalues.size()) throw std::invalid_argument("spectral data carries no labels");
    const double h = data.basis.hbar;
    ClusterSet cs;
    cs.dim = data.basis.dim;
    cs.hbar = h;
    std::map<int, Cluster> by;
    for (std::size_t i = 0; i < data.eigenvalues.size(); ++i) {
        const int j = data.labels[i];
        const double e = data.eigenvalues[i];
        auto& c = by[j];
        c.j = j;
        c.energies.push_back(e);
        c.shifts.push_back((e - h * j) / (h * h));
        cs.max_deviation = std::max(cs.max_deviation, std::abs(e - h * j) / h);
    }
    for (auto& [j, c] : by) {
        if (static_cast<long>(c.energies.size()) != multiplicity(cs.dim, j))
            throw ClusterOverlapError("labelled cluster " + std::to_string(j) + " is incomplete");
        cs.clusters.push_back(std::move(c));
    }
    return cs;
}

ClusterSet make_clusters(const SpectralData& data)
{
    if (!data.labels.empty()) return clusters_from_labels(data);
    return detect_clusters(data);
}

std::vector<double> quadratic_exact_spectrum(double C1, double C2, int n, double hbar, int j_max)
{
    const double w2 = 1.0 + 2.0 * hbar * hbar * C1;
    if (!(w2 > 0.0)) throw std::invalid_argument("oscillator frequency is not positive (1 + 2 hbar^2 C1 <= 0)");
    const double w = std::sqrt(w2);
    std::vector<double> out;
    for (int j = 0; j <= j_max; ++j) out.push_back(hbar * w * (j + 0.5 * n) - 0.5 * hbar * n + hbar * hbar * C2);
    return out;
}

std::vector<WidthSample> cluster_width_scan(const Potential& V, double E, const std::vector<double>& hbars,
                                            double trust_fraction)
{
    std::vector<WidthSample> out;
    for (double h : hbars) {
        const int j = static_cast<int>(std::lround(E / h));
        const int J = basis_for_level(j, V.degree(), trust_fraction);
        BasisSpec b = make_basis(V.dim(), h, J, static_cast<int>(std::floor(trust_fraction * J)));
        ClusterSet cs = make_clusters(compute_spectrum(V, b));
        double width = -1.0;
        for (const auto& c : cs.clusters) {
            if (c.j != j) continue;
            width = 0.0;
            for (double e : c.energies) width = std::max(width, std::abs(e - h * j));
        }
        if (width < 0.0) throw std::runtime_error("level " + std::to_string(j) + " is not in the trusted window");
        out.push_back({h, j, width});
    }
    return out;
}

} // namespace oscbands::oscillator
