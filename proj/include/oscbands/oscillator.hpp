#pragma once

#include "oscbands/polynomial.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace oscbands::oscillator {

/// Raised when eigenvalues cannot be assigned to ladder levels unambiguously.
class ClusterOverlapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hermite basis |k>, |k| <= J, trusted up to level J_trust.
struct BasisSpec {
    int dim = 1;
    double hbar = 0.1;
    int J = 100;
    int J_trust = 60;
    /// Rebuild dense eigenvalues from eigenvectors so cluster shifts keep digits below eps*|H|.
    /// Costs a full eigenvector solve; worth it only when shifts are divided by hbar^2 again.
    bool refine = false;

    /// Number of states sum_{j<=J} C(n+j-1, n-1).
    long size() const;
};

/// J_trust defaults to floor(0.6 J).
BasisSpec make_basis(int dim, double hbar, int J, int J_trust = -1);
/// Throws if J_trust > J - buffer, buffer = safety * degree.
void check_basis(const BasisSpec& b, int potential_degree, int safety = 2);

/// Level multiplicity C(n+j-1, n-1).
long multiplicity(int n, int j);

/// Exact Galerkin block of x^k, x = sqrt(hbar/2)(a + a^dagger), on levels 0..size-1.
Eigen::MatrixXd position_power(int size, double hbar, int k);

/// Matrix of S0 + hbar^2 V on the basis (basis order: total level, then k_1 descending).
Eigen::MatrixXd assemble_hamiltonian(const Potential& V, const BasisSpec& basis);
/// Basis multi-indices in the order used by assemble_hamiltonian.
std::vector<std::vector<int>> basis_states(const BasisSpec& basis);

/// Ascending eigenvalues of a real symmetric matrix.
std::vector<double> eigensolve(const Eigen::MatrixXd& M, double sym_tol = 1e-13);

struct EigenPairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};
EigenPairs eigensolve_pairs(const Eigen::MatrixXd& M, double sym_tol = 1e-13);

struct SpectralData {
    BasisSpec basis;
    std::vector<double> eigenvalues;
    /// Level index of each eigenvalue when known from quantum numbers, else empty.
    std::vector<int> labels;
    double trusted_max_energy = 0.0;
};

enum class Backend { automatic, dense, separable };

/// Diagonalizes S0 + hbar^2 V. Parity sectors are split off when V allows it.
/// The separable backend diagonalizes each one-variable factor and labels levels
/// by the sum of the quantum numbers.
SpectralData compute_spectrum(const Potential& V, const BasisSpec& basis, Backend backend = Backend::automatic);

/// V = c + sum_i f_i(x_i)
bool is_separable(const Potential& V);

struct Cluster {
    int j = 0;
    std::vector<double> energies;
    std::vector<double> shifts;
};

struct ClusterSet {
    int dim = 1;
    double hbar = 0.1;
    std::vector<Cluster> clusters;
    /// max |E - hbar j| / hbar over trusted eigenvalues
    double max_deviation = 0.0;
};

/// Nearest-ladder rounding j = round(E / hbar); throws ClusterOverlapError when
/// |E - hbar j| >= hbar/2 (1 - margin) or a trusted level has the wrong count.
ClusterSet detect_clusters(const SpectralData& data, double margin = 0.1);
/// Uses the quantum-number labels stored in data.
ClusterSet clusters_from_labels(const SpectralData& data);
/// Labels when available, rounding otherwise.
ClusterSet make_clusters(const SpectralData& data);

/// hbar sqrt(1 + 2 hbar^2 C1)(j + n/2) - hbar n/2 + hbar^2 C2 for V = C1 |x|^2 + C2.
std::vector<double> quadratic_exact_spectrum(double C1, double C2, int n, double hbar, int j_max);

struct WidthSample {
    double hbar = 0.0;
    int j = 0;
    double width = 0.0;
};

/// max_k |E_{j,k} - hbar j| for j = round(E / hbar), one sample per hbar.
std::vector<WidthSample> cluster_width_scan(const Potential& V, double E, const std::vector<double>& hbars,
                                            double trust_fraction = 0.6);

/// Basis size J large enough that level j_needed is trusted.
int basis_for_level(int j_needed, int potential_degree, double trust_fraction = 0.6);

} // namespace oscbands::oscillator
