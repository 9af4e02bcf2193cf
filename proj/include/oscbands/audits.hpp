#pragma once

#include <string>
#include <vector>

namespace oscbands::audits {

/// One measured quantity against its bound. pass means value <= threshold
/// unless the check says otherwise (ratio windows store the distance to the target).
struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
};

struct AuditResult {
    std::string name;
    std::vector<Check> checks;
    double seconds = 0.0;
    bool pass() const;
    /// Largest value / threshold over the checks (<= 1 means everything passed).
    double worst_ratio() const;
};

/// V = x, n = 1: eigenvalues hbar j - hbar^4/2, shifts -hbar^2/2, V^Delta = -1/2.
AuditResult linear_anchor(const std::vector<double>& hbars = {0.2, 0.1, 0.05}, int J = 400, double tol = 1e-9);

/// V = C1 |x|^2 + C2 against the closed form (n = 1, 2), and width ratio under hbar halving.
AuditResult quadratic_oracle(double C1 = 0.5, double C2 = 0.3, double hbar = 0.1, int J = 80, double rel_tol = 1e-10,
                             double ratio_window = 0.2);

/// average_poly against the trapezoid average, parity, flow invariance, w2 = V^Delta.
/// Pseudo-random inputs from a fixed seed.
AuditResult averaging_identities(unsigned seed = 20240601u, int polynomials = 20, int points = 100, double tol = 1e-12);

/// B2(H0, exp(itH0)), the u2 transport equation and the Moyal power expansion.
AuditResult moyal_identities(unsigned seed = 7u, double tol = 1e-12);

/// Diagonal action of B_r, the tensor rule for A_r, gamma asymptotics, a0 round trip.
AuditResult fourier_laws(unsigned seed = 11u, double tol = 1e-12);

/// Names accepted by run_named.
const std::vector<std::string>& audit_names();
/// linear-anchor, quadratic-oracle, averaging-identities, moyal-identities, fourier-laws
AuditResult run_named(const std::string& name);

} // namespace oscbands::audits
