#include "schema.hpp"

#include "oscbands/audits.hpp"
#include "oscbands/averaging.hpp"
#include "oscbands/invariants.hpp"
#include "oscbands/inverse.hpp"
#include "oscbands/oscillator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oscbands::cli {

namespace {

namespace inv = oscbands::invariants;
namespace osc = oscbands::oscillator;
namespace rec = oscbands::inverse;

using io::number;

constexpr long kDenseLimit = 8000;

// ------------------------------------------------------------- config access

const Json& P(const Json& cfg, const char* k) { return cfg.at("params").at(k); }
double num(const Json& cfg, const char* k) { return P(cfg, k).get<double>(); }
int integer(const Json& cfg, const char* k) { return P(cfg, k).get<int>(); }
std::string str(const Json& cfg, const char* k) { return P(cfg, k).get<std::string>(); }
bool has(const Json& cfg, const char* k) { return cfg.at("params").contains(k); }
bool wants(const Json& cfg, const char* check) { return cfg.at("checks").contains(check); }

std::vector<double> nums(const Json& cfg, const char* k) { return P(cfg, k).get<std::vector<double>>(); }
std::vector<int> ints(const Json& cfg, const char* k) { return P(cfg, k).get<std::vector<int>>(); }

Potential potential(const Json& cfg) { return io::potential_from_json(cfg.at("potential")); }

Poly1 poly(const Json& list) { return Poly1{list.get<std::vector<double>>()}; }
inv::RealFn as_fn(const Poly1& p)
{
    return [p](double s) { return p(s); };
}

inv::WeightSpec weight(const Json& w)
{
    if (w.at("kind").get<std::string>() == "bump")
        return inv::WeightSpec::bump(w.at("center").get<double>(), w.at("radius").get<double>());
    return inv::WeightSpec::gaussian(w.at("mu").get<double>());
}

Json vec(const std::vector<double>& v)
{
    Json a = Json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

double rel(double got, double ref) { return std::abs(got - ref) / std::max(std::abs(ref), 1e-300); }

// ------------------------------------------------------------- shared checks

void check_weight(const Json& cfg, Violations& v, bool gaussian_only = false)
{
    const Json& w = P(cfg, "weight");
    if (!w.contains("kind") || !w["kind"].is_string()) {
        v.add(".params.weight.kind: expected \"gaussian\" or \"bump\"");
        return;
    }
    const std::string kind = w["kind"].get<std::string>();
    auto positive = [&](const char* k) {
        if (!w.contains(k) || !w[k].is_number() || !(w[k].get<double>() > 0.0))
            v.add(std::string(".params.weight.") + k + ": expected a positive number");
    };
    if (kind == "gaussian") {
        positive("mu");
        for (auto it = w.begin(); it != w.end(); ++it)
            if (it.key() != "kind" && it.key() != "mu") v.add(".params.weight." + it.key() + ": unknown field");
    } else if (kind == "bump") {
        if (gaussian_only) v.add(".params.weight.kind: this quantity has a closed form for gaussian weights only");
        positive("center");
        positive("radius");
        for (auto it = w.begin(); it != w.end(); ++it)
            if (it.key() != "kind" && it.key() != "center" && it.key() != "radius")
                v.add(".params.weight." + it.key() + ": unknown field");
    } else {
        v.add(".params.weight.kind: expected \"gaussian\" or \"bump\"");
    }
}

bool geometric(const std::vector<double>& h)
{
    if (h.size() < 2) return false;
    const double r = h[1] / h[0];
    if (!(r > 0.0) || r == 1.0) return false;
    for (std::size_t i = 1; i < h.size(); ++i)
        if (!(h[i] > 0.0) || std::abs(h[i] / h[i - 1] - r) > 1e-9 * r) return false;
    return true;
}

void basis_params(Json& cfg, Violations& v, const Potential& V)
{
    const int J = integer(cfg, "J");
    if (!has(cfg, "J_trust")) cfg["params"]["J_trust"] = static_cast<int>(std::floor(0.6 * J));
    const int Jt = integer(cfg, "J_trust");
    if (Jt >= J) v.add(".params.J_trust: must be smaller than J (J_trust = " + std::to_string(Jt) +
                       ", J = " + std::to_string(J) + ")");
    const std::string backend = str(cfg, "backend");
    if (backend == "separable" && !osc::is_separable(V))
        v.add(".params.backend: separable backend needs V = c + sum f_i(x_i)");
    if (V.dim() > 2 && backend == "separable") v.add(".params.backend: separable backend supports n <= 2");
    const bool dense = backend == "dense" || (backend == "auto" && !(V.dim() == 2 && osc::is_separable(V)));
    if (dense) {
        osc::BasisSpec b;
        b.dim = V.dim();
        b.J = J;
        if (b.size() > kDenseLimit)
            v.add(".params.J: dense basis of " + std::to_string(b.size()) + " states exceeds the limit of " +
                  std::to_string(kDenseLimit));
    }
}

osc::Backend backend(const Json& cfg)
{
    const std::string b = str(cfg, "backend");
    if (b == "dense") return osc::Backend::dense;
    if (b == "separable") return osc::Backend::separable;
    return osc::Backend::automatic;
}

osc::SpectralData spectrum_of(const Json& cfg, const Potential& V)
{
    auto basis = osc::make_basis(V.dim(), num(cfg, "hbar"), integer(cfg, "J"), integer(cfg, "J_trust"));
    return osc::compute_spectrum(V, basis, backend(cfg));
}

// V = C1 |x|^2 + C2 ?
bool isotropic_quadratic(const Potential& V, double& C1, double& C2)
{
    const int n = V.dim();
    C1 = 0.0;
    C2 = V.coeff(std::vector<int>(n, 0));
    bool first = true;
    for (const auto& [alpha, c] : V.terms()) {
        int total = 0, maxe = 0;
        for (int a : alpha) total += a, maxe = std::max(maxe, a);
        if (total == 0) continue;
        if (total != 2 || maxe != 2) return false;
        if (!first && c != C1) return false;
        C1 = c;
        first = false;
    }
    int squares = 0;
    for (int i = 0; i < n; ++i) {
        std::vector<int> a(n, 0);
        a[i] = 2;
        squares += V.coeff(a) != 0.0;
    }
    return first || squares == n;
}

bool affine(const Potential& V) { return V.degree() <= 1; }

Json basis_json(const osc::BasisSpec& b)
{
    return {{"dim", b.dim}, {"hbar", b.hbar}, {"J", b.J}, {"J_trust", b.J_trust}, {"size", b.size()}};
}

// ------------------------------------------------------------------- tasks

TaskOutput run_spectrum(const Json& cfg)
{
    const Potential V = potential(cfg);
    auto data = spectrum_of(cfg, V);
    TaskOutput out;
    out.results["basis"] = basis_json(data.basis);
    out.results["trusted_max_energy"] = data.trusted_max_energy;
    out.results["eigenvalues"] = vec(data.eigenvalues);
    if (!data.labels.empty()) out.results["labels"] = data.labels;
    out.csv_header = {"index", "eigenvalue", "level"};
    for (std::size_t i = 0; i < data.eigenvalues.size(); ++i)
        out.csv_rows.push_back({double(i), data.eigenvalues[i], data.labels.empty() ? -1.0 : double(data.labels[i])});

    const double h = data.basis.hbar;
    if (wants(cfg, "closed_form_relative")) {
        double C1 = 0.0, C2 = 0.0;
        isotropic_quadratic(V, C1, C2);
        auto cs = osc::make_clusters(data);
        auto exact = osc::quadratic_exact_spectrum(C1, C2, V.dim(), h, data.basis.J_trust);
        double err = 0.0;
        for (const auto& c : cs.clusters)
            for (double e : c.energies) err = std::max(err, rel(e, exact[c.j]));
        out.measured.emplace_back("closed_form_relative", err);
    }
    if (wants(cfg, "linear_exact_error")) {
        double b2 = 0.0;
        for (int i = 0; i < V.dim(); ++i) {
            std::vector<int> a(V.dim(), 0);
            a[i] = 1;
            b2 += V.coeff(a) * V.coeff(a);
        }
        const double C = V.coeff(std::vector<int>(V.dim(), 0));
        auto cs = osc::make_clusters(data);
        double err = 0.0;
        for (const auto& c : cs.clusters)
            for (double e : c.energies)
                err = std::max(err, std::abs(e - (h * c.j - std::pow(h, 4) * b2 / 2 + h * h * C)));
        out.measured.emplace_back("linear_exact_error", err);
    }
    return out;
}

void cross_spectrum(Json& cfg, Violations& v)
{
    const Potential V = potential(cfg);
    basis_params(cfg, v, V);
    double C1, C2;
    if (wants(cfg, "closed_form_relative") && !isotropic_quadratic(V, C1, C2))
        v.add(".checks.closed_form_relative: needs V = C1 |x|^2 + C2");
    if (wants(cfg, "linear_exact_error") && !affine(V)) v.add(".checks.linear_exact_error: needs V of degree <= 1");
}

TaskOutput run_clusters(const Json& cfg)
{
    const Potential V = potential(cfg);
    auto data = spectrum_of(cfg, V);
    auto cs = has(cfg, "margin") && data.labels.empty() ? osc::detect_clusters(data, num(cfg, "margin"))
                                                         : osc::make_clusters(data);
    TaskOutput out;
    out.results["basis"] = basis_json(data.basis);
    out.results["max_deviation"] = cs.max_deviation;
    Json arr = Json::array();
    out.csv_header = {"level", "shift"};
    double shift_err = 0.0;
    const double expected = has(cfg, "expected_shift") ? num(cfg, "expected_shift") : 0.0;
    for (const auto& c : cs.clusters) {
        arr.push_back({{"j", c.j}, {"shifts", vec(c.shifts)}});
        for (double m : c.shifts) {
            out.csv_rows.push_back({double(c.j), m});
            shift_err = std::max(shift_err, std::abs(m - expected));
        }
    }
    out.results["clusters"] = arr;
    out.measured.emplace_back("max_deviation", cs.max_deviation);
    if (wants(cfg, "shift_value")) out.measured.emplace_back("shift_value", shift_err);
    if (has(cfg, "width_hbars")) {
        auto hs = nums(cfg, "width_hbars");
        auto ws = osc::cluster_width_scan(V, num(cfg, "width_energy"), hs, num(cfg, "trust_fraction"));
        Json wj = Json::array();
        double dev = 0.0;
        for (std::size_t i = 0; i < ws.size(); ++i) {
            wj.push_back({{"hbar", ws[i].hbar}, {"level", ws[i].j}, {"width", ws[i].width}});
            if (i > 0) {
                const double expect = std::pow(ws[i].hbar / ws[i - 1].hbar, 2);
                dev = std::max(dev, std::abs(ws[i].width / ws[i - 1].width / expect - 1.0));
            }
        }
        out.results["widths"] = wj;
        out.results["width_ratio_deviation"] = dev;
        out.measured.emplace_back("width_ratio", dev);
    }
    return out;
}

void cross_clusters(Json& cfg, Violations& v)
{
    const Potential V = potential(cfg);
    basis_params(cfg, v, V);
    if (wants(cfg, "shift_value") && !has(cfg, "expected_shift"))
        v.add(".checks.shift_value: needs params.expected_shift");
    if (has(cfg, "width_hbars") && !geometric(nums(cfg, "width_hbars")))
        v.add(".params.width_hbars: hbar grid must be geometric with at least two points");
    if (wants(cfg, "width_ratio") && !has(cfg, "width_hbars")) v.add(".checks.width_ratio: needs params.width_hbars");
    if (num(cfg, "margin") >= 1.0) v.add(".params.margin: must be below 1");
    if (num(cfg, "trust_fraction") >= 1.0) v.add(".params.trust_fraction: must be below 1");
}

TaskOutput run_invariant_first(const Json& cfg)
{
    const Potential V = potential(cfg);
    const auto w = weight(P(cfg, "weight"));
    const Poly1 phi = poly(P(cfg, "phi"));
    TaskOutput out;
    const double closed = inv::band_invariant_first(V, w, phi);
    out.results["value"] = closed;
    out.results["average"] = io::to_json(averaging::average_poly(V));
    if (wants(cfg, "closed_vs_quadrature")) {
        const double quad = inv::band_invariant_first(V, w, as_fn(phi));
        out.results["quadrature_value"] = quad;
        out.measured.emplace_back("closed_vs_quadrature", rel(quad, closed));
    }
    return out;
}

void cross_invariant_first(Json& cfg, Violations& v)
{
    check_weight(cfg, v);
    if (wants(cfg, "closed_vs_quadrature") && potential(cfg).dim() > 2)
        v.add(".checks.closed_vs_quadrature: sphere quadrature supports n <= 2");
}

TaskOutput run_invariant_second(const Json& cfg)
{
    const Potential V = potential(cfg);
    const auto sign =
        str(cfg, "sign") == "plus_average" ? inv::SymbolSign::plus_average : inv::SymbolSign::minus_average;
    auto parts = inv::second_invariant(V, inv::WeightSpec::gaussian(num(cfg, "mu")), integer(cfg, "l"), sign);
    TaskOutput out;
    out.results["delta_term"] = parts.delta_term;
    out.results["b2_term"] = parts.b2_term;
    out.results["power_term"] = parts.power_term;
    out.results["symbol_term"] = parts.symbol_term;
    out.results["total"] = parts.total();
    out.results["delta_average"] = io::to_json(averaging::delta_average(V));
    return out;
}

TaskOutput run_invariant_odd(const Json& cfg)
{
    const Potential V = potential(cfg);
    TaskOutput out;
    out.results["value"] = inv::odd_invariant(V, weight(P(cfg, "weight")), poly(P(cfg, "phi")));
    out.results["delta_average"] = io::to_json(averaging::delta_average(V));
    return out;
}

void cross_invariant_odd(Json& cfg, Violations& v)
{
    check_weight(cfg, v);
    if (!potential(cfg).is_odd()) v.add(".potential: invariant-odd needs an odd potential");
}

TaskOutput run_szego(const Json& cfg)
{
    const Potential V = potential(cfg);
    auto samples = inv::szego_compare(V, num(cfg, "E"), as_fn(poly(P(cfg, "phi"))), ints(cfg, "Ns"),
                                      P(cfg, "odd_rescale").get<bool>());
    TaskOutput out;
    Json arr = Json::array();
    out.csv_header = {"N", "hbar", "cluster_mean", "invariant", "gap"};
    double worst_ratio = 0.0;
    int increases = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        arr.push_back({{"N", s.N}, {"hbar", s.hbar}, {"cluster_mean", s.cluster_mean}, {"invariant", s.invariant},
                       {"gap", s.gap}});
        out.csv_rows.push_back({double(s.N), s.hbar, s.cluster_mean, s.invariant, s.gap});
        if (i > 0) {
            const double prev = samples[i - 1].gap;
            const double r = s.gap == 0.0 ? 0.0 : (prev == 0.0 ? INFINITY : s.gap / prev);
            worst_ratio = std::max(worst_ratio, r);
            if (s.gap > prev) ++increases;
        }
    }
    const auto& last = samples.back();
    const double relgap = last.gap == 0.0 ? 0.0 : (last.invariant == 0.0 ? INFINITY : last.gap / std::abs(last.invariant));
    out.results["samples"] = arr;
    out.results["invariant"] = last.invariant;
    out.results["invariant_nonzero"] = last.invariant != 0.0;
    out.measured.emplace_back("gap_ratio", worst_ratio);
    out.measured.emplace_back("gap_increases", increases);
    out.measured.emplace_back("final_gap", last.gap);
    out.measured.emplace_back("final_gap_relative", relgap);
    return out;
}

void cross_szego(Json& cfg, Violations& v)
{
    auto Ns = ints(cfg, "Ns");
    for (std::size_t i = 1; i < Ns.size(); ++i)
        if (Ns[i] <= Ns[i - 1]) v.add(".params.Ns: must be strictly increasing");
    if (P(cfg, "odd_rescale").get<bool>() && !potential(cfg).is_odd())
        v.add(".params.odd_rescale: needs an odd potential");
    if (potential(cfg).dim() > 2) v.add(".potential: sphere quadrature supports n <= 2");
}

TaskOutput run_fit(const Json& cfg)
{
    const Potential V = potential(cfg);
    const std::string q = str(cfg, "quantity");
    const auto w = weight(P(cfg, "weight"));
    const int l = integer(cfg, "l");
    Poly1 phi;
    if (q == "second") {
        phi.c.assign(l + 2, 0.0);
        phi.c[l + 1] = 1.0;
    } else {
        phi = poly(P(cfg, "phi"));
    }
    auto ts = inv::trace_series(V, w, as_fn(phi), nums(cfg, "hbars"), q == "odd", num(cfg, "trust_fraction"));
    auto fit = inv::expansion_fit(ts.hbars, ts.values, ints(cfg, "orders"), num(cfg, "max_condition"));
    TaskOutput out;
    out.results["hbars"] = vec(ts.hbars);
    out.results["values"] = vec(ts.values);
    out.results["fit"] = {{"orders", fit.orders},
                          {"coefficients", vec(fit.coefficients)},
                          {"residual", fit.residual},
                          {"condition_number", fit.condition_number}};
    out.csv_header = {"hbar", "value"};
    for (std::size_t i = 0; i < ts.hbars.size(); ++i) out.csv_rows.push_back({ts.hbars[i], ts.values[i]});
    Json refs = Json::object();
    if (q == "odd") {
        const double ref = inv::odd_invariant(V, w, phi);
        refs["odd"] = ref;
        out.measured.emplace_back("odd_relative", rel(fit.coefficient(0), ref));
    } else {
        const double first = inv::band_invariant_first(V, w, phi);
        refs["first"] = first;
        out.measured.emplace_back("c0_relative", rel(fit.coefficient(0), first));
        if (q == "second") {
            const auto sign =
                str(cfg, "sign") == "plus_average" ? inv::SymbolSign::plus_average : inv::SymbolSign::minus_average;
            const double second = inv::second_invariant(V, w, l, sign).total();
            refs["second"] = second;
            out.measured.emplace_back("c2_relative", rel(fit.coefficient(2), second));
        }
    }
    const auto& orders = fit.orders;
    if (std::find(orders.begin(), orders.end(), 1) != orders.end())
        out.measured.emplace_back("c1_relative", std::abs(fit.coefficient(1)) /
                                                     std::max(std::abs(fit.coefficient(0)), 1e-300));
    out.results["references"] = refs;
    return out;
}

void cross_fit(Json& cfg, Violations& v)
{
    const std::string q = str(cfg, "quantity");
    check_weight(cfg, v, q == "second");
    const Potential V = potential(cfg);
    if (q == "odd" && !V.is_odd()) v.add(".params.quantity: odd needs an odd potential");
    if (q == "second" && has(cfg, "phi")) v.add(".params.phi: the second invariant fixes phi = s^(l+1)");
    if (q != "second" && integer(cfg, "l") != 0) v.add(".params.l: only used with quantity second");
    if (!has(cfg, "phi") && q != "second") cfg["params"]["phi"] = Json::array({0.0, 1.0});
    if (!(num(cfg, "ratio") < 1.0)) v.add(".params.ratio: must lie in (0, 1)");
    if (!has(cfg, "hbars")) {
        if (num(cfg, "ratio") < 1.0)
            cfg["params"]["hbars"] = inv::geometric_grid(num(cfg, "hbar_max"), num(cfg, "ratio"), integer(cfg, "count"));
    } else if (!geometric(nums(cfg, "hbars"))) {
        v.add(".params.hbars: hbar grid must be geometric");
    }
    auto orders = ints(cfg, "orders");
    for (std::size_t i = 1; i < orders.size(); ++i)
        if (orders[i] <= orders[i - 1]) v.add(".params.orders: must be strictly increasing");
    if (orders.front() != 0) v.add(".params.orders: must include order 0");
    if (has(cfg, "hbars") && P(cfg, "hbars").size() < std::max<std::size_t>(5, orders.size()))
        v.add(".params.hbars: need at least max(5, number of orders) points");
    auto need = [&](const char* check, const char* why, bool ok) {
        if (wants(cfg, check) && !ok) v.add(std::string(".checks.") + check + ": " + why);
    };
    need("c0_relative", "not available for quantity odd", q != "odd");
    need("c2_relative", "needs quantity second with order 2 fitted",
         q == "second" && std::find(orders.begin(), orders.end(), 2) != orders.end());
    need("odd_relative", "needs quantity odd", q == "odd");
    need("c1_relative", "needs order 1 in the fit", std::find(orders.begin(), orders.end(), 1) != orders.end());
    if (V.dim() > 2) v.add(".potential: trace series support n <= 2");
}

double sup_error_on(const std::vector<double>& s, const std::vector<double>& Vs, const Potential& V)
{
    double e = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) e = std::max(e, std::abs(Vs[i] - V.evaluate({s[i]})));
    return e;
}

double interp_linear(const std::vector<double>& x, const std::vector<double>& y, double t)
{
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double u = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return (1 - u) * y[i - 1] + u * y[i];
}

TaskOutput run_even1d(const Json& cfg)
{
    const Potential V = potential(cfg);
    const double R = num(cfg, "R");
    const bool quantum = str(cfg, "source") == "quantum";
    rec::ProfileSamples data = quantum ? rec::quantum_even1d_samples(V, num(cfg, "hbar"), R)
                                       : rec::classical_even1d_samples(V, R, integer(cfg, "count"));
    auto rep = rec::recover_even_1d(data, num(cfg, "residual_tol"));
    TaskOutput out;
    out.results["recovery"] = io::to_json(rep);
    const auto& s = rep.series.at("s");
    const auto& Vr = rep.series.at("V");
    out.csv_header = {"s", "V"};
    for (std::size_t i = 0; i < s.size(); ++i) out.csv_rows.push_back({s[i], Vr[i]});
    const double sup = sup_error_on(s, Vr, V);
    out.results["sup_error"] = sup;
    out.measured.emplace_back("sup_error", sup);
    out.measured.emplace_back("forward_residual", rep.residuals.at("forward"));
    if (quantum && wants(cfg, "quantum_gap_ratio")) {
        auto cl = rec::recover_even_1d(rec::classical_even1d_samples(V, R, integer(cfg, "count")));
        double diff = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            diff = std::max(diff, std::abs(Vr[i] - interp_linear(cl.series.at("s"), cl.series.at("V"), s[i])));
        const double E = 0.5 * R * R;
        const int N = static_cast<int>(std::lround(E / num(cfg, "hbar")));
        auto sz = inv::szego_compare(V, E, [](double x) { return x; }, {N});
        out.results["classical_difference"] = diff;
        out.results["szego"] = {{"N", N}, {"E", E}, {"gap", sz[0].gap}};
        out.measured.emplace_back("quantum_gap_ratio", diff / sz[0].gap);
    }
    return out;
}

void cross_even1d(Json& cfg, Violations& v)
{
    const Potential V = potential(cfg);
    if (V.dim() != 1 || !V.is_even()) v.add(".potential: recover-even1d needs an even potential in one variable");
    if (wants(cfg, "quantum_gap_ratio") && str(cfg, "source") != "quantum")
        v.add(".checks.quantum_gap_ratio: needs source quantum");
    if (integer(cfg, "count") < 4) v.add(".params.count: need at least 4 radii");
}

TaskOutput run_odd1d(const Json& cfg)
{
    const Potential V = potential(cfg);
    auto rep = rec::recover_odd_1d(rec::classical_oracle(V), integer(cfg, "D"), num(cfg, "nu"), num(cfg, "tol"));
    TaskOutput out;
    out.results["recovery"] = io::to_json(rep);
    double best = INFINITY;
    for (double sgn : {1.0, -1.0}) {
        double e = 0.0;
        for (std::size_t i = 0; i < rep.values.size(); ++i)
            e = std::max(e, std::abs(rep.values[i] - sgn * V.coeff({int(2 * i + 1)})));
        best = std::min(best, e);
    }
    out.results["coefficient_error"] = best;
    out.measured.emplace_back("coefficient_error", best);
    return out;
}

void cross_odd1d(Json& cfg, Violations& v)
{
    const Potential V = potential(cfg);
    if (V.dim() != 1 || !V.is_odd()) v.add(".potential: recover-odd1d needs an odd potential in one variable");
    if (!has(cfg, "D")) cfg["params"]["D"] = std::max(1, V.degree());
    if (integer(cfg, "D") < V.degree()) v.add(".params.D: below the degree of the potential");
}

Eigen::VectorXd hessian_eigenvalues(const Potential& V)
{
    const int n = V.dim();
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            std::vector<int> a(n, 0);
            a[i] += 1;
            a[j] += 1;
            Q(i, j) = i == j ? V.coeff(a) : 0.5 * V.coeff(a);
        }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).eigenvalues();
}

TaskOutput run_hessian(const Json& cfg)
{
    const Potential V = potential(cfg);
    auto oracle = rec::classical_oracle(V);
    TaskOutput out;
    if (str(cfg, "quantity") == "linear-norm") {
        auto rep = rec::recover_linear_norm(oracle, num(cfg, "nu"), num(cfg, "class_tol"));
        double g2 = 0.0;
        for (int i = 0; i < V.dim(); ++i) {
            std::vector<int> a(V.dim(), 0);
            a[i] = 1;
            g2 += V.coeff(a) * V.coeff(a);
        }
        out.results["recovery"] = io::to_json(rep);
        out.results["expected"] = g2;
        out.measured.emplace_back("norm_error", std::abs(rep.values[0] - g2));
        return out;
    }
    auto rep = rec::recover_hessian(oracle, num(cfg, "nu"));
    auto truth = hessian_eigenvalues(V);
    double err = 0.0;
    for (int i = 0; i < truth.size(); ++i) err = std::max(err, std::abs(rep.values[i] - truth(i)));
    out.results["recovery"] = io::to_json(rep);
    out.results["expected"] = vec(std::vector<double>(truth.data(), truth.data() + truth.size()));
    out.measured.emplace_back("eigenvalue_error", err);
    if (wants(cfg, "laplace_relative")) {
        const double mu = num(cfg, "laplace_mu");
        double closed = 1.0;
        for (int i = 0; i < truth.size(); ++i) closed *= std::numbers::pi / (mu - truth(i));
        const double series = rec::hessian_laplace_value(rep.values, mu);
        out.results["laplace"] = {{"mu", mu}, {"series", series}, {"closed_form", closed}};
        out.measured.emplace_back("laplace_relative", rel(series, closed));
    }
    return out;
}

void cross_hessian(Json& cfg, Violations& v)
{
    const Potential V = potential(cfg);
    const bool lin = str(cfg, "quantity") == "linear-norm";
    if (wants(cfg, "norm_error") && !lin) v.add(".checks.norm_error: needs quantity linear-norm");
    if ((wants(cfg, "eigenvalue_error") || wants(cfg, "laplace_relative")) && lin)
        v.add(".checks: eigenvalue checks need quantity hessian");
    if (wants(cfg, "laplace_relative")) {
        auto ev = hessian_eigenvalues(V);
        if (!(num(cfg, "laplace_mu") > ev.maxCoeff()))
            v.add(".params.laplace_mu: must exceed the largest eigenvalue of the quadratic form");
    }
}

TaskOutput run_separable(const Json& cfg)
{
    const Potential V = potential(cfg);
    rec::SeparableOptions opt;
    opt.moments = integer(cfg, "moments");
    opt.nodes = integer(cfg, "nodes");
    opt.fit_degree = integer(cfg, "fit_degree");
    opt.genericity_tol = num(cfg, "genericity_tol");
    auto rep = rec::recover_separable(rec::classical_oracle(V), num(cfg, "R"), integer(cfg, "count"), opt);
    TaskOutput out;
    out.results["recovery"] = io::to_json(rep);
    const double c = V.coeff({0, 0});
    auto profile = [&](int axis, double s) {
        double acc = 0.0;
        for (const auto& [alpha, coef] : V.terms())
            if (alpha[1 - axis] == 0 && alpha[axis] > 0) acc += coef * std::pow(s, alpha[axis] / 2);
        return acc;
    };
    const auto& s = rep.series.at("s");
    double best = INFINITY;
    for (int swap = 0; swap < 2; ++swap) {
        double e = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            e = std::max(e, std::abs(rep.series.at("f1")[i] - (c + profile(swap, s[i]))));
            e = std::max(e, std::abs(rep.series.at("f2")[i] - profile(1 - swap, s[i])));
        }
        best = std::min(best, e);
    }
    out.csv_header = {"s", "f1", "f2"};
    for (std::size_t i = 0; i < s.size(); ++i)
        out.csv_rows.push_back({s[i], rep.series.at("f1")[i], rep.series.at("f2")[i]});
    out.results["profile_error"] = best;
    out.measured.emplace_back("profile_error", best);
    return out;
}

void cross_separable(Json& cfg, Violations& v)
{
    const Potential V = potential(cfg);
    if (V.dim() != 2 || !V.is_even_each() || !osc::is_separable(V))
        v.add(".potential: recover-separable needs V = f1(x1^2) + f2(x2^2) in two variables");
    if (integer(cfg, "count") < 4) v.add(".params.count: need at least 4 radii");
    if (integer(cfg, "moments") < 4) v.add(".params.moments: need at least 4");
    if (integer(cfg, "nodes") < 10) v.add(".params.nodes: need at least 10");
}

double coefficient_gap(const Potential& a, const Potential& b)
{
    double e = 0.0;
    for (const auto& [alpha, c] : a.terms()) e = std::max(e, std::abs(c - b.coeff(alpha)));
    for (const auto& [alpha, c] : b.terms()) e = std::max(e, std::abs(c - a.coeff(alpha)));
    return e;
}

Potential even_each_part(const Potential& V)
{
    Potential out(V.dim());
    for (const auto& [alpha, c] : V.terms())
        if (std::all_of(alpha.begin(), alpha.end(), [](int a) { return a % 2 == 0; })) out.add_term(alpha, c);
    return out;
}

TaskOutput run_2d(const Json& cfg)
{
    const Potential V = potential(cfg);
    auto rep = rec::recover_analytic_2d(rec::classical_oracle(V), integer(cfg, "D"), num(cfg, "nu"));
    TaskOutput out;
    out.results["recovery"] = io::to_json(rep);
    const double e = coefficient_gap(*rep.potential, V);
    out.results["coefficient_error"] = e;
    out.measured.emplace_back("coefficient_error", e);
    return out;
}

void cross_2d(Json& cfg, Violations& v)
{
    const Potential V = potential(cfg);
    if (V.dim() != 2 || !V.is_even_each()) v.add(".potential: recover-2d needs V even in each of two variables");
    if (!has(cfg, "D")) cfg["params"]["D"] = std::max(2, V.degree());
    if (integer(cfg, "D") < V.degree()) v.add(".params.D: below the degree of the potential");
    if (integer(cfg, "D") % 2 != 0) v.add(".params.D: must be even");
}

TaskOutput run_semiclassical(const Json& cfg)
{
    const auto Vs = io::semiclassical_from_json(cfg.at("semiclassical"));
    const int K = integer(cfg, "K");
    auto rep = rec::recover_semiclassical_2d(rec::classical_oracle(Vs), integer(cfg, "D"), K);
    TaskOutput out;
    out.results["recovery"] = io::to_json(rep);
    double e = 0.0;
    for (int k = 0; k <= K; ++k) {
        const Potential truth = k < static_cast<int>(Vs.orders.size()) ? even_each_part(Vs.orders[k]) : Potential(2);
        e = std::max(e, coefficient_gap(rep.semiclassical->orders.at(k), truth));
    }
    out.results["coefficient_error"] = e;
    out.measured.emplace_back("coefficient_error", e);
    return out;
}

void cross_semiclassical(Json& cfg, Violations& v)
{
    const auto Vs = io::semiclassical_from_json(cfg.at("semiclassical"));
    if (Vs.dim() != 2) v.add(".semiclassical: recover-semiclassical needs two variables");
    if (!Vs.orders[0].is_even_each()) v.add(".semiclassical.orders[0]: V0 must be even in each variable");
    int deg = 0;
    for (const auto& V : Vs.orders) deg = std::max(deg, V.degree());
    if (!has(cfg, "D")) cfg["params"]["D"] = std::max(2, deg + deg % 2);
    if (!has(cfg, "K")) cfg["params"]["K"] = static_cast<int>(Vs.orders.size()) - 1;
    if (integer(cfg, "D") < deg) v.add(".params.D: below the degree of the potential");
    if (integer(cfg, "D") % 2 != 0) v.add(".params.D: must be even");
}

TaskOutput run_rigidity(const Json& cfg)
{
    auto r = rec::rigidity_svd(num(cfg, "a"), num(cfg, "b"), integer(cfg, "D"));
    TaskOutput out;
    out.results = {{"sigma_min", r.sigma_min}, {"sigma_max", r.sigma_max}, {"columns", r.columns}, {"rows", r.rows}};
    out.measured.emplace_back("sigma_min_above", r.sigma_min);
    out.measured.emplace_back("sigma_min_below", r.sigma_min);
    return out;
}

void cross_rigidity(Json& cfg, Violations& v)
{
    if (integer(cfg, "D") % 2 != 0) v.add(".params.D: must be even");
}

TaskOutput run_audit(const Json& cfg)
{
    TaskOutput out;
    Json arr = Json::array();
    int failures = 0;
    for (const auto& name : P(cfg, "audits").get<std::vector<std::string>>()) {
        auto a = audits::run_named(name);
        Json checks = Json::array();
        for (const auto& c : a.checks) {
            checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", number(c.value)}, {"threshold", c.threshold}});
            failures += !c.pass;
        }
        arr.push_back({{"audit", a.name}, {"pass", a.pass()}, {"checks", checks}});
    }
    out.results["audits"] = arr;
    out.measured.emplace_back("audit_failures", failures);
    return out;
}

// ------------------------------------------------------------------ table

ParamSpec pos(const char* n, double d) { return {n, Kind::positive, d}; }
ParamSpec intp(const char* n, int d, int lo = 0) { return {n, Kind::integer, d, {}, lo}; }
ParamSpec opt(const char* n, Kind k, int lo = 0) { return {n, k, Json(), {}, lo, true}; }
ParamSpec choice(const char* n, const char* d, std::vector<std::string> cs) { return {n, Kind::string, d, cs}; }
ParamSpec gaussian_weight() { return {"weight", Kind::object, Json{{"kind", "gaussian"}, {"mu", 1.0}}}; }
ParamSpec phi_param() { return {"phi", Kind::number_list, Json::array({0.0, 1.0})}; }

std::vector<ParamSpec> basis_specs()
{
    return {pos("hbar", 0.1), intp("J", 100, 2), opt("J_trust", Kind::integer, 1),
            choice("backend", "auto", {"auto", "dense", "separable"})};
}

std::vector<TaskSpec> build_table()
{
    using R = Relation;
    std::vector<TaskSpec> t;

    t.push_back({"spectrum", Input::potential, basis_specs(),
                 {{"closed_form_relative", R::at_most, "max relative error against the quadratic closed form"},
                  {"linear_exact_error", R::at_most, "max error against the exact affine spectrum"}},
                 cross_spectrum, run_spectrum});

    auto cl = basis_specs();
    cl.push_back(pos("margin", 0.1));
    cl.push_back(opt("expected_shift", Kind::number));
    cl.push_back(pos("width_energy", 1.0));
    cl.push_back(opt("width_hbars", Kind::number_list));
    cl.push_back(pos("trust_fraction", 0.6));
    t.push_back({"clusters", Input::potential, cl,
                 {{"shift_value", R::at_most, "max |mu - expected_shift|"},
                  {"width_ratio", R::at_most, "max |width ratio / hbar ratio^2 - 1|"},
                  {"max_deviation", R::at_most, "max |E - hbar j| / hbar"}},
                 cross_clusters, run_clusters});

    t.push_back({"invariant-first", Input::potential, {gaussian_weight(), phi_param()},
                 {{"closed_vs_quadrature", R::at_most, "relative gap between closed form and quadrature"}},
                 cross_invariant_first, run_invariant_first});

    t.push_back({"invariant-second", Input::potential,
                 {pos("mu", 1.0), intp("l", 0), choice("sign", "minus_average", {"minus_average", "plus_average"})},
                 {}, nullptr, run_invariant_second});

    t.push_back({"invariant-odd", Input::potential, {gaussian_weight(), phi_param()}, {}, cross_invariant_odd,
                 run_invariant_odd});

    t.push_back({"szego", Input::potential,
                 {pos("E", 1.0), phi_param(), {"Ns", Kind::integer_list, Json::array({20, 40, 80}), {}, 1},
                  {"odd_rescale", Kind::boolean, false}},
                 {{"gap_ratio", R::at_most, "max gap(N_{i+1}) / gap(N_i)"},
                  {"gap_increases", R::at_most, "number of N steps where the gap grows"},
                  {"final_gap", R::at_most, "gap at the largest N"},
                  {"final_gap_relative", R::at_most, "gap at the largest N over |sphere invariant|"}},
                 cross_szego, run_szego});

    t.push_back({"fit-expansion", Input::potential,
                 {choice("quantity", "first", {"first", "second", "odd"}), gaussian_weight(),
                  opt("phi", Kind::number_list), intp("l", 0),
                  choice("sign", "minus_average", {"minus_average", "plus_average"}), opt("hbars", Kind::number_list),
                  pos("hbar_max", 0.1), pos("ratio", 0.8), intp("count", 8, 5),
                  {"orders", Kind::integer_list, Json::array({0, 1, 2, 4})}, pos("trust_fraction", 0.6),
                  pos("max_condition", 1e8)},
                 {{"c0_relative", R::at_most, "|c0 - first invariant| / |first invariant|"},
                  {"c1_relative", R::at_most, "|c1| / |c0|"},
                  {"c2_relative", R::at_most, "|c2 - second invariant| / |second invariant|"},
                  {"odd_relative", R::at_most, "|c0 - odd invariant| / |odd invariant|"}},
                 cross_fit, run_fit});

    t.push_back({"recover-even1d", Input::potential,
                 {choice("source", "classical", {"classical", "quantum"}), pos("R", 2.0), intp("count", 400, 4),
                  pos("hbar", 0.025), pos("residual_tol", 1e-2)},
                 {{"sup_error", R::at_most, "sup |V_recovered - V| on the recovered grid"},
                  {"forward_residual", R::at_most, "relative forward Abel residual"},
                  {"quantum_gap_ratio", R::at_most, "sup |V_quantum - V_classical| / Szego gap"}},
                 cross_even1d, run_even1d});

    t.push_back({"recover-odd1d", Input::potential, {opt("D", Kind::integer, 1), pos("nu", 1.0), pos("tol", 1e-9)},
                 {{"coefficient_error", R::at_most, "max coefficient error up to a global sign"}}, cross_odd1d,
                 run_odd1d});

    t.push_back({"recover-hessian", Input::potential,
                 {choice("quantity", "hessian", {"hessian", "linear-norm"}), pos("nu", 1.0), pos("laplace_mu", 5.0),
                  pos("class_tol", 1e-9)},
                 {{"eigenvalue_error", R::at_most, "max error of the quadratic-form eigenvalues"},
                  {"laplace_relative", R::at_most, "moment-series Laplace value against the closed form"},
                  {"norm_error", R::at_most, "| |grad V(0)|^2 recovered - exact |"}},
                 cross_hessian, run_hessian});

    t.push_back({"recover-separable", Input::potential,
                 {pos("R", 2.0), intp("count", 40, 4), intp("moments", 12, 4), intp("nodes", 200, 10),
                  intp("fit_degree", 6, 1), pos("genericity_tol", 1e-4)},
                 {{"profile_error", R::at_most, "max profile error, best over the swap"}}, cross_separable,
                 run_separable});

    t.push_back({"recover-2d", Input::potential, {opt("D", Kind::integer, 2), pos("nu", 1.0)},
                 {{"coefficient_error", R::at_most, "max coefficient error"}}, cross_2d, run_2d});

    t.push_back({"recover-semiclassical", Input::semiclassical,
                 {opt("D", Kind::integer, 2), opt("K", Kind::integer, 0)},
                 {{"coefficient_error", R::at_most, "max coefficient error over orders 0..K (even-in-each parts)"}},
                 cross_semiclassical, run_semiclassical});

    t.push_back({"rigidity", Input::none, {pos("a", 1.0), pos("b", 3.0), intp("D", 6, 0)},
                 {{"sigma_min_above", R::above, "smallest singular value must exceed the threshold"},
                  {"sigma_min_below", R::at_most, "smallest singular value must not exceed the threshold"}},
                 cross_rigidity, run_rigidity});

    std::vector<std::string> names = audits::audit_names();
    t.push_back({"convention-audit", Input::none, {{"audits", Kind::string_list, Json(names), names}},
                 {{"audit_failures", R::at_most, "number of failed audit checks"}}, nullptr, run_audit});
    return t;
}

} // namespace

const std::vector<TaskSpec>& task_table()
{
    static const std::vector<TaskSpec> table = build_table();
    return table;
}

} // namespace oscbands::cli
