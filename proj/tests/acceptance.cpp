// Acceptance suite: one PASS/FAIL line per criterion.
// Thresholds live here and replace whatever the corpus files carry, so editing a
// corpus file cannot loosen a verdict. A criterion also fails when a run is missing,
// errors out, or exceeds its wall-time budget.

#include "runner.hpp"
#include "schema.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

using namespace oscbands::cli;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string file;
    /// run name -> pinned checks
    std::map<std::string, Json> checks;
    double budget_seconds; // <= 0: no budget
};

std::vector<Criterion> criteria()
{
    const Json audit = {{"audit_failures", 0}};
    return {
        {1, "c01_linear_anchor.json",
         {{"linear-spectrum-0.2", {{"linear_exact_error", 1e-9}}},
          {"linear-shifts-0.2", {{"shift_value", 1e-9}}},
          {"linear-spectrum-0.1", {{"linear_exact_error", 1e-9}}},
          {"linear-shifts-0.1", {{"shift_value", 1e-9}}},
          {"linear-spectrum-0.05", {{"linear_exact_error", 1e-9}}},
          {"linear-shifts-0.05", {{"shift_value", 1e-9}}},
          {"linear-delta-average", audit}},
         10},
        {2, "c02_quadratic_oracle.json",
         {{"quadratic-closed-form-n1", {{"closed_form_relative", 1e-10}}},
          {"quadratic-widths-n1", {{"width_ratio", 0.2}}},
          {"quadratic-closed-form-n2", {{"closed_form_relative", 1e-10}}},
          {"quadratic-widths-n2", {{"width_ratio", 0.2}}}},
         60},
        {3, "c03_szego.json",
         {{"szego-s", {{"gap_ratio", 0.7}, {"gap_increases", 0}, {"final_gap_relative", 0.05}}},
          {"szego-s2", {{"gap_ratio", 0.7}, {"gap_increases", 0}, {"final_gap_relative", 0.05}}}},
         600},
        {4, "c04_first_invariant.json",
         {{"first-x2", {{"c0_relative", 0.01}, {"c1_relative", 0.01}}},
          {"first-x1sq-3x2sq", {{"c0_relative", 0.01}, {"c1_relative", 0.01}}}},
         300},
        {5, "c05_second_invariant.json",
         {{"second-x2", {{"c2_relative", 0.1}}}, {"second-x1sq-3x2sq", {{"c2_relative", 0.1}}}},
         600},
        {6, "c06_odd_invariant.json", {{"odd-x3", {{"odd_relative", 0.05}}}, {"odd-x", {{"odd_relative", 1e-6}}}}, 0},
        {7, "c07_averaging_identities.json", {{"convention-audit", audit}}, 30},
        {8, "c08_moyal_identities.json", {{"convention-audit", audit}}, 10},
        {9, "c09_fourier_laws.json", {{"convention-audit", audit}}, 0},
        {10, "c10_inverse_round_trips.json",
         {{"even1d", {{"sup_error", 1e-3}}},
          {"odd1d-linear", {{"coefficient_error", 1e-6}}},
          {"odd1d-cubic", {{"coefficient_error", 1e-6}}},
          {"hessian", {{"eigenvalue_error", 1e-8}, {"laplace_relative", 1e-10}}},
          {"linear-norm", {{"norm_error", 1e-6}}},
          {"separable", {{"profile_error", 1e-2}}},
          {"analytic-2d", {{"coefficient_error", 1e-6}}},
          {"semiclassical-2d", {{"coefficient_error", 1e-6}}},
          {"rigidity-distinct", {{"sigma_min_above", 1e-8}}},
          {"rigidity-equal", {{"sigma_min_below", 1e-12}}}},
         300},
        {11, "c11_quantum_even1d.json", {{"recover-even1d", {{"quantum_gap_ratio", 2.0}}}}, 0},
    };
}

std::string fmt(double x)
{
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", x);
    return b;
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

Outcome evaluate(const Criterion& c, const fs::path& corpus)
{
    Outcome o;
    std::ifstream in(corpus / c.file);
    if (!in) return {false, "cannot read " + c.file};
    Json raw;
    try {
        raw = Json::parse(in);
    } catch (const std::exception& e) {
        return {false, c.file + ": " + e.what()};
    }
    Json runs = raw.contains("runs") ? raw["runs"] : Json::array({raw});

    std::map<std::string, bool> seen;
    double worst = 0.0;
    std::string worst_name;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        Json r = runs[i];
        const std::string name = r.value("name", r.value("task", std::string()));
        auto pin = c.checks.find(name);
        if (pin == c.checks.end()) continue;
        seen[name] = true;
        r["checks"] = pin->second;
        Violations v;
        Json cfg = normalize_run(r, "$.runs[" + std::to_string(i) + "]", v);
        if (!v.empty()) {
            o.pass = false;
            o.detail += " " + name + ": " + v.items.front() + ";";
            continue;
        }
        auto res = execute(cfg);
        if (res.code != kPass) {
            o.pass = false;
            o.detail += " " + name + ": " + res.report.value("status", std::string("?"));
            if (res.report.contains("error")) o.detail += " (" + res.report["error"].get<std::string>() + ")";
            o.detail += ";";
        }
        for (const auto& vd : res.report.value("verdicts", Json::array())) {
            if (!vd["value"].is_number()) continue;
            const double val = vd["value"].get<double>(), thr = vd["threshold"].get<double>();
            // margin: fraction of the bound used (for "above" checks, bound over value)
            const double used = vd["relation"] == "<=" ? (thr > 0 ? val / thr : (val > 0 ? INFINITY : 0.0))
                                                      : (val > 0 ? thr / val : INFINITY);
            if (used > worst || worst_name.empty()) {
                worst = used;
                worst_name = name + "." + vd["name"].get<std::string>() + "=" + fmt(val);
            }
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& [name, _] : c.checks)
        if (!seen.count(name)) {
            o.pass = false;
            o.detail += " missing run " + name + ";";
        }
    if (c.budget_seconds > 0 && secs >= c.budget_seconds) {
        o.pass = false;
        o.detail += " over budget;";
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, " time=%.1fs%s", secs,
                  c.budget_seconds > 0 ? (" (budget " + std::to_string(int(c.budget_seconds)) + "s)").c_str() : "");
    o.detail = " worst " + worst_name + " (" + fmt(worst) + " of bound)" + buf + o.detail;
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    fs::path corpus = argc > 1 ? fs::path(argv[1]) : fs::path(OSCBANDS_CORPUS_DIR);
    int failed = 0;
    for (const auto& c : criteria()) {
        auto o = evaluate(c, corpus);
        failed += !o.pass;
        std::printf("criterion %2d %s%s\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", int(criteria().size()) - failed, criteria().size());
    return failed == 0 ? 0 : 1;
}
