#include "runner.hpp"
#include "schema.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace oscbands::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag)
{
    fs::path d = fs::temp_directory_path() / ("oscbands_test_" + std::to_string(::getpid()) + "_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body)
{
    fs::path p = dir / name;
    std::ofstream(p) << body;
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const fs::path& cfg, const fs::path& out, int threads = 1)
{
    std::ostringstream o, e;
    return run_file(cfg.string(), out.string(), threads, o, e);
}

Json normalize(const std::string& body, Violations& v) { return normalize_config(Json::parse(body), v); }

bool mentions(const Violations& v, const std::string& s)
{
    for (const auto& i : v.items)
        if (i.find(s) != std::string::npos) return true;
    return false;
}

// Same keys and strings, numbers within a relative tolerance.
void compare(const Json& got, const Json& want, const std::string& path)
{
    CAPTURE(path);
    if (want.is_number() && got.is_number()) {
        const double a = got.get<double>(), b = want.get<double>();
        CHECK(std::abs(a - b) <= 1e-9 * std::max(std::abs(b), 1e-3));
        return;
    }
    REQUIRE(got.type() == want.type());
    if (want.is_object()) {
        REQUIRE(got.size() == want.size());
        for (auto it = want.begin(); it != want.end(); ++it) {
            REQUIRE(got.contains(it.key()));
            compare(got[it.key()], it.value(), path + "." + it.key());
        }
    } else if (want.is_array()) {
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) compare(got[i], want[i], path + "[" + std::to_string(i) + "]");
    } else {
        CHECK(got == want);
    }
}

const char* kLinear = R"({"name": "lin", "task": "clusters",
  "potential": {"dim": 1, "terms": [{"alpha": [1], "coeff": 1.0}]},
  "params": {"hbar": 0.1, "J": 60, "expected_shift": -0.005},
  "checks": {"shift_value": 1e-9}})";

} // namespace

TEST_CASE("validate fills defaults")
{
    Violations v;
    auto cfg = normalize(kLinear, v);
    CHECK(v.empty());
    CHECK(cfg["params"]["J_trust"] == 36);
    CHECK(cfg["params"]["backend"] == "auto");
    CHECK(cfg["output"]["report"] == "report.json");
    CHECK(cfg["record_timing"] == false);

    auto dir = scratch_dir("validate");
    std::ostringstream o, e;
    CHECK(validate_file(write_config(dir, "ok.json", kLinear).string(), o, e) == kPass);
    CHECK(o.str().rfind("ok\n", 0) == 0);
    CHECK(validate_file((dir / "missing.json").string(), o, e) == kConfigError);
    fs::remove_all(dir);
}

TEST_CASE("validate names each violation")
{
    Violations v;
    normalize(R"({"task": "spectrum", "potential": {"dim": 1, "terms": []}, "params": {"J": 40, "J_trust": 40}})", v);
    CHECK(mentions(v, "$.params.J_trust: must be smaller than J"));

    Violations u;
    normalize(R"({"task": "spectra", "colour": 1})", u);
    CHECK(mentions(u, "unknown task 'spectra'; allowed tasks: spectrum, clusters"));
    CHECK(mentions(u, "$.colour: unknown field"));

    Violations w;
    normalize(R"({"task": "spectrum", "potential": {"dim": 1, "terms": []},
                  "params": {"hbar": "big", "J": 2.5}, "checks": {"nope": 1}})", w);
    CHECK(mentions(w, "$.params.hbar"));
    CHECK(mentions(w, "$.params.J"));
    CHECK(mentions(w, "nope"));

    Violations g;
    normalize(R"({"task": "fit-expansion", "potential": {"dim": 1, "terms": [{"alpha": [2], "coeff": 1}]},
                  "params": {"hbars": [0.1, 0.09, 0.07, 0.05, 0.04]}})", g);
    CHECK(mentions(g, "geometric"));

    Violations b;
    normalize(R"({"runs": [{"name": "a", "task": "rigidity"}, {"name": "a", "task": "rigidity"}]})", b);
    CHECK(mentions(b, "duplicate"));
}

TEST_CASE("exit codes")
{
    auto dir = scratch_dir("codes");
    CHECK(run(write_config(dir, "pass.json", kLinear), dir / "p") == kPass);

    std::string fail = kLinear;
    fail.replace(fail.find("1e-9"), 4, "1e-30");
    CHECK(run(write_config(dir, "fail.json", fail), dir / "f") == kVerdictFail);
    auto rep = Json::parse(slurp(dir / "f" / "report.json"));
    CHECK(rep["status"] == "fail");
    CHECK(rep["verdicts"][0]["pass"] == false);

    CHECK(run(write_config(dir, "bad.json", R"({"task": "nothing"})"), dir / "b") == kConfigError);
    CHECK(run(write_config(dir, "broken.json", "{not json"), dir / "b") == kConfigError);
    CHECK(run(dir / "absent.json", dir / "b") == kConfigError);

    const char* numeric = R"({"name": "ill", "task": "fit-expansion",
      "potential": {"dim": 1, "terms": [{"alpha": [2], "coeff": 1.0}]},
      "params": {"hbar_max": 0.3, "ratio": 0.8, "count": 5, "max_condition": 1.0}})";
    CHECK(run(write_config(dir, "num.json", numeric), dir / "n") == kNumericError);
    auto nrep = Json::parse(slurp(dir / "n" / "report.json"));
    CHECK(nrep["status"] == "error");
    CHECK(nrep["error"].get<std::string>().find("ill-conditioned") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("reports are deterministic")
{
    auto dir = scratch_dir("determinism");
    const char* batch = R"({"runs": [
      {"name": "lin", "task": "clusters", "potential": {"dim": 1, "terms": [{"alpha": [1], "coeff": 1.0}]},
       "params": {"hbar": 0.1, "J": 60}},
      {"name": "rig", "task": "rigidity", "params": {"a": 1.0, "b": 3.0, "D": 4}},
      {"name": "odd", "task": "invariant-odd", "potential": {"dim": 1, "terms": [{"alpha": [3], "coeff": 1.0}]}}]})";
    auto cfg = write_config(dir, "batch.json", batch);
    REQUIRE(run(cfg, dir / "a") == kPass);
    REQUIRE(run(cfg, dir / "b") == kPass);
    REQUIRE(run(cfg, dir / "c", 3) == kPass);
    const auto a = slurp(dir / "a" / "report.json");
    CHECK(a == slurp(dir / "b" / "report.json"));
    CHECK(a == slurp(dir / "c" / "report.json"));
    CHECK(a.find("wall_time") == std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("timing is recorded only on request")
{
    auto dir = scratch_dir("timing");
    std::string body = kLinear;
    body.insert(body.rfind('}'), R"(, "record_timing": true, "output": {"report": "r.json", "csv": "t.csv"})");
    REQUIRE(run(write_config(dir, "t.json", body), dir) == kPass);
    auto rep = Json::parse(slurp(dir / "r.json"));
    CHECK(rep.contains("wall_time_seconds"));
    const auto csv = slurp(dir / "t.csv");
    CHECK(csv.rfind("level,shift", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("cli examples")
{
    SUBCASE("clusters of V = x")
    {
        Violations v;
        auto r = execute(normalize(kLinear, v));
        CHECK(r.code == kPass);
        for (const auto& c : r.report["results"]["clusters"])
            for (const auto& m : c["shifts"]) CHECK(std::abs(m.get<double>() + 0.005) <= 1e-9);
    }
    SUBCASE("szego with V = 0")
    {
        Violations v;
        auto cfg = normalize(R"({"task": "szego", "potential": {"dim": 1, "terms": []},
                                 "params": {"E": 1.0, "Ns": [10, 20]}, "checks": {"final_gap": 1e-12}})", v);
        REQUIRE(v.empty());
        auto r = execute(cfg);
        CHECK(r.code == kPass);
        for (const auto& s : r.report["results"]["samples"]) CHECK(s["gap"].get<double>() == 0.0);
    }
    SUBCASE("hessian of the (1, 3) corpus entry")
    {
        Violations v;
        auto cfg = normalize(R"({"task": "recover-hessian",
            "potential": {"dim": 2, "terms": [{"alpha": [2, 0], "coeff": 1.0}, {"alpha": [0, 2], "coeff": 3.0}]},
            "checks": {"eigenvalue_error": 1e-8}})", v);
        REQUIRE(v.empty());
        auto r = execute(cfg);
        CHECK(r.code == kPass);
        auto vals = r.report["results"]["recovery"]["recovered"]["values"];
        CHECK(std::abs(vals[0].get<double>() - 1.0) <= 1e-8);
        CHECK(std::abs(vals[1].get<double>() - 3.0) <= 1e-8);
    }
}

TEST_CASE("golden report")
{
    const fs::path data = OSCBANDS_TEST_DATA;
    auto dir = scratch_dir("golden");
    REQUIRE(run(data / "golden" / "examples.config.json", dir) == kPass);
    auto got = Json::parse(slurp(dir / "report.json"));
    auto want = Json::parse(slurp(data / "golden" / "examples.report.json"));
    compare(got, want, "$");
    fs::remove_all(dir);
}
