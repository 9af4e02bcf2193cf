#include "runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#ifndef OSCBANDS_VERSION
#define OSCBANDS_VERSION "0.0.0"
#endif

namespace oscbands::cli {

namespace fs = std::filesystem;

const char* version() { return OSCBANDS_VERSION; }

namespace {

const CheckSpec* find_check(const TaskSpec& t, const std::string& name)
{
    for (const auto& c : t.checks)
        if (c.name == name) return &c;
    return nullptr;
}

void write_csv(const fs::path& path, const TaskOutput& o)
{
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < o.csv_header.size(); ++i) f << (i ? "," : "") << o.csv_header[i];
    f << "\n" << std::setprecision(17);
    for (const auto& row : o.csv_rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
        f << "\n";
    }
}

struct Executed {
    RunResult result;
    TaskOutput output;
};

Executed execute_full(const Json& cfg)
{
    Executed ex;
    const TaskSpec* spec = find_task(cfg.at("task").get<std::string>());
    Json& rep = ex.result.report;
    rep["tool"] = "oscbands";
    rep["version"] = version();
    rep["name"] = cfg.at("name");
    rep["task"] = cfg.at("task");
    rep["config"] = cfg;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        ex.output = spec->run(cfg);
    } catch (const std::exception& e) {
        rep["status"] = "error";
        rep["error"] = e.what();
        rep["verdicts"] = Json::array();
        ex.result.code = kNumericError;
        if (cfg.at("record_timing").get<bool>())
            rep["wall_time_seconds"] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return ex;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep["results"] = ex.output.results;
    Json verdicts = Json::array();
    bool all = true;
    for (auto it = cfg.at("checks").begin(); it != cfg.at("checks").end(); ++it) {
        const CheckSpec* cs = find_check(*spec, it.key());
        const double thr = it.value().get<double>();
        bool found = false;
        double value = NAN;
        for (const auto& [k, v] : ex.output.measured)
            if (k == it.key()) found = true, value = v;
        if (!found) {
            rep["status"] = "error";
            rep["error"] = "check " + it.key() + " was not measured by task " + spec->name;
            ex.result.code = kNumericError;
            return ex;
        }
        const bool pass = cs->relation == Relation::at_most ? value <= thr : value > thr;
        all = all && pass;
        verdicts.push_back({{"name", it.key()},
                            {"pass", pass},
                            {"value", io::number(value)},
                            {"relation", cs->relation == Relation::at_most ? "<=" : ">"},
                            {"threshold", thr}});
    }
    rep["verdicts"] = verdicts;
    rep["status"] = all ? "pass" : "fail";
    ex.result.code = all ? kPass : kVerdictFail;
    if (cfg.at("record_timing").get<bool>()) rep["wall_time_seconds"] = wall;
    return ex;
}

void summary(std::ostream& out, const Json& rep)
{
    out << rep["name"].get<std::string>() << " [" << rep["task"].get<std::string>()
        << "]: " << rep["status"].get<std::string>();
    if (rep.contains("error")) out << " (" << rep["error"].get<std::string>() << ")";
    out << "\n";
    for (const auto& v : rep["verdicts"]) {
        out << "  " << (v["pass"].get<bool>() ? "pass " : "FAIL ") << v["name"].get<std::string>() << " = ";
        if (v["value"].is_null()) out << "nan";
        else out << v["value"].get<double>();
        out << " " << v["relation"].get<std::string>() << " " << v["threshold"].get<double>() << "\n";
    }
}

int worst(int a, int b)
{
    auto rank = [](int c) { return c == kNumericError ? 3 : c == kConfigError ? 2 : c; };
    return rank(a) >= rank(b) ? a : b;
}

} // namespace

RunResult execute(const Json& cfg) { return execute_full(cfg).result; }

bool load_config(const std::string& path, Json& cfg, std::ostream& err)
{
    std::ifstream f(path);
    if (!f) {
        err << "error: cannot read config file '" << path << "'\n";
        return false;
    }
    Json raw;
    try {
        raw = Json::parse(f);
    } catch (const std::exception& e) {
        err << "error: " << path << " is not valid JSON: " << e.what() << "\n";
        return false;
    }
    Violations v;
    cfg = normalize_config(raw, v);
    if (!v.empty()) {
        err << "error: " << v.items.size() << " schema violation(s) in " << path << "\n";
        for (const auto& s : v.items) err << "  " << s << "\n";
        return false;
    }
    return true;
}

int validate_file(const std::string& path, std::ostream& out, std::ostream& err)
{
    Json cfg;
    if (!load_config(path, cfg, err)) return kConfigError;
    out << "ok\n" << cfg.dump(2) << "\n";
    return kPass;
}

int run_file(const std::string& path, const std::string& out_dir, int threads, std::ostream& out, std::ostream& err)
{
    Json cfg;
    if (!load_config(path, cfg, err)) return kConfigError;
    const bool batch = cfg.contains("runs");
    std::vector<Json> runs;
    if (batch) {
        for (const auto& r : cfg["runs"]) runs.push_back(r);
    } else {
        runs.push_back(cfg);
    }

    std::vector<Executed> done(runs.size());
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(runs.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < runs.size(); ++i) done[i] = execute_full(runs[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < runs.size(); i = next++) done[i] = execute_full(runs[i]);
            });
        for (auto& th : pool) th.join();
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        err << "error: cannot create output directory '" << out_dir << "': " << ec.message() << "\n";
        return kConfigError;
    }
    int code = kPass;
    Json report;
    if (batch) {
        report["tool"] = "oscbands";
        report["version"] = version();
        report["runs"] = Json::array();
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        summary(out, done[i].result.report);
        code = worst(code, done[i].result.code);
        const Json& o = runs[i]["output"];
        if (o.contains("csv") && !done[i].output.csv_header.empty()) {
            try {
                write_csv(fs::path(out_dir) / o["csv"].get<std::string>(), done[i].output);
            } catch (const std::exception& e) {
                err << "error: " << e.what() << "\n";
                return kConfigError;
            }
        }
        if (batch) report["runs"].push_back(done[i].result.report);
        else report = done[i].result.report;
    }
    const fs::path rp = fs::path(out_dir) / cfg["output"]["report"].get<std::string>();
    std::ofstream f(rp);
    if (!f) {
        err << "error: cannot write report " << rp.string() << "\n";
        return kConfigError;
    }
    f << report.dump(2) << "\n";
    out << "report: " << rp.string() << "\n";
    return code;
}

} // namespace oscbands::cli
