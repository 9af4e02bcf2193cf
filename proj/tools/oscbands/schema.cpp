#include "schema.hpp"

#include <cmath>
#include <set>

namespace oscbands::cli {

namespace {

std::string join(const std::vector<std::string>& xs)
{
    std::string out;
    for (const auto& x : xs) out += (out.empty() ? "" : ", ") + x;
    return out;
}

bool finite_number(const Json& j) { return j.is_number() && std::isfinite(j.get<double>()); }

bool type_ok(const ParamSpec& p, const Json& j, std::string& why)
{
    switch (p.kind) {
    case Kind::number:
        why = "expected a finite number";
        return finite_number(j);
    case Kind::positive:
        why = "expected a positive number";
        return finite_number(j) && j.get<double>() > 0.0;
    case Kind::integer:
        why = "expected an integer >= " + std::to_string(p.min_int);
        return j.is_number_integer() && j.get<long long>() >= p.min_int && j.get<long long>() < (1LL << 30);
    case Kind::number_list:
        why = "expected a non-empty array of finite numbers";
        if (!j.is_array() || j.empty()) return false;
        for (const auto& e : j)
            if (!finite_number(e)) return false;
        return true;
    case Kind::integer_list:
        why = "expected a non-empty array of integers >= " + std::to_string(p.min_int);
        if (!j.is_array() || j.empty()) return false;
        for (const auto& e : j)
            if (!e.is_number_integer() || e.get<long long>() < p.min_int || e.get<long long>() >= (1LL << 30))
                return false;
        return true;
    case Kind::string:
        why = p.choices.empty() ? "expected a string" : "expected one of: " + join(p.choices);
        if (!j.is_string()) return false;
        if (p.choices.empty()) return true;
        for (const auto& c : p.choices)
            if (c == j.get<std::string>()) return true;
        return false;
    case Kind::string_list:
        why = "expected a non-empty array of strings from: " + join(p.choices);
        if (!j.is_array() || j.empty()) return false;
        for (const auto& e : j) {
            if (!e.is_string()) return false;
            bool hit = false;
            for (const auto& c : p.choices) hit = hit || c == e.get<std::string>();
            if (!hit) return false;
        }
        return true;
    case Kind::boolean:
        why = "expected true or false";
        return j.is_boolean();
    case Kind::object:
        why = "expected an object";
        return j.is_object();
    }
    return false;
}

} // namespace

const TaskSpec* find_task(const std::string& name)
{
    for (const auto& t : task_table())
        if (t.name == name) return &t;
    return nullptr;
}

std::string task_list()
{
    std::vector<std::string> names;
    for (const auto& t : task_table()) names.push_back(t.name);
    return join(names);
}

Json normalize_run(const Json& raw, const std::string& prefix, Violations& v)
{
    const std::size_t before = v.items.size();
    if (!raw.is_object()) {
        v.add(prefix + ": run must be a JSON object");
        return Json();
    }
    static const std::set<std::string> top = {"name",   "task",   "potential",    "semiclassical",
                                              "params", "checks", "output", "record_timing"};
    for (auto it = raw.begin(); it != raw.end(); ++it)
        if (!top.count(it.key()))
            v.add(prefix + "." + it.key() + ": unknown field (allowed: name, task, potential, semiclassical, params, "
                                            "checks, output, record_timing)");
    if (!raw.contains("task") || !raw["task"].is_string()) {
        v.add(prefix + ".task: missing or not a string; allowed tasks: " + task_list());
        return Json();
    }
    const std::string task = raw["task"].get<std::string>();
    const TaskSpec* spec = find_task(task);
    if (!spec) {
        v.add(prefix + ".task: unknown task '" + task + "'; allowed tasks: " + task_list());
        return Json();
    }

    Json cfg;
    if (raw.contains("name") && !raw["name"].is_string()) v.add(prefix + ".name: expected a string");
    cfg["name"] = raw.contains("name") && raw["name"].is_string() ? raw["name"].get<std::string>() : task;
    cfg["task"] = task;

    const bool has_pot = raw.contains("potential"), has_semi = raw.contains("semiclassical");
    if (spec->input == Input::potential) {
        if (!has_pot) v.add(prefix + ".potential: required by task " + task);
        else {
            try {
                cfg["potential"] = io::to_json(io::potential_from_json(raw["potential"], prefix + ".potential"));
            } catch (const std::exception& e) {
                v.add(e.what());
            }
        }
        if (has_semi) v.add(prefix + ".semiclassical: not used by task " + task);
    } else if (spec->input == Input::semiclassical) {
        if (!has_semi) v.add(prefix + ".semiclassical: required by task " + task);
        else {
            try {
                cfg["semiclassical"] =
                    io::to_json(io::semiclassical_from_json(raw["semiclassical"], prefix + ".semiclassical"));
            } catch (const std::exception& e) {
                v.add(e.what());
            }
        }
        if (has_pot) v.add(prefix + ".potential: not used by task " + task);
    } else {
        if (has_pot || has_semi) v.add(prefix + ": task " + task + " takes no potential");
    }

    Json params = Json::object();
    Json given = raw.value("params", Json::object());
    if (!given.is_object()) {
        v.add(prefix + ".params: expected an object");
        given = Json::object();
    }
    std::vector<std::string> names;
    for (const auto& p : spec->params) names.push_back(p.name);
    for (auto it = given.begin(); it != given.end(); ++it) {
        bool known = false;
        for (const auto& p : spec->params) known = known || p.name == it.key();
        if (!known)
            v.add(prefix + ".params." + it.key() + ": unknown parameter for task " + task +
                  " (allowed: " + join(names) + ")");
    }
    for (const auto& p : spec->params) {
        const std::string path = prefix + ".params." + p.name;
        if (given.contains(p.name)) {
            std::string why;
            if (!type_ok(p, given[p.name], why)) v.add(path + ": " + why);
            params[p.name] = given[p.name];
        } else if (!p.fallback.is_null()) {
            params[p.name] = p.fallback;
        } else if (!p.optional) {
            v.add(path + ": required parameter is missing");
        }
    }
    cfg["params"] = params;

    Json checks = Json::object();
    if (raw.contains("checks")) {
        if (!raw["checks"].is_object()) v.add(prefix + ".checks: expected an object of thresholds");
        else {
            std::vector<std::string> allowed;
            for (const auto& c : spec->checks) allowed.push_back(c.name);
            for (auto it = raw["checks"].begin(); it != raw["checks"].end(); ++it) {
                bool known = false;
                for (const auto& c : spec->checks) known = known || c.name == it.key();
                if (!known)
                    v.add(prefix + ".checks." + it.key() + ": unknown check for task " + task + " (allowed: " +
                          (allowed.empty() ? std::string("none") : join(allowed)) + ")");
                else if (!finite_number(it.value()))
                    v.add(prefix + ".checks." + it.key() + ": threshold must be a finite number");
                checks[it.key()] = it.value();
            }
        }
    }
    cfg["checks"] = checks;

    Json output = {{"report", "report.json"}};
    if (raw.contains("output")) {
        const Json& o = raw["output"];
        if (!o.is_object()) v.add(prefix + ".output: expected an object");
        else {
            for (auto it = o.begin(); it != o.end(); ++it) {
                if (it.key() != "report" && it.key() != "csv")
                    v.add(prefix + ".output." + it.key() + ": unknown field (allowed: report, csv)");
                else if (!it.value().is_string() || it.value().get<std::string>().empty())
                    v.add(prefix + ".output." + it.key() + ": expected a non-empty file name");
                else output[it.key()] = it.value();
            }
        }
    }
    cfg["output"] = output;

    if (raw.contains("record_timing") && !raw["record_timing"].is_boolean())
        v.add(prefix + ".record_timing: expected true or false");
    cfg["record_timing"] = raw.value("record_timing", false) == true;

    if (v.items.size() == before && spec->cross) {
        Violations local;
        spec->cross(cfg, local);
        for (const auto& s : local.items) v.add(prefix + s);
    }
    return cfg;
}

Json normalize_config(const Json& raw, Violations& v)
{
    if (raw.is_object() && raw.contains("runs")) {
        for (auto it = raw.begin(); it != raw.end(); ++it)
            if (it.key() != "runs" && it.key() != "output")
                v.add("$." + it.key() + ": unknown field in a batch (allowed: runs, output)");
        const Json& runs = raw["runs"];
        if (!runs.is_array() || runs.empty()) {
            v.add("$.runs: expected a non-empty array");
            return Json();
        }
        Json out;
        out["runs"] = Json::array();
        std::set<std::string> seen;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const std::string prefix = "$.runs[" + std::to_string(i) + "]";
            Json cfg = normalize_run(runs[i], prefix, v);
            if (cfg.is_object() && cfg.contains("name")) {
                if (!seen.insert(cfg["name"].get<std::string>()).second)
                    v.add(prefix + ".name: duplicate run name '" + cfg["name"].get<std::string>() + "'");
            }
            out["runs"].push_back(cfg);
        }
        Json output = {{"report", "report.json"}};
        if (raw.contains("output")) {
            if (!raw["output"].is_object() || !raw["output"].contains("report") || !raw["output"]["report"].is_string())
                v.add("$.output: expected {\"report\": file name}");
            else output["report"] = raw["output"]["report"];
        }
        out["output"] = output;
        return out;
    }
    return normalize_run(raw, "$", v);
}

} // namespace oscbands::cli
