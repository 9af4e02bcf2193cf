#pragma once

#include "oscbands/json_io.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace oscbands::cli {

using io::Json;

enum class Kind { number, positive, integer, number_list, integer_list, string, string_list, boolean, object };

struct ParamSpec {
    std::string name;
    Kind kind = Kind::number;
    /// null means required (or derived later by the task's cross-field hook).
    Json fallback;
    std::vector<std::string> choices = {};
    int min_int = 0;
    bool optional = false;
};

/// Verdict direction: value <= threshold, or value > threshold.
enum class Relation { at_most, above };

struct CheckSpec {
    std::string name;
    Relation relation = Relation::at_most;
    std::string meaning;
};

struct Violations {
    std::vector<std::string> items;
    void add(const std::string& s) { items.push_back(s); }
    bool empty() const { return items.empty(); }
};

/// Measured values per check name; a task may leave a requested check unmeasured
/// only by throwing.
struct TaskOutput {
    Json results = Json::object();
    std::vector<std::pair<std::string, double>> measured;
    /// Optional CSV table: header then rows.
    std::vector<std::string> csv_header;
    std::vector<std::vector<double>> csv_rows;
};

enum class Input { none, potential, semiclassical };

struct TaskSpec {
    std::string name;
    Input input = Input::potential;
    std::vector<ParamSpec> params;
    std::vector<CheckSpec> checks;
    /// Cross-field checks on the normalized config; may fill derived defaults.
    std::function<void(Json& cfg, Violations& v)> cross;
    std::function<TaskOutput(const Json& cfg)> run;
};

const std::vector<TaskSpec>& task_table();
const TaskSpec* find_task(const std::string& name);
std::string task_list();

/// Validates one run and returns it with every default filled in.
/// Violations are appended with a "runs[i]" style prefix.
Json normalize_run(const Json& raw, const std::string& prefix, Violations& v);

/// Validates a config file body (single run or {"runs":[...]}).
Json normalize_config(const Json& raw, Violations& v);

} // namespace oscbands::cli
