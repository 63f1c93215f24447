#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sheetmax/covariance.hpp"
#include "sheetmax/error.hpp"
#include "sheetmax/montecarlo.hpp"
#include "sheetmax/oracle.hpp"
#include "sheetmax/transform.hpp"

namespace sheetmax {

/// Scenario file contents after JSON decoding and expression parsing, before
/// any numeric check.
///
///     { "name": "...", "ambient_dim": n, "free_dims": d, "bounds": [y_1, ..],
///       "restriction": { "formulas": { "<axis>": "<expr>" },
///                        "deps":     { "<axis>": <free axis> },
///                        "factors":  [ "<z_1>", .. ] },
///       "drift": "<expr over s1..sn>",
///       "kernel": [ { "u": "<expr>", "v": "<expr>" }, .. ] }   // optional
struct ScenarioDocument {
    std::string name;
    RestrictionSpec restriction;
    Expr drift = Expr::literal(0.0);
    std::optional<std::vector<AxisKernel>> kernel;
};

/// Raised for unreadable files, malformed JSON (check "json", message carries
/// line and column) and bad expressions or fields (check "parse").
class ScenarioError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

std::string read_text_file(const std::filesystem::path& path);

ScenarioDocument parse_scenario_document(std::string_view text);

/// Runs the restriction, kernel and drift checks and assembles the scenario.
Scenario build_scenario(const ScenarioDocument& doc);

Scenario load_scenario(const std::filesystem::path& path);

/// Machine-readable result of one CLI command.
struct ResultRecord {
    std::string scenario;
    std::string command;
    MCEstimate estimate;
    std::optional<OracleResult> oracle;
    std::optional<double> abs_difference;
    std::optional<double> tolerance;
    std::optional<bool> pass;
    std::optional<double> p_hat_doubled;  // grid-doubling diagnostic at 2G
    std::optional<double> wall_time_s;
};

using ordered_json = nlohmann::ordered_json;

/// Reals that may be infinite are written as the string "inf".
ordered_json real_to_json(double v);
double real_from_json(const nlohmann::json& j);

ordered_json to_json(const ResultRecord& r);
ResultRecord record_from_json(const nlohmann::json& j);

std::string csv_header();
std::string csv_row(const ResultRecord& r);

}  // namespace sheetmax
