#include "sheetmax/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sheetmax {

namespace {

using json = nlohmann::json;

std::string line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key))
        throw ScenarioError("parse", "missing field '" + std::string(key) + "'" + where);
    return obj.at(key);
}

std::size_t as_index(const json& j, const std::string& field) {
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw ScenarioError("parse", "field '" + field + "' must be a non-negative integer");
    return j.get<std::size_t>();
}

double as_real(const json& j, const std::string& field) {
    if (!j.is_number()) throw ScenarioError("parse", "field '" + field + "' must be a number");
    return j.get<double>();
}

Expr as_expr(const json& j, const std::string& field, std::span<const std::string> allowed = {},
             bool restrict_vars = false) {
    if (!j.is_string()) throw ScenarioError("parse", "field '" + field + "' must be an expression string");
    const auto text = j.get<std::string>();
    try {
        return restrict_vars ? Expr::parse(text, allowed) : Expr::parse(text);
    } catch (const ParseError& e) {
        throw ScenarioError("parse", "field '" + field + "' (\"" + text + "\"): " + e.what());
    }
}

std::size_t axis_key(const std::string& key, const std::string& field) {
    std::size_t v = 0;
    if (key.empty()) throw ScenarioError("parse", "empty axis key in '" + field + "'");
    for (char c : key) {
        if (c < '0' || c > '9') throw ScenarioError("parse", "axis key '" + key + "' in '" + field + "' is not an integer");
        v = v * 10 + static_cast<std::size_t>(c - '0');
    }
    return v;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("io", "cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ScenarioDocument parse_scenario_document(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
        throw ScenarioError("json", "malformed JSON at " + line_column(text, byte) + ": " + e.what());
    }
    if (!doc.is_object()) throw ScenarioError("parse", "scenario must be a JSON object");

    ScenarioDocument out;
    out.name = doc.value("name", std::string("unnamed"));
    auto& spec = out.restriction;
    spec.ambient_dim = as_index(require(doc, "ambient_dim", ""), "ambient_dim");
    spec.free_dims = as_index(require(doc, "free_dims", ""), "free_dims");
    const std::size_t n = spec.ambient_dim;
    const std::size_t d = spec.free_dims;
    if (d < 1 || n <= d) throw ScenarioError("parse", "need ambient_dim > free_dims >= 1");

    const json& bounds = require(doc, "bounds", "");
    if (!bounds.is_array() || bounds.size() != d)
        throw ScenarioError("parse", "'bounds' must list " + std::to_string(d) + " numbers");
    for (std::size_t i = 0; i < d; ++i) spec.bounds.push_back(as_real(bounds[i], "bounds"));

    const json& restriction = require(doc, "restriction", "");
    const json& formulas = require(restriction, "formulas", " in 'restriction'");
    const json& deps = require(restriction, "deps", " in 'restriction'");
    const json& factors = require(restriction, "factors", " in 'restriction'");
    if (!formulas.is_object() || !deps.is_object())
        throw ScenarioError("parse", "'formulas' and 'deps' must map axis indices to values");

    spec.formulas.assign(n - d, Expr::literal(0.0));
    spec.deps.assign(n - d, 0);
    std::vector<bool> seen_f(n - d, false);
    std::vector<bool> seen_d(n - d, false);
    for (const auto& [key, val] : formulas.items()) {
        const std::size_t axis = axis_key(key, "formulas");
        if (axis <= d || axis > n)
            throw ScenarioError("parse", "formula for axis " + key + " is outside " + std::to_string(d + 1) +
                                             ".." + std::to_string(n));
        spec.formulas[axis - d - 1] = as_expr(val, "formulas." + key);
        seen_f[axis - d - 1] = true;
    }
    for (const auto& [key, val] : deps.items()) {
        const std::size_t axis = axis_key(key, "deps");
        if (axis <= d || axis > n)
            throw ScenarioError("parse", "dependency for axis " + key + " is outside " + std::to_string(d + 1) +
                                             ".." + std::to_string(n));
        spec.deps[axis - d - 1] = as_index(val, "deps." + key);
        seen_d[axis - d - 1] = true;
    }
    for (std::size_t k = 0; k < n - d; ++k) {
        if (!seen_f[k] || !seen_d[k])
            throw ScenarioError("parse", "axis " + std::to_string(d + 1 + k) + " needs both a formula and a dependency");
    }
    if (!factors.is_array() || factors.size() != d)
        throw ScenarioError("parse", "'factors' must list " + std::to_string(d) + " expressions");
    for (std::size_t i = 0; i < d; ++i)
        spec.factors.push_back(as_expr(factors[i], "factors[" + std::to_string(i) + "]"));

    std::vector<std::string> vars;
    for (std::size_t i = 1; i <= n; ++i) vars.push_back("s" + std::to_string(i));
    out.drift = as_expr(require(doc, "drift", ""), "drift", vars, true);

    if (doc.contains("kernel") && !doc.at("kernel").is_null()) {
        const json& k = doc.at("kernel");
        if (!k.is_array() || k.size() != n)
            throw ScenarioError("parse", "'kernel' must list " + std::to_string(n) + " {u, v} pairs");
        std::vector<AxisKernel> axes;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string where = "kernel[" + std::to_string(i) + "]";
            axes.push_back({as_expr(require(k[i], "u", " in " + where), where + ".u"),
                            as_expr(require(k[i], "v", " in " + where), where + ".v")});
        }
        out.kernel = std::move(axes);
    }
    return out;
}

Scenario build_scenario(const ScenarioDocument& doc) {
    std::optional<SeparableKernel> ambient;
    if (doc.kernel) ambient.emplace(*doc.kernel, std::vector<double>(doc.restriction.ambient_dim, 1.0));
    return make_scenario(doc.name, doc.restriction, doc.drift, std::move(ambient));
}

Scenario load_scenario(const std::filesystem::path& path) {
    return build_scenario(parse_scenario_document(read_text_file(path)));
}

ordered_json real_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double real_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw Error("expected a number or \"inf\", got \"" + s + "\"");
    }
    return j.get<double>();
}

ordered_json to_json(const ResultRecord& r) {
    const auto& e = r.estimate;
    ordered_json j;
    j["scenario"] = r.scenario;
    j["command"] = r.command;
    j["p_hat"] = e.p_hat;
    j["successes"] = e.successes;
    j["reps"] = e.reps;
    j["std_error"] = e.std_error;
    j["wilson_95"] = ordered_json::array({e.wilson_lower, e.wilson_upper});
    j["seed"] = e.seed;
    j["grid"] = {{"points", e.grid_points}, {"placement", to_string(e.placement)}};
    ordered_json trunc = ordered_json::array();
    for (const auto& t : e.truncations)
        trunc.push_back({{"axis", t.axis}, {"original_cap", t.original_cap}, {"cap", real_to_json(t.cap)}});
    j["truncation"] = trunc;
    if (r.oracle) {
        ordered_json params;
        for (const auto& [k, v] : r.oracle->parameters) params[k] = v;
        j["oracle"] = {{"formula", r.oracle->formula}, {"probability", r.oracle->probability}, {"parameters", params}};
    }
    if (r.abs_difference) j["abs_difference"] = *r.abs_difference;
    if (r.tolerance) j["tolerance"] = *r.tolerance;
    if (r.pass) j["pass"] = *r.pass;
    if (r.p_hat_doubled) j["p_hat_2g"] = *r.p_hat_doubled;
    if (r.wall_time_s) j["wall_time_s"] = *r.wall_time_s;
    return j;
}

ResultRecord record_from_json(const nlohmann::json& j) {
    ResultRecord r;
    r.scenario = j.at("scenario").get<std::string>();
    r.command = j.at("command").get<std::string>();
    auto& e = r.estimate;
    e.p_hat = j.at("p_hat").get<double>();
    e.successes = j.at("successes").get<std::size_t>();
    e.reps = j.at("reps").get<std::size_t>();
    e.std_error = j.at("std_error").get<double>();
    e.wilson_lower = j.at("wilson_95").at(0).get<double>();
    e.wilson_upper = j.at("wilson_95").at(1).get<double>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.grid_points = j.at("grid").at("points").get<std::size_t>();
    const auto placement = j.at("grid").at("placement").get<std::string>();
    if (placement != "mapped" && placement != "uniform") throw Error("unknown grid placement '" + placement + "'");
    e.placement = placement == "mapped" ? GridPlacement::mapped : GridPlacement::uniform;
    for (const auto& t : j.at("truncation"))
        e.truncations.push_back({t.at("axis").get<std::size_t>(), t.at("original_cap").get<double>(),
                                 real_from_json(t.at("cap"))});
    if (j.contains("oracle")) {
        OracleResult o;
        o.formula = j.at("oracle").at("formula").get<std::string>();
        o.probability = j.at("oracle").at("probability").get<double>();
        for (const auto& [k, v] : j.at("oracle").at("parameters").items()) o.parameters[k] = v.get<double>();
        r.oracle = std::move(o);
    }
    if (j.contains("abs_difference")) r.abs_difference = j.at("abs_difference").get<double>();
    if (j.contains("tolerance")) r.tolerance = j.at("tolerance").get<double>();
    if (j.contains("pass")) r.pass = j.at("pass").get<bool>();
    if (j.contains("p_hat_2g")) r.p_hat_doubled = j.at("p_hat_2g").get<double>();
    if (j.contains("wall_time_s")) r.wall_time_s = j.at("wall_time_s").get<double>();
    return r;
}

std::string csv_header() {
    return "scenario,command,p_hat,successes,reps,std_error,wilson_lower,wilson_upper,seed,grid_points,"
           "placement,oracle_formula,oracle_probability,abs_difference";
}

std::string csv_row(const ResultRecord& r) {
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    const auto& e = r.estimate;
    std::string row = r.scenario + "," + r.command + "," + num(e.p_hat) + "," + std::to_string(e.successes) + "," +
                      std::to_string(e.reps) + "," + num(e.std_error) + "," + num(e.wilson_lower) + "," +
                      num(e.wilson_upper) + "," + std::to_string(e.seed) + "," + std::to_string(e.grid_points) +
                      "," + to_string(e.placement) + ",";
    row += r.oracle ? r.oracle->formula + "," + num(r.oracle->probability) : std::string(",");
    row += ",";
    if (r.abs_difference) row += num(*r.abs_difference);
    return row;
}

}  // namespace sheetmax
