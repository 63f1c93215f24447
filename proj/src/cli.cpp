#include "sheetmax/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sheetmax/error.hpp"
#include "sheetmax/montecarlo.hpp"
#include "sheetmax/oracle.hpp"
#include "sheetmax/scenario_io.hpp"
#include "sheetmax/transform.hpp"

namespace sheetmax {

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

class Log {
public:
    explicit Log(std::ostream& sink) : sink_(sink) {
        if (const char* env = std::getenv("SHEETMAX_LOG")) {
            const std::string v = env;
            if (v == "error") level_ = Level::error;
            else if (v == "info") level_ = Level::info;
            else if (v == "debug") level_ = Level::debug;
        }
    }

    void operator()(Level level, const std::string& msg) const {
        static constexpr const char* names[] = {"error", "warn", "info", "debug"};
        if (level <= level_) sink_ << "sheetmax [" << names[static_cast<int>(level)] << "] " << msg << '\n';
    }

private:
    std::ostream& sink_;
    Level level_ = Level::warn;
};

struct Options {
    std::string file;
    std::size_t reps = 10000;
    std::size_t grid = 1000;
    std::optional<std::uint64_t> seed;
    unsigned workers = 0;
    std::string out_path;
    std::string csv_path;
    std::string placement = "mapped";
    bool doubling = false;
    bool timing = false;
    double tolerance = 0.02;
    std::size_t sheet_dim = 0;
    std::vector<std::string> probes;
};

void emit(std::ostream& out, const ordered_json& j, const Options& opt) {
    const std::string line = j.dump();
    out << line << '\n';
    if (!opt.out_path.empty()) {
        std::ofstream f(opt.out_path, std::ios::binary);
        if (!f) throw Error("cannot write '" + opt.out_path + "'");
        f << line << '\n';
    }
}

void write_csv(const ResultRecord& r, const Options& opt) {
    if (opt.csv_path.empty()) return;
    std::ofstream f(opt.csv_path, std::ios::binary);
    if (!f) throw Error("cannot write '" + opt.csv_path + "'");
    f << csv_header() << '\n' << csv_row(r) << '\n';
}

GridPlacement placement_of(const std::string& s) {
    if (s == "mapped") return GridPlacement::mapped;
    if (s == "uniform") return GridPlacement::uniform;
    throw ValidationError("options", "placement must be 'mapped' or 'uniform'");
}

ordered_json report_json(const CheckReport& r) {
    ordered_json j{{"check", r.check}, {"ok", r.ok}};
    if (!r.detail.empty()) j["detail"] = r.detail;
    if (!r.worst_point.empty()) {
        j["worst_point"] = r.worst_point;
        j["residual"] = r.residual;
    }
    return j;
}

// Span of the 11-point drift sample on one reduced axis.
double sample_span(const ReducedScenario& rsc, std::size_t i) {
    const double x = rsc.bounds()[i];
    return std::isinf(x) ? std::min(rsc.caps()[i], 10.0) : x;
}

int cmd_validate(const Options& opt, std::ostream& out, const Log& log) {
    ordered_json rec{{"scenario", opt.file}, {"command", "validate"}};
    ordered_json checks = ordered_json::array();
    auto finish = [&](bool ok) {
        rec["ok"] = ok;
        rec["checks"] = checks;
        emit(out, rec, opt);
        return ok ? exit_ok : exit_validation;
    };
    ScenarioDocument doc;
    try {
        doc = parse_scenario_document(read_text_file(opt.file));
    } catch (const ScenarioError& e) {
        checks.push_back({{"check", e.check()}, {"ok", false}, {"detail", e.what()}});
        log(Level::error, e.what());
        return finish(false);
    }
    rec["scenario"] = doc.name;
    checks.push_back({{"check", "parse"}, {"ok", true}});
    for (const auto& r : check_restriction(doc.restriction)) {
        checks.push_back(report_json(r));
        if (!r.ok) {
            log(Level::error, r.check + ": " + r.detail);
            return finish(false);
        }
    }
    try {
        const Scenario sc = build_scenario(doc);
        checks.push_back({{"check", "drift"}, {"ok", true}});
        const ReducedScenario rsc = reduce_scenario(sc, opt.grid);
        ordered_json tc{{"check", "time_change"}, {"ok", true}};
        ordered_json fams = ordered_json::array();
        for (const auto& tr : rsc.transforms()) fams.push_back(tr.family().empty() ? "bisection" : tr.family());
        tc["inverse"] = fams;
        checks.push_back(tc);
    } catch (const ValidationError& e) {
        checks.push_back({{"check", e.check()}, {"ok", false}, {"detail", e.what()}});
        log(Level::error, e.what());
        return finish(false);
    } catch (const EvalError& e) {
        checks.push_back({{"check", "eval"}, {"ok", false}, {"detail", e.what()}});
        log(Level::error, e.what());
        return finish(false);
    }
    return finish(true);
}

int cmd_reduce(const Options& opt, std::ostream& out, const Log& log) {
    const Scenario sc = load_scenario(opt.file);
    const ReducedScenario rsc = reduce_scenario(sc, opt.grid);
    ordered_json rec{{"scenario", sc.label}, {"command", "reduce"}, {"dim", rsc.dim()}};
    ordered_json bounds = ordered_json::array();
    for (double x : rsc.bounds()) bounds.push_back(real_to_json(x));
    rec["bounds"] = bounds;
    rec["original_bounds"] = sc.restriction.bounds;
    rec["caps"] = rsc.caps();
    ordered_json trunc = ordered_json::array();
    for (const auto& t : rsc.truncations()) {
        trunc.push_back({{"axis", t.axis}, {"original_cap", t.original_cap}, {"cap", t.cap}});
        log(Level::info, "axis " + std::to_string(t.axis) + " has an infinite reduced bound; truncated at " +
                             std::to_string(t.cap));
    }
    rec["truncation"] = trunc;
    ordered_json transforms = ordered_json::array();
    for (std::size_t i = 0; i < rsc.dim(); ++i) {
        const auto& tr = rsc.transforms()[i];
        ordered_json t{{"axis", i + 1}, {"map", tr.map().to_string()}, {"normalizer", tr.normalizer().to_string()}};
        t["inverse"] = tr.analytic_inverse() ? ordered_json(tr.analytic_inverse()->to_string())
                                             : ordered_json("bisection");
        transforms.push_back(t);
    }
    rec["transforms"] = transforms;

    ordered_json samples = ordered_json::array();
    if (rsc.dim() == 1) {
        const double span = sample_span(rsc, 0);
        for (int k = 0; k <= 10; ++k) {
            const double t[1] = {span * k / 10.0};
            samples.push_back({{"t", ordered_json::array({t[0]})}, {"h", rsc.drift(t)}});
        }
    } else if (rsc.dim() == 2) {
        const double s0 = sample_span(rsc, 0);
        const double s1 = sample_span(rsc, 1);
        for (int a = 0; a <= 10; ++a)
            for (int b = 0; b <= 10; ++b) {
                const double t[2] = {s0 * a / 10.0, s1 * b / 10.0};
                samples.push_back({{"t", ordered_json::array({t[0], t[1]})}, {"h", rsc.drift(t)}});
            }
    }
    rec["drift_samples"] = samples;
    emit(out, rec, opt);
    return exit_ok;
}

ResultRecord run_estimate(const Scenario& sc, const Options& opt, const std::string& command) {
    McConfig cfg;
    cfg.reps = opt.reps;
    cfg.grid_points = opt.grid;
    cfg.seed = *opt.seed;
    cfg.workers = opt.workers;
    cfg.placement = placement_of(opt.placement);
    ResultRecord r;
    r.scenario = sc.label;
    r.command = command;
    const auto start = std::chrono::steady_clock::now();
    r.estimate = estimate_below_zero(reduce_scenario(sc, opt.grid), cfg);
    if (opt.doubling) {
        McConfig twice = cfg;
        twice.grid_points = 2 * opt.grid;
        r.p_hat_doubled = estimate_below_zero(reduce_scenario(sc, twice.grid_points), twice).p_hat;
    }
    if (opt.timing)
        r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

int cmd_estimate(const Options& opt, std::ostream& out, const Log& log) {
    const Scenario sc = load_scenario(opt.file);
    log(Level::info, "estimating '" + sc.label + "' with " + std::to_string(opt.reps) + " replications");
    const ResultRecord r = run_estimate(sc, opt, "estimate");
    emit(out, to_json(r), opt);
    write_csv(r, opt);
    return exit_ok;
}

int cmd_verify(const Options& opt, std::ostream& out, const Log& log) {
    const Scenario sc = load_scenario(opt.file);
    const ReducedScenario rsc = reduce_scenario(sc, opt.grid);
    auto inapplicable = [&](const std::string& why) {
        ordered_json rec{{"scenario", sc.label}, {"command", "verify"}, {"applicable", false}, {"reason", why}};
        emit(out, rec, opt);
        log(Level::warn, why);
        return exit_inapplicable;
    };
    if (rsc.dim() != 1)
        return inapplicable("no closed form applies: the reduced problem is the supremum of a " +
                            std::to_string(rsc.dim()) + "-parameter Brownian sheet");
    const double span = sample_span(rsc, 0);
    const double t0[1] = {0.0};
    const double t1[1] = {0.5 * span};
    const double t2[1] = {span};
    const double h0 = rsc.drift(t0);
    const double h1 = rsc.drift(t1);
    const double h2 = rsc.drift(t2);
    const double second = std::fabs(h0 - 2.0 * h1 + h2);
    if (!(second <= 1e-9))
        return inapplicable("no closed form applies: reduced drift is not affine (second difference " +
                            std::to_string(second) + ")");
    const double slope = (h2 - h0) / span;
    const double intercept = h0;
    OracleResult oracle;
    if (std::isinf(rsc.bounds()[0])) {
        if (slope < 0.0 || intercept < 0.0)
            return inapplicable("no closed form applies: affine drift with negative slope or intercept");
        oracle = linear_drift_oracle(slope, intercept);
    } else {
        if (std::fabs(slope) > 1e-9 || !(intercept > 0.0))
            return inapplicable("no closed form applies: finite horizon with a non-constant or non-positive drift");
        oracle = reflection_oracle(intercept, rsc.bounds()[0]);
    }
    ResultRecord r = run_estimate(sc, opt, "verify");
    r.oracle = oracle;
    r.abs_difference = std::fabs(r.estimate.p_hat - oracle.probability);
    r.tolerance = opt.tolerance;
    r.pass = *r.abs_difference <= opt.tolerance;
    emit(out, to_json(r), opt);
    write_csv(r, opt);
    if (!*r.pass) log(Level::error, "estimate differs from the closed form by more than the tolerance");
    return *r.pass ? exit_ok : exit_validation;
}

std::vector<double> parse_probe(const std::string& text) {
    std::vector<double> p;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            p.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError("options", "malformed probe '" + text + "'");
        }
    }
    return p;
}

std::vector<std::vector<double>> default_probes(const SeparableKernel& k, bool open_top) {
    auto coord = [&](std::size_t i, double frac) { return k.upper(i) * frac; };
    const double top = open_top ? 0.75 : 1.0;
    if (k.dim() == 1) return {{coord(0, 0.25)}, {coord(0, 0.5)}, {coord(0, top)}};
    return {{coord(0, 0.25), coord(1, 0.25)},
            {coord(0, 0.5), coord(1, 0.5)},
            {coord(0, top), coord(1, top)},
            {coord(0, 0.25), coord(1, 0.75)}};
}

int cmd_cov_check(const Options& opt, std::ostream& out, const Log& log) {
    std::optional<SeparableKernel> kernel;
    std::string label;
    bool open_top = false;
    if (opt.sheet_dim > 0) {
        if (opt.sheet_dim > 2) throw ValidationError("options", "--sheet supports dimensions 1 and 2");
        kernel.emplace(sheet_kernel(opt.sheet_dim));
        label = "sheet-" + std::to_string(opt.sheet_dim);
    } else {
        if (opt.file.empty()) throw ValidationError("options", "cov-check needs a scenario file or --sheet");
        const Scenario sc = load_scenario(opt.file);
        kernel.emplace(restricted_kernel(sc));
        label = sc.label;
        const ReducedScenario rsc = reduce_scenario(sc, opt.grid);
        for (double x : rsc.bounds()) open_top = open_top || std::isinf(x);
    }
    std::vector<std::vector<double>> probes;
    for (const auto& p : opt.probes) probes.push_back(parse_probe(p));
    if (probes.empty()) probes = default_probes(*kernel, open_top);
    const std::uint64_t seed = opt.seed.value_or(1);
    const CovarianceReport rep = empirical_covariance(*kernel, probes, opt.reps, seed, opt.workers);
    const bool pass = rep.max_z <= 3.0;
    ordered_json rec{{"scenario", label},
                     {"command", "cov-check"},
                     {"probes", rep.probes},
                     {"empirical", rep.empirical},
                     {"theoretical", rep.theoretical},
                     {"std_error", rep.std_error},
                     {"max_abs_deviation", rep.max_abs_deviation},
                     {"max_z", real_to_json(rep.max_z)},
                     {"reps", rep.reps},
                     {"seed", rep.seed},
                     {"pass", pass}};
    emit(out, rec, opt);
    if (!pass) log(Level::error, "empirical covariance deviates by more than 3 standard errors");
    return pass ? exit_ok : exit_validation;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const Log log(err);
    Options opt;
    CLI::App app{"Brownian-sheet supremum reduction and Monte Carlo estimation"};
    app.require_subcommand(1);

    auto* validate = app.add_subcommand("validate", "Check a scenario file");
    validate->add_option("file", opt.file, "Scenario JSON")->required();
    validate->add_option("--grid", opt.grid, "Grid points per axis (truncation of infinite bounds)");

    auto* reduce = app.add_subcommand("reduce", "Print the reduced scenario");
    reduce->add_option("file", opt.file, "Scenario JSON")->required();
    reduce->add_option("--grid", opt.grid, "Grid points per axis (truncation of infinite bounds)");
    reduce->add_option("--out", opt.out_path, "Also write the record to this file");

    auto add_mc = [&](CLI::App* cmd) {
        cmd->add_option("file", opt.file, "Scenario JSON")->required();
        cmd->add_option("--reps", opt.reps, "Replications")->check(CLI::PositiveNumber);
        cmd->add_option("--grid", opt.grid, "Grid points per axis")->check(CLI::Range(2ul, 100000000ul));
        cmd->add_option("--seed", opt.seed, "Master seed")->required();
        cmd->add_option("--workers", opt.workers, "Worker threads (0: all cores)");
        cmd->add_option("--out", opt.out_path, "Also write the record to this file");
        cmd->add_option("--csv", opt.csv_path, "Write a flattened CSV record to this file");
        cmd->add_option("--placement", opt.placement, "Reduced grid layout: mapped or uniform");
        cmd->add_flag("--doubling", opt.doubling, "Also estimate on a grid of twice the size");
        cmd->add_flag("--timing", opt.timing, "Include wall time in the record");
    };
    auto* estimate = app.add_subcommand("estimate", "Estimate P{sup (X - g) < 0}");
    add_mc(estimate);
    auto* verify = app.add_subcommand("verify", "Estimate and compare with a closed form");
    add_mc(verify);
    verify->add_option("--tol", opt.tolerance, "Allowed |estimate - closed form|");

    auto* cov = app.add_subcommand("cov-check", "Compare empirical and kernel covariances");
    cov->add_option("file", opt.file, "Scenario JSON (restricted kernel)");
    cov->add_option("--sheet", opt.sheet_dim, "Check the n-parameter sheet kernel instead (n = 1, 2)");
    cov->add_option("--probe", opt.probes, "Probe point, comma separated; repeatable");
    cov->add_option("--reps", opt.reps, "Replications")->check(CLI::PositiveNumber);
    cov->add_option("--seed", opt.seed, "Master seed (default 1)");
    cov->add_option("--workers", opt.workers, "Worker threads (0: all cores)");
    cov->add_option("--grid", opt.grid, "Grid points used to locate infinite bounds");
    cov->add_option("--out", opt.out_path, "Also write the record to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_validation;
    }
    if (cov->parsed() && opt.reps == 10000 && cov->count("--reps") == 0) opt.reps = 100000;

    auto fail = [&](int code, const std::string& check, const std::string& msg) {
        ordered_json rec{{"command", app.get_subcommands().front()->get_name()}, {"error", msg}};
        if (!check.empty()) rec["check"] = check;
        out << rec.dump() << '\n';
        log(Level::error, msg);
        return code;
    };
    try {
        if (validate->parsed()) return cmd_validate(opt, out, log);
        if (reduce->parsed()) return cmd_reduce(opt, out, log);
        if (estimate->parsed()) return cmd_estimate(opt, out, log);
        if (verify->parsed()) return cmd_verify(opt, out, log);
        if (cov->parsed()) return cmd_cov_check(opt, out, log);
    } catch (const ValidationError& e) {
        return fail(exit_validation, e.check(), e.what());
    } catch (const ParseError& e) {
        return fail(exit_validation, "parse", e.what());
    } catch (const EvalError& e) {
        return fail(exit_validation, "eval", e.what());
    } catch (const OracleInapplicable& e) {
        return fail(exit_inapplicable, "", e.what());
    } catch (const std::exception& e) {
        return fail(exit_internal, "", e.what());
    }
    return exit_internal;
}

}  // namespace sheetmax
