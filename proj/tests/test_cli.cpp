#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sheetmax/cli.hpp"

using namespace sheetmax;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
    nlohmann::json record() const { return nlohmann::json::parse(out.substr(0, out.find('\n'))); }
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "sheetmax");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string data(const char* name) { return std::string(SHEETMAX_DATA_DIR) + "/" + name; }

std::string temp_file(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / ("sheetmax_test_" + name);
    std::ofstream(path) << content;
    return path.string();
}

}  // namespace

TEST_CASE("validate accepts the fixtures") {
    for (const char* name : {"example31.json", "example32.json", "example33.json", "identity.json"}) {
        const Run r = run({"validate", data(name)});
        INFO(r.out << r.err);
        CHECK(r.code == exit_ok);
        CHECK(r.record()["ok"] == true);
        CHECK(r.record()["checks"].size() == 7);
    }
}

TEST_CASE("validate reports malformed JSON with its position") {
    const Run r = run({"validate", temp_file("broken.json", "{\n  \"ambient_dim\": 3,\n  ]\n")});
    CHECK(r.code == exit_validation);
    const auto rec = r.record();
    CHECK(rec["ok"] == false);
    CHECK(rec["checks"][0]["check"] == "json");
    CHECK(rec["checks"][0]["detail"].get<std::string>().find("line 3") != std::string::npos);
}

TEST_CASE("validate reports a wrong factorization") {
    std::ifstream in(data("example31.json"));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    text.replace(text.find("[\"1 - s1\"]"), 10, "[\"1 - s1^2\"]");
    const Run r = run({"validate", temp_file("badfactor.json", text)});
    CHECK(r.code == exit_validation);
    const auto checks = r.record()["checks"];
    CHECK(checks.back()["check"] == "factorization");
    CHECK(checks.back()["ok"] == false);
    CHECK(checks.back().contains("worst_point"));

    const Run est = run({"estimate", temp_file("badfactor.json", text), "--seed", "1", "--reps", "10"});
    CHECK(est.code == exit_validation);
    CHECK(est.record()["check"] == "factorization");
}

TEST_CASE("reduce prints the transform and drift samples") {
    const Run r = run({"reduce", data("example31.json")});
    REQUIRE(r.code == exit_ok);
    const auto rec = r.record();
    CHECK(rec["bounds"][0] == "inf");
    CHECK(rec["truncation"].size() == 1);
    CHECK(rec["drift_samples"].size() == 11);
    CHECK(rec["drift_samples"][10]["h"].get<double>() == doctest::Approx(11.0));
    const Run r33 = run({"reduce", data("example33.json")});
    CHECK(r33.record()["drift_samples"].size() == 121);
}

TEST_CASE("verify uses the closed forms where they apply") {
    const Run r = run({"verify", data("example31.json"), "--seed", "3", "--reps", "4000"});
    CHECK(r.code == exit_ok);
    const auto rec = r.record();
    CHECK(rec["oracle"]["formula"] == "linear_drift_crossing");
    CHECK(rec["oracle"]["parameters"]["a"].get<double>() == doctest::Approx(1.0));
    CHECK(rec["oracle"]["parameters"]["b"].get<double>() == doctest::Approx(1.0));

    const Run id = run({"verify", data("identity.json"), "--seed", "3", "--reps", "4000"});
    CHECK(id.code == exit_ok);
    CHECK(id.record()["oracle"]["formula"] == "reflection_bound");

    const Run sheet = run({"verify", data("example33.json"), "--seed", "3"});
    CHECK(sheet.code == exit_inapplicable);
    CHECK(sheet.record()["applicable"] == false);

    const Run tight = run({"verify", data("example31.json"), "--seed", "3", "--reps", "200", "--tol", "0"});
    CHECK(tight.code == exit_validation);
    CHECK(tight.record()["pass"] == false);
}

TEST_CASE("estimate output is deterministic across worker counts") {
    const Run a = run({"estimate", data("example33.json"), "--seed", "11", "--reps", "400", "--grid", "50",
                       "--workers", "1"});
    const Run b = run({"estimate", data("example33.json"), "--seed", "11", "--reps", "400", "--grid", "50",
                       "--workers", "8"});
    CHECK(a.code == exit_ok);
    CHECK(a.out == b.out);
    CHECK(a.record()["grid"]["points"] == 50);
}

TEST_CASE("a single replication is reproducible") {
    const Run a = run({"estimate", data("example31.json"), "--reps", "1", "--seed", "7"});
    const Run b = run({"estimate", data("example31.json"), "--reps", "1", "--seed", "7"});
    CHECK(a.code == exit_ok);
    CHECK(a.out == b.out);
    CHECK(a.record()["reps"] == 1);
}

TEST_CASE("estimate writes csv and doubling diagnostics") {
    const auto csv = (std::filesystem::temp_directory_path() / "sheetmax_test_out.csv").string();
    const Run r = run({"estimate", data("identity.json"), "--seed", "2", "--reps", "200", "--grid", "100",
                       "--doubling", "--csv", csv});
    CHECK(r.code == exit_ok);
    CHECK(r.record().contains("p_hat_2g"));
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("scenario,command,p_hat", 0) == 0);
}

TEST_CASE("cov-check") {
    const Run r = run({"cov-check", "--sheet", "2", "--reps", "20000", "--seed", "4"});
    CHECK(r.code == exit_ok);
    CHECK(r.record()["pass"] == true);
    const Run p = run({"cov-check", data("example31.json"), "--probe", "0.2", "--probe", "0.7", "--reps", "20000"});
    CHECK(p.code == exit_ok);
    CHECK(p.record()["probes"].size() == 2);
    const Run bad = run({"cov-check", "--sheet", "2", "--probe", "0.2,x"});
    CHECK(bad.code == exit_validation);
}

TEST_CASE("usage errors") {
    CHECK(run({}).code == exit_validation);
    CHECK(run({"estimate", data("example31.json")}).code == exit_validation);
    CHECK(run({"frobnicate"}).code == exit_validation);
    CHECK(run({"--help"}).code == exit_ok);
}
