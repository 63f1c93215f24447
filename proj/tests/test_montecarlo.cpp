#include <doctest.h>

#include <cmath>
#include <vector>

#include "sheetmax/error.hpp"
#include "sheetmax/montecarlo.hpp"
#include "sheetmax/oracle.hpp"
#include "sheetmax/scenario_io.hpp"

using namespace sheetmax;

namespace {

Scenario fixture(const char* name) { return load_scenario(std::string(SHEETMAX_DATA_DIR) + "/" + name); }

McConfig config(std::uint64_t seed, std::size_t reps = 10000, std::size_t grid = 1000) {
    McConfig c;
    c.seed = seed;
    c.reps = reps;
    c.grid_points = grid;
    c.workers = 2;
    return c;
}

}  // namespace

TEST_CASE("linear reduced drifts land near the crossing probability") {
    const MCEstimate e31 = estimate_below_zero(reduce_scenario(fixture("example31.json")), config(42));
    CHECK(std::fabs(e31.p_hat - linear_drift_crossing(1.0, 1.0)) <= 0.02);
    CHECK(e31.truncations.size() == 1);
    const MCEstimate e32 = estimate_below_zero(reduce_scenario(fixture("example32.json")), config(42));
    CHECK(std::fabs(e32.p_hat - linear_drift_crossing(1.0, 2.0)) <= 0.012);
}

TEST_CASE("a negative constant drift can never be cleared") {
    const Scenario base = fixture("identity.json");
    const Scenario sc = make_scenario("negative", base.restriction, Expr::parse("-1"));
    const MCEstimate e = estimate_below_zero(reduce_scenario(sc), config(1, 500, 200));
    CHECK(e.p_hat == 0.0);
    CHECK(e.successes == 0);
    CHECK(e.wilson_lower == 0.0);
}

TEST_CASE("summaries") {
    const std::vector<double> sups{-1.0, 0.0, 0.5, -0.2};
    const MCEstimate e = summarize(sups);
    CHECK(e.successes == 2);
    CHECK(e.p_hat == 0.5);
    CHECK(e.std_error == doctest::Approx(0.25));
    CHECK(e.wilson_lower < 0.5);
    CHECK(e.wilson_upper > 0.5);
}

TEST_CASE("property: the estimate is non-decreasing in the threshold") {
    const Scenario sc = fixture("identity.json");
    const SupProblem p = reduced_problem(reduce_scenario(sc, 200), 200);
    const auto sups = sup_samples(p, 2000, 77, 2);
    double prev = -1.0;
    for (double c = -0.5; c <= 3.0; c += 0.1) {
        const double ph = summarize(sups, c).p_hat;
        CHECK(ph >= prev);
        prev = ph;
    }
}

TEST_CASE("sup samples do not depend on the worker count") {
    const SupProblem p = reduced_problem(reduce_scenario(fixture("example33.json"), 64), 64);
    const auto one = sup_samples(p, 300, 9, 1);
    for (unsigned w : {2u, 3u, 8u}) CHECK(sup_samples(p, 300, 9, w) == one);
}

TEST_CASE("reduced and direct routes agree replication by replication on the mapped grid") {
    // v > 0 on the grid, so sup(vX - g) < 0 exactly when sup(X - g/v) < 0.
    const Scenario sc = fixture("example32.json");
    const McConfig cfg = config(5, 2000, 500);
    const MCEstimate reduced = estimate_below_zero(reduce_scenario(sc, cfg.grid_points), cfg);
    const MCEstimate direct = estimate_direct(sc, cfg, DirectMethod::doob);
    CHECK(std::abs(static_cast<long>(reduced.successes) - static_cast<long>(direct.successes)) <= 2);
}

TEST_CASE("reduced and cholesky direct routes agree statistically") {
    const Scenario sc = fixture("example33.json");
    const McConfig a = config(100, 2000, 40);
    McConfig b = config(200, 2000, 40);
    const MCEstimate reduced = estimate_below_zero(reduce_scenario(sc, a.grid_points), a);
    const MCEstimate direct = estimate_direct(sc, b, DirectMethod::cholesky);
    CHECK(std::fabs(reduced.p_hat - direct.p_hat) <= 3.0 * combined_std_error(reduced, direct));
}

TEST_CASE("property: Wilson intervals cover the reflection probability") {
    const Scenario sc = fixture("identity.json");
    const SupProblem p = reduced_problem(reduce_scenario(sc, 1000), 1000);
    const double truth = reflection_bound(1.0, 1.0);
    int covered = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const MCEstimate e = summarize(sup_samples(p, 1000, seed, 2));
        covered += e.wilson_lower <= truth && truth <= e.wilson_upper;
    }
    CHECK(covered >= 80);
}

TEST_CASE("empirical covariance of the two-parameter sheet") {
    const std::vector<std::vector<double>> probes{{0.25, 0.25}, {0.5, 0.5}, {1.0, 1.0}, {0.25, 0.75}};
    const CovarianceReport rep = empirical_covariance(sheet_kernel(2), probes, 20000, 3, 2);
    CHECK(rep.theoretical[1][2] == doctest::Approx(0.25));
    CHECK(rep.theoretical[0][3] == doctest::Approx(0.25 * 0.25));
    CHECK(rep.max_z <= 3.5);
    const auto again = empirical_covariance(sheet_kernel(2), probes, 20000, 3, 5);
    CHECK(again.empirical == rep.empirical);
    CHECK_THROWS_AS(empirical_covariance(sheet_kernel(2), {{0.5, 1.5}}, 100, 1), ValidationError);
}

TEST_CASE("empirical covariance of a restricted kernel") {
    const SeparableKernel k = restricted_kernel(fixture("example33.json"));
    const std::vector<std::vector<double>> probes{{0.1, 0.1}, {0.3, 0.2}, {0.5, 0.5}};
    const CovarianceReport rep = empirical_covariance(k, probes, 20000, 8, 2);
    CHECK(rep.theoretical[0][1] == doctest::Approx(0.1 * 0.7 * 0.1 * 0.8));
    CHECK(rep.max_z <= 3.5);
}
