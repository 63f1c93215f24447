#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sheetmax/covariance.hpp"
#include "sheetmax/simulate.hpp"
#include "sheetmax/transform.hpp"

namespace sheetmax {

/// How the reduced-domain grid is laid out.
///
/// `mapped`: G equally spaced points of the original coordinate on
/// [0, original cap], pushed forward through a_i. Dense where the time
/// change is slow, matching a path simulated in the original coordinate.
/// `uniform`: G equally spaced points of the reduced coordinate on [0, cap].
enum class GridPlacement { mapped, uniform };

/// How the restricted field is simulated in the original coordinates.
/// `doob`: v·X(a(s)) from a sheet on the time-changed grid.
/// `cholesky`: directly from the restricted kernel matrix.
enum class DirectMethod { doob, cholesky };

struct McConfig {
    std::size_t reps = 10000;
    std::size_t grid_points = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 0;  // 0: hardware concurrency
    GridPlacement placement = GridPlacement::mapped;
};

/// A field sampler together with the drift tabulated on its grid.
struct SupProblem {
    std::vector<Grid> grids;
    std::vector<double> drift;
    std::shared_ptr<const FieldSampler> sampler;
};

SupProblem reduced_problem(const ReducedScenario& rsc, std::size_t grid_points,
                           GridPlacement placement = GridPlacement::mapped);

/// The restricted field on its original domain with drift g_S. The grid has
/// `grid_points` equally spaced points per axis on [0, y_i], stopping at
/// y_i (1 − 1/G) on axes whose reduced bound is infinite.
SupProblem direct_problem(const Scenario& sc, std::size_t grid_points, DirectMethod method);

/// sup(X − drift) of replication r, drawn from stream (seed, r), in index
/// order. The result does not depend on `workers`.
std::vector<double> sup_samples(const SupProblem& problem, std::size_t reps, std::uint64_t seed,
                                unsigned workers = 0);

struct MCEstimate {
    double p_hat = 0.0;
    std::size_t successes = 0;
    std::size_t reps = 0;
    double std_error = 0.0;
    double wilson_lower = 0.0;
    double wilson_upper = 0.0;
    std::uint64_t seed = 0;
    std::size_t grid_points = 0;
    GridPlacement placement = GridPlacement::mapped;
    std::vector<TruncationRecord> truncations;
};

/// Fraction of sup values strictly below `threshold`, with standard error
/// √(p̂(1 − p̂)/n) and the Wilson 95% interval.
MCEstimate summarize(std::span<const double> sups, double threshold = 0.0);

/// P{ sup (X − h) < 0 } on the reduced domain.
MCEstimate estimate_below_zero(const ReducedScenario& rsc, const McConfig& cfg);

/// Same probability computed on the original domain.
MCEstimate estimate_direct(const Scenario& sc, const McConfig& cfg, DirectMethod method);

/// √(se_a² + se_b²).
double combined_std_error(const MCEstimate& a, const MCEstimate& b);

struct CovarianceReport {
    std::vector<std::vector<double>> probes;
    std::vector<std::vector<double>> empirical;
    std::vector<std::vector<double>> theoretical;
    std::vector<std::vector<double>> std_error;  // √((K_aa K_bb + K_ab²)/n)
    double max_abs_deviation = 0.0;
    double max_z = 0.0;                           // max |emp − theo| / std_error
    std::size_t reps = 0;
    std::uint64_t seed = 0;
};

/// Second moments E[Y(p_a) Y(p_b)] of the field simulated through its time
/// change, compared with the kernel. The field is simulated on the grid made
/// of 0 and the probe coordinates of each axis. At most 16 probes.
CovarianceReport empirical_covariance(const SeparableKernel& kernel,
                                      const std::vector<std::vector<double>>& probes, std::size_t reps,
                                      std::uint64_t seed, unsigned workers = 0);

/// Same with explicit grids; every probe coordinate must be a grid point.
CovarianceReport empirical_covariance(const SeparableKernel& kernel, const std::vector<Grid>& grids,
                                      const std::vector<std::vector<double>>& probes, std::size_t reps,
                                      std::uint64_t seed, unsigned workers = 0);

std::string to_string(GridPlacement p);
std::string to_string(DirectMethod m);

}  // namespace sheetmax
