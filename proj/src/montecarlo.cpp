#include "sheetmax/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sheetmax/error.hpp"
#include "sheetmax/parallel.hpp"
#include "sheetmax/stats.hpp"

namespace sheetmax {

namespace {

constexpr std::size_t kChunk = 64;

std::vector<Grid> original_grids(const ReducedScenario& rsc, std::size_t grid_points) {
    std::vector<Grid> grids;
    for (double end : rsc.original_caps()) grids.push_back(Grid::uniform(end, grid_points));
    return grids;
}

}  // namespace

std::string to_string(GridPlacement p) { return p == GridPlacement::mapped ? "mapped" : "uniform"; }

std::string to_string(DirectMethod m) { return m == DirectMethod::doob ? "doob" : "cholesky"; }

SupProblem reduced_problem(const ReducedScenario& rsc, std::size_t grid_points, GridPlacement placement) {
    if (rsc.dim() < 1 || rsc.dim() > 2)
        throw ValidationError("estimate", "reduced scenarios of dimension " + std::to_string(rsc.dim()) +
                                              " cannot be simulated (1 or 2 supported)");
    SupProblem p;
    if (placement == GridPlacement::mapped) {
        const auto original = original_grids(rsc, grid_points);
        for (std::size_t i = 0; i < original.size(); ++i) {
            std::vector<double> mapped;
            for (double s : original[i].points()) mapped.push_back(rsc.transforms()[i].forward(s));
            p.grids.emplace_back(std::move(mapped));
        }
        p.drift = tabulate(original, [&](std::span<const double> s) { return rsc.drift_at_original(s); });
    } else {
        for (double cap : rsc.caps()) p.grids.push_back(Grid::uniform(cap, grid_points));
        p.drift = tabulate(p.grids, [&](std::span<const double> t) { return rsc.drift(t); });
    }
    p.sampler = std::make_shared<SheetSampler>(p.grids);
    return p;
}

SupProblem direct_problem(const Scenario& sc, std::size_t grid_points, DirectMethod method) {
    const ReducedScenario rsc = reduce_scenario(sc, grid_points);
    if (rsc.dim() > 2)
        throw ValidationError("estimate", "restricted fields of dimension above 2 cannot be simulated");
    SupProblem p;
    p.grids = original_grids(rsc, grid_points);
    p.drift = tabulate(p.grids, [&](std::span<const double> s) { return restricted_drift(sc, s); });
    if (method == DirectMethod::doob) {
        p.sampler = std::make_shared<DoobSampler>(rsc.transforms(), p.grids);
    } else {
        p.sampler = std::make_shared<CholeskySampler>(restricted_kernel(sc), p.grids);
    }
    return p;
}

std::vector<double> sup_samples(const SupProblem& problem, std::size_t reps, std::uint64_t seed,
                                unsigned workers) {
    if (!problem.sampler) throw Error("sup_samples: problem has no sampler");
    const std::size_t size = problem.sampler->size();
    if (problem.drift.size() != size) throw Error("sup_samples: drift table does not match the grid");
    std::vector<double> sups(reps);
    workers = resolve_workers(workers);
    std::vector<std::vector<double>> buffers(workers, std::vector<double>(size));
    parallel_chunks(reps, workers, kChunk, [&](unsigned worker, std::size_t begin, std::size_t end) {
        auto& buf = buffers[worker];
        for (std::size_t r = begin; r < end; ++r) {
            Rng rng = Rng::for_replication(seed, r);
            problem.sampler->sample(rng, buf);
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < size; ++k) best = std::max(best, buf[k] - problem.drift[k]);
            sups[r] = best;
        }
    });
    return sups;
}

MCEstimate summarize(std::span<const double> sups, double threshold) {
    if (sups.empty()) throw Error("summarize: no replications");
    MCEstimate e;
    e.reps = sups.size();
    e.successes = static_cast<std::size_t>(
        std::count_if(sups.begin(), sups.end(), [threshold](double s) { return s < threshold; }));
    const double n = static_cast<double>(e.reps);
    e.p_hat = static_cast<double>(e.successes) / n;
    e.std_error = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
    std::tie(e.wilson_lower, e.wilson_upper) = wilson_interval(e.successes, e.reps);
    return e;
}

MCEstimate estimate_below_zero(const ReducedScenario& rsc, const McConfig& cfg) {
    if (cfg.reps < 1) throw ValidationError("estimate", "at least one replication is required");
    const SupProblem problem = reduced_problem(rsc, cfg.grid_points, cfg.placement);
    const auto sups = sup_samples(problem, cfg.reps, cfg.seed, cfg.workers);
    MCEstimate e = summarize(sups);
    e.seed = cfg.seed;
    e.grid_points = cfg.grid_points;
    e.placement = cfg.placement;
    e.truncations = rsc.truncations();
    return e;
}

MCEstimate estimate_direct(const Scenario& sc, const McConfig& cfg, DirectMethod method) {
    if (cfg.reps < 1) throw ValidationError("estimate", "at least one replication is required");
    const SupProblem problem = direct_problem(sc, cfg.grid_points, method);
    const auto sups = sup_samples(problem, cfg.reps, cfg.seed, cfg.workers);
    MCEstimate e = summarize(sups);
    e.seed = cfg.seed;
    e.grid_points = cfg.grid_points;
    e.placement = GridPlacement::uniform;
    e.truncations = reduce_scenario(sc, cfg.grid_points).truncations();
    return e;
}

double combined_std_error(const MCEstimate& a, const MCEstimate& b) {
    return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

CovarianceReport empirical_covariance(const SeparableKernel& kernel,
                                      const std::vector<std::vector<double>>& probes, std::size_t reps,
                                      std::uint64_t seed, unsigned workers) {
    const std::size_t d = kernel.dim();
    std::vector<Grid> grids;
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> coords{0.0};
        for (const auto& p : probes) {
            if (p.size() != d) throw ValidationError("cov-check", "probe dimension differs from kernel");
            if (!(p[i] >= 0.0 && p[i] <= kernel.upper(i)))
                throw ValidationError("cov-check", "probe coordinate outside the kernel domain");
            coords.push_back(p[i]);
        }
        std::sort(coords.begin(), coords.end());
        coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        grids.emplace_back(std::move(coords));
    }
    return empirical_covariance(kernel, grids, probes, reps, seed, workers);
}

CovarianceReport empirical_covariance(const SeparableKernel& kernel, const std::vector<Grid>& grids,
                                      const std::vector<std::vector<double>>& probes, std::size_t reps,
                                      std::uint64_t seed, unsigned workers) {
    const std::size_t d = kernel.dim();
    if (probes.empty() || probes.size() > 16) throw ValidationError("cov-check", "between 1 and 16 probes required");
    if (reps < 2) throw ValidationError("cov-check", "at least two replications are required");
    if (grids.size() != d) throw ValidationError("cov-check", "one grid per kernel axis required");

    // Row-major index of every probe on the grid.
    std::vector<std::size_t> index;
    for (const auto& p : probes) {
        if (p.size() != d) throw ValidationError("cov-check", "probe dimension differs from kernel");
        std::size_t flat = 0;
        for (std::size_t i = 0; i < d; ++i) {
            const auto pts = grids[i].points();
            auto it = std::find(pts.begin(), pts.end(), p[i]);
            if (it == pts.end()) throw ValidationError("cov-check", "probe is off the grid");
            flat = flat * grids[i].size() + static_cast<std::size_t>(it - pts.begin());
        }
        index.push_back(flat);
    }

    std::vector<AxisTransform> transforms;
    for (std::size_t i = 0; i < d; ++i)
        transforms.push_back(time_change(kernel.axis(i), kernel.upper(i), DirectionRequest::increasing));
    const DoobSampler sampler(std::move(transforms), grids);

    const std::size_t m = probes.size();
    const std::size_t chunks = (reps + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(m * m, 0.0));
    workers = resolve_workers(workers);
    std::vector<std::vector<double>> buffers(workers, std::vector<double>(sampler.size()));
    parallel_chunks(reps, workers, kChunk, [&](unsigned worker, std::size_t begin, std::size_t end) {
        auto& buf = buffers[worker];
        auto& acc = partial[begin / kChunk];
        for (std::size_t r = begin; r < end; ++r) {
            Rng rng = Rng::for_replication(seed, r);
            sampler.sample(rng, buf);
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = a; b < m; ++b) acc[a * m + b] += buf[index[a]] * buf[index[b]];
        }
    });

    CovarianceReport rep;
    rep.probes = probes;
    rep.reps = reps;
    rep.seed = seed;
    rep.empirical.assign(m, std::vector<double>(m, 0.0));
    rep.theoretical.assign(m, std::vector<double>(m, 0.0));
    rep.std_error.assign(m, std::vector<double>(m, 0.0));
    const double n = static_cast<double>(reps);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a; b < m; ++b) {
            double sum = 0.0;
            for (const auto& c : partial) sum += c[a * m + b];
            rep.empirical[a][b] = rep.empirical[b][a] = sum / n;
            rep.theoretical[a][b] = rep.theoretical[b][a] = kernel.covariance(probes[a], probes[b]);
        }
    }
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            const double kab = rep.theoretical[a][b];
            const double se = std::sqrt((rep.theoretical[a][a] * rep.theoretical[b][b] + kab * kab) / n);
            rep.std_error[a][b] = se;
            const double dev = std::fabs(rep.empirical[a][b] - kab);
            rep.max_abs_deviation = std::max(rep.max_abs_deviation, dev);
            const double z = se > 0.0 ? dev / se : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
            rep.max_z = std::max(rep.max_z, z);
        }
    }
    return rep;
}

}  // namespace sheetmax
