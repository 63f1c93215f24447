#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sheetmax/error.hpp"
#include "sheetmax/simulate.hpp"
#include "sheetmax/stats.hpp"

using namespace sheetmax;

namespace {

AxisKernel axis(const char* u, const char* v) { return {Expr::parse(u), Expr::parse(v)}; }

struct Moments {
    std::vector<double> sum;
    std::vector<double> cross;  // row-major m x m
    std::size_t n = 0;
    explicit Moments(std::size_t m) : sum(m, 0.0), cross(m * m, 0.0) {}
    void add(std::span<const double> v) {
        const std::size_t m = sum.size();
        for (std::size_t i = 0; i < m; ++i) {
            sum[i] += v[i];
            for (std::size_t j = 0; j < m; ++j) cross[i * m + j] += v[i] * v[j];
        }
        ++n;
    }
    double second(std::size_t i, std::size_t j) const { return cross[i * sum.size() + j] / double(n); }
};

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(Grid({0.0, 0.5, 0.5}), ValidationError);
    CHECK_THROWS_AS(Grid({0.1, 0.5}), ValidationError);
    const Grid g = Grid::uniform(2.0, 5);
    CHECK(g.size() == 5);
    CHECK(g[0] == 0.0);
    CHECK(g.back() == 2.0);
}

TEST_CASE("wiener path: start at zero, unit variance at one") {
    const Grid g = Grid::uniform(1.0, 101);
    Moments mom(g.size());
    for (std::uint64_t r = 0; r < 50000; ++r) {
        const FieldSample s = wiener_path(g, {11, r});
        CHECK(s.at(0) == 0.0);
        mom.add(s.values);
    }
    const double var1 = mom.second(100, 100);
    CHECK(var1 >= 0.97);
    CHECK(var1 <= 1.03);
    CHECK(mom.second(30, 100) == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("samples are a pure function of the stream") {
    const Grid g = Grid::uniform(1.0, 50);
    const FieldSample a = wiener_path(g, {5, 9});
    const FieldSample b = wiener_path(g, {5, 9});
    const FieldSample c = wiener_path(g, {5, 10});
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.provenance.master_seed == 5);
    CHECK(a.provenance.replication == 9);
}

TEST_CASE("the identity time change reproduces the Wiener path bit for bit") {
    const AxisTransform id = time_change(axis("t", "1"), 1.0);
    const Grid g = Grid::uniform(1.0, 257);
    for (std::uint64_t r = 0; r < 20; ++r) CHECK(doob_path(id, g, {3, r}).values == wiener_path(g, {3, r}).values);
}

TEST_CASE("doob path of t(1 - t) has the bridge covariance") {
    const AxisTransform tr = time_change(axis("t", "1 - t"), 1.0);
    const Grid g({0.0, 0.2, 0.5, 0.8, 0.95});
    Moments mom(g.size());
    const std::size_t reps = 100000;
    for (std::uint64_t r = 0; r < reps; ++r) mom.add(doob_path(tr, g, {17, r}).values);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double lo = std::min(g[i], g[j]);
            const double hi = std::max(g[i], g[j]);
            const double k = lo * (1.0 - hi);
            const double kii = g[i] * (1 - g[i]);
            const double kjj = g[j] * (1 - g[j]);
            const double se = std::sqrt((kii * kjj + k * k) / reps);
            INFO(g[i] << ", " << g[j]);
            CHECK(std::fabs(mom.second(i, j) - k) <= 4.5 * se + 1e-15);
        }
}

TEST_CASE("sheet: zero on the axes, product-of-minima covariance") {
    const Grid g = Grid::uniform(1.0, 11);
    Moments mom(3);
    for (std::uint64_t r = 0; r < 50000; ++r) {
        const FieldSample s = sheet_2d(g, g, {23, r});
        for (std::size_t k = 0; k < g.size(); ++k) {
            CHECK(s.at(0, k) == 0.0);
            CHECK(s.at(k, 0) == 0.0);
        }
        const double v[] = {s.at(10, 10), s.at(5, 5), s.at(3, 8)};
        mom.add(v);
    }
    CHECK(mom.second(0, 0) == doctest::Approx(1.0).epsilon(0.03));
    CHECK(mom.second(0, 1) == doctest::Approx(0.25).epsilon(0.05));
    CHECK(mom.second(1, 2) == doctest::Approx(0.3 * 0.5).epsilon(0.06));
}

TEST_CASE("cholesky sampler matches the kernel and pins zero-variance points") {
    const SeparableKernel k({axis("t", "1 - t")}, {1.0});
    const Grid g({0.0, 0.25, 0.5, 0.9});
    const CholeskySampler sampler(k, {g});
    std::vector<double> buf(sampler.size());
    Moments mom(g.size());
    const std::size_t reps = 100000;
    for (std::uint64_t r = 0; r < reps; ++r) {
        Rng rng = Rng::for_replication(29, r);
        sampler.sample(rng, buf);
        CHECK(buf[0] == 0.0);
        mom.add(buf);
    }
    for (std::size_t i = 1; i < g.size(); ++i)
        for (std::size_t j = 1; j < g.size(); ++j) {
            const double s[] = {g[i]};
            const double t[] = {g[j]};
            const double kij = k.covariance(s, t);
            const double se = std::sqrt((k.covariance(s, s) * k.covariance(t, t) + kij * kij) / reps);
            CHECK(std::fabs(mom.second(i, j) - kij) <= 4.5 * se);
        }
}

TEST_CASE("property: sup over a subset never exceeds sup over the grid") {
    const Grid g = Grid::uniform(1.0, 64);
    std::vector<double> drift(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) drift[k] = 0.5 + g[k];
    std::mt19937_64 gen(4);
    for (std::uint64_t r = 0; r < 200; ++r) {
        const FieldSample s = wiener_path(g, {1, r});
        std::vector<std::size_t> subset;
        for (std::size_t k = 0; k < g.size(); ++k)
            if (gen() % 3 == 0) subset.push_back(k);
        if (subset.empty()) subset.push_back(0);
        const double full = sup_minus_drift(s, drift);
        CHECK(sup_minus_drift(s, drift, subset) <= full);
        CHECK(sup_minus_drift(s, [](std::span<const double> t) { return 0.5 + t[0]; }) == full);
    }
}

TEST_CASE("normalized direct samples are Wiener marginals in the image coordinate") {
    const SeparableKernel k({axis("t", "1 - t")}, {1.0});
    const AxisTransform tr = time_change(k.axis(0), 1.0);
    const Grid original({0.0, 0.6});
    const CholeskySampler direct(k, {original});
    const Grid image({0.0, tr.forward(0.6)});
    std::vector<double> a, b, buf(2);
    for (std::uint64_t r = 0; r < 4000; ++r) {
        Rng rng = Rng::for_replication(101, r);
        direct.sample(rng, buf);
        a.push_back(buf[1] / tr.normalizer_at(0.6));
        b.push_back(wiener_path(image, {202, r}).at(1));
    }
    CHECK(ks_statistic(a, b) <= ks_critical_value(a.size(), b.size(), 0.001));
}
