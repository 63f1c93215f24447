#include "sheetmax/simulate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sheetmax/error.hpp"

namespace sheetmax {

namespace {

std::size_t total_size(const std::vector<Grid>& axes) {
    std::size_t n = 1;
    for (const auto& g : axes) n *= g.size();
    return n;
}

void check_dims(const std::vector<Grid>& axes) {
    if (axes.empty() || axes.size() > 2)
        throw ValidationError("grid", "fields are simulated on 1-D or 2-D grids only");
}

std::vector<double> root_steps(const Grid& g) {
    std::vector<double> r(g.size(), 0.0);
    for (std::size_t k = 1; k < g.size(); ++k) r[k] = std::sqrt(g[k] - g[k - 1]);
    return r;
}

}  // namespace

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw ValidationError("grid", "grid is empty");
    if (points_.front() != 0.0) throw ValidationError("grid", "grid must start at 0");
    for (std::size_t k = 1; k < points_.size(); ++k) {
        if (!(points_[k] > points_[k - 1]) || !std::isfinite(points_[k]))
            throw ValidationError("grid", "grid points must be finite and strictly increasing (index " +
                                              std::to_string(k) + ")");
    }
}

Grid Grid::uniform(double end, std::size_t count) {
    if (count < 2) throw ValidationError("grid", "uniform grid needs at least 2 points");
    std::vector<double> p(count);
    for (std::size_t k = 0; k < count; ++k)
        p[k] = end * static_cast<double>(k) / static_cast<double>(count - 1);
    p.back() = end;
    return Grid(std::move(p));
}

SheetSampler::SheetSampler(std::vector<Grid> axes) : axes_(std::move(axes)) {
    check_dims(axes_);
    for (const auto& g : axes_) root_steps_.push_back(root_steps(g));
}

std::size_t SheetSampler::size() const { return total_size(axes_); }

void SheetSampler::sample(Rng& rng, std::span<double> out) const {
    const auto& r0 = root_steps_[0];
    if (axes_.size() == 1) {
        double w = 0.0;
        out[0] = 0.0;
        for (std::size_t k = 1; k < r0.size(); ++k) {
            w += r0[k] * rng.normal();
            out[k] = w;
        }
        return;
    }
    const auto& r1 = root_steps_[1];
    const std::size_t n0 = r0.size();
    const std::size_t n1 = r1.size();
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
    for (std::size_t i = 1; i < n0; ++i) {
        double* row = out.data() + i * n1;
        const double* above = row - n1;
        double partial = 0.0;
        row[0] = 0.0;
        for (std::size_t j = 1; j < n1; ++j) {
            partial += r0[i] * r1[j] * rng.normal();
            row[j] = above[j] + partial;
        }
    }
}

DoobSampler::DoobSampler(std::vector<AxisTransform> transforms, std::vector<Grid> original)
    : sheet_([&] {
          check_dims(original);
          if (transforms.size() != original.size())
              throw ValidationError("doob", "one transform per grid axis required");
          std::vector<Grid> mapped;
          for (std::size_t i = 0; i < original.size(); ++i) {
              const auto& tr = transforms[i];
              if (tr.direction() != Direction::increasing)
                  throw ValidationError("doob", "path construction needs an increasing time change");
              std::vector<double> a(original[i].size());
              for (std::size_t k = 0; k < a.size(); ++k) {
                  a[k] = tr.forward(original[i][k]);
                  if (!std::isfinite(a[k]))
                      throw ValidationError("doob", "time change is infinite at grid point " +
                                                        std::to_string(original[i][k]));
                  if (k > 0 && !(a[k] > a[k - 1]))
                      throw ValidationError("doob", "negative time-change increment at grid index " +
                                                        std::to_string(k));
              }
              if (a[0] != 0.0) throw ValidationError("doob", "time change must map 0 to 0");
              mapped.emplace_back(std::move(a));
          }
          mapped_ = mapped;
          return SheetSampler(std::move(mapped));
      }()) {
    std::vector<std::vector<double>> v(original.size());
    for (std::size_t i = 0; i < original.size(); ++i)
        for (double s : original[i].points()) v[i].push_back(transforms[i].normalizer_at(s));
    if (v.size() == 1) {
        scale_ = v[0];
    } else {
        scale_.reserve(v[0].size() * v[1].size());
        for (double a : v[0])
            for (double b : v[1]) scale_.push_back(a * b);
    }
}

void DoobSampler::sample(Rng& rng, std::span<double> out) const {
    sheet_.sample(rng, out);
    for (std::size_t k = 0; k < scale_.size(); ++k) out[k] *= scale_[k];
}

struct CholeskySampler::Factors {
    std::vector<Eigen::MatrixXd> lower;               // per axis, on positive-variance points
    std::vector<std::vector<std::size_t>> active;     // grid indices with positive variance
};

CholeskySampler::CholeskySampler(const SeparableKernel& kernel, std::vector<Grid> axes)
    : axes_(std::move(axes)), factors_(std::make_unique<Factors>()) {
    check_dims(axes_);
    if (kernel.dim() != axes_.size()) throw ValidationError("cholesky", "kernel and grid dimensions differ");
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        const auto& ax = kernel.axis(i);
        std::vector<std::size_t> active;
        for (std::size_t k = 0; k < axes_[i].size(); ++k) {
            const double s = axes_[i][k];
            if (ax.u.eval1(s) * ax.v.eval1(s) > 0.0) active.push_back(k);
        }
        const auto m = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd cov(m, m);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b <= a; ++b) {
                const double lo = std::min(axes_[i][active[a]], axes_[i][active[b]]);
                const double hi = std::max(axes_[i][active[a]], axes_[i][active[b]]);
                cov(a, b) = cov(b, a) = ax.u.eval1(lo) * ax.v.eval1(hi);
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success)
            throw ValidationError("cholesky", "kernel matrix of axis " + std::to_string(i + 1) +
                                                  " is not positive definite on the grid");
        factors_->lower.emplace_back(llt.matrixL());
        factors_->active.push_back(std::move(active));
    }
}

CholeskySampler::~CholeskySampler() = default;

std::size_t CholeskySampler::size() const { return total_size(axes_); }

void CholeskySampler::sample(Rng& rng, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const auto& act0 = factors_->active[0];
    const auto m0 = static_cast<Eigen::Index>(act0.size());
    if (axes_.size() == 1) {
        Eigen::VectorXd z(m0);
        for (Eigen::Index a = 0; a < m0; ++a) z(a) = rng.normal();
        const Eigen::VectorXd f = factors_->lower[0].triangularView<Eigen::Lower>() * z;
        for (Eigen::Index a = 0; a < m0; ++a) out[act0[a]] = f(a);
        return;
    }
    const auto& act1 = factors_->active[1];
    const auto m1 = static_cast<Eigen::Index>(act1.size());
    Eigen::MatrixXd z(m0, m1);
    for (Eigen::Index a = 0; a < m0; ++a)
        for (Eigen::Index b = 0; b < m1; ++b) z(a, b) = rng.normal();
    const Eigen::MatrixXd left = factors_->lower[0].triangularView<Eigen::Lower>() * z;
    const Eigen::MatrixXd f = left * factors_->lower[1].transpose().triangularView<Eigen::Upper>();
    const std::size_t n1 = axes_[1].size();
    for (Eigen::Index a = 0; a < m0; ++a)
        for (Eigen::Index b = 0; b < m1; ++b) out[act0[a] * n1 + act1[b]] = f(a, b);
}

FieldSample wiener_path(const Grid& grid, Stream stream) {
    FieldSample s{{grid}, std::vector<double>(grid.size()), stream};
    Rng rng = stream.rng();
    SheetSampler({grid}).sample(rng, s.values);
    return s;
}

FieldSample doob_path(const AxisTransform& tr, const Grid& grid, Stream stream) {
    DoobSampler sampler({tr}, {grid});
    FieldSample s{{grid}, std::vector<double>(grid.size()), stream};
    Rng rng = stream.rng();
    sampler.sample(rng, s.values);
    return s;
}

FieldSample sheet_2d(const Grid& first, const Grid& second, Stream stream) {
    FieldSample s{{first, second}, std::vector<double>(first.size() * second.size()), stream};
    Rng rng = stream.rng();
    SheetSampler({first, second}).sample(rng, s.values);
    return s;
}

double sup_minus_drift(const FieldSample& sample, std::span<const double> drift) {
    if (drift.size() != sample.values.size()) throw Error("sup_minus_drift: drift table size mismatch");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < drift.size(); ++k) best = std::max(best, sample.values[k] - drift[k]);
    return best;
}

double sup_minus_drift(const FieldSample& sample, std::span<const double> drift,
                       std::span<const std::size_t> points) {
    if (drift.size() != sample.values.size()) throw Error("sup_minus_drift: drift table size mismatch");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k : points) best = std::max(best, sample.values.at(k) - drift[k]);
    return best;
}

double sup_minus_drift(const FieldSample& sample,
                       const std::function<double(std::span<const double>)>& drift) {
    return sup_minus_drift(sample, tabulate(sample.axes, drift));
}

std::vector<double> tabulate(const std::vector<Grid>& axes,
                             const std::function<double(std::span<const double>)>& f) {
    check_dims(axes);
    std::vector<double> out;
    out.reserve(total_size(axes));
    if (axes.size() == 1) {
        for (double t : axes[0].points()) {
            const double p[1] = {t};
            out.push_back(f(p));
        }
    } else {
        for (double a : axes[0].points())
            for (double b : axes[1].points()) {
                const double p[2] = {a, b};
                out.push_back(f(p));
            }
    }
    return out;
}

}  // namespace sheetmax
