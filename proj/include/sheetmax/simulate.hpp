#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "sheetmax/covariance.hpp"
#include "sheetmax/rng.hpp"
#include "sheetmax/transform.hpp"

namespace sheetmax {

/// Strictly increasing axis points starting at 0.
class Grid {
public:
    explicit Grid(std::vector<double> points);
    /// `count` equally spaced points on [0, end], both ends included.
    static Grid uniform(double end, std::size_t count);

    std::size_t size() const noexcept { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    std::span<const double> points() const noexcept { return points_; }
    double back() const { return points_.back(); }

private:
    std::vector<double> points_;
};

/// Identifies the random stream a sample was drawn from.
struct Stream {
    std::uint64_t master_seed = 0;
    std::uint64_t replication = 0;

    Rng rng() const noexcept { return Rng::for_replication(master_seed, replication); }
};

/// Field values on a 1-D or 2-D grid, row-major (first axis slowest).
struct FieldSample {
    std::vector<Grid> axes;
    std::vector<double> values;
    Stream provenance;

    double at(std::size_t i) const { return values.at(i); }
    double at(std::size_t i, std::size_t j) const { return values.at(i * axes.at(1).size() + j); }
};

/// Draws one realization into a caller-supplied buffer of size().
/// Implementations are immutable and may be shared between threads.
class FieldSampler {
public:
    virtual ~FieldSampler() = default;
    virtual std::size_t size() const = 0;
    virtual void sample(Rng& rng, std::span<double> out) const = 0;
};

/// Wiener process (1 axis) or Brownian sheet (2 axes) by cumulative sums of
/// independent N(0, ∏ Δ) cell increments. Normals are consumed row-major.
class SheetSampler final : public FieldSampler {
public:
    explicit SheetSampler(std::vector<Grid> axes);
    std::size_t size() const override;
    void sample(Rng& rng, std::span<double> out) const override;

private:
    std::vector<Grid> axes_;
    std::vector<std::vector<double>> root_steps_;  // sqrt(Δ) per axis
};

/// Separable field Y(s) = ∏ v_i(s_i) · X(a_1(s_1), ..) built from a sheet on
/// the time-changed grid. Requires increasing transforms.
class DoobSampler final : public FieldSampler {
public:
    DoobSampler(std::vector<AxisTransform> transforms, std::vector<Grid> original);
    std::size_t size() const override { return sheet_.size(); }
    void sample(Rng& rng, std::span<double> out) const override;
    const std::vector<Grid>& mapped_grids() const noexcept { return mapped_; }

private:
    std::vector<Grid> mapped_;
    std::vector<double> scale_;  // ∏ v_i(s_i), row-major
    SheetSampler sheet_;
};

/// Direct Gaussian sampling from a separable kernel: per-axis Cholesky
/// factors L_i of the kernel restricted to the grid, field = L_1 Z L_2ᵀ.
/// Grid points with zero variance are held at exactly 0.
class CholeskySampler final : public FieldSampler {
public:
    CholeskySampler(const SeparableKernel& kernel, std::vector<Grid> axes);
    ~CholeskySampler() override;
    std::size_t size() const override;
    void sample(Rng& rng, std::span<double> out) const override;

private:
    struct Factors;
    std::vector<Grid> axes_;
    std::unique_ptr<Factors> factors_;
};

FieldSample wiener_path(const Grid& grid, Stream stream);

/// Y(t_k) = v(t_k) W(a(t_k)) with W built from increments of variance diff(a).
FieldSample doob_path(const AxisTransform& tr, const Grid& grid, Stream stream);

FieldSample sheet_2d(const Grid& first, const Grid& second, Stream stream);

/// max_k (values[k] − drift[k]); `drift` is laid out like `sample.values`.
double sup_minus_drift(const FieldSample& sample, std::span<const double> drift);
/// Same, restricted to the listed point indices.
double sup_minus_drift(const FieldSample& sample, std::span<const double> drift,
                       std::span<const std::size_t> points);
/// Evaluates `drift` at every grid point.
double sup_minus_drift(const FieldSample& sample,
                       const std::function<double(std::span<const double>)>& drift);

/// Drift evaluated at every point of the tensor grid, row-major.
std::vector<double> tabulate(const std::vector<Grid>& axes,
                             const std::function<double(std::span<const double>)>& f);

}  // namespace sheetmax
