#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sheetmax/covariance.hpp"
#include "sheetmax/expr.hpp"

namespace sheetmax {

enum class Direction { increasing, decreasing };
enum class DirectionRequest { automatic, increasing, decreasing };

/// Time change of one axis of a separable kernel.
///
/// Increasing case: a(t) = u(t)/v(t), normalizer v. The process
/// Y(a⁻¹(x)) / v(a⁻¹(x)) is a Wiener process in x.
/// Decreasing case: a(t) = v(t)/u(t), normalizer u, same conclusion with u.
class AxisTransform {
public:
    Direction direction() const noexcept { return direction_; }
    const Expr& map() const noexcept { return map_; }
    const Expr& normalizer() const noexcept { return normalizer_; }
    const std::optional<Expr>& analytic_inverse() const noexcept { return inverse_; }
    /// "identity", "t/(c-t)" or empty when inversion falls back to bisection.
    const std::string& family() const noexcept { return family_; }

    /// Domain [0, y] in the original coordinate.
    double domain_upper() const noexcept { return upper_; }
    /// a(y); +inf when the denominator of a vanishes at y.
    double image_bound() const noexcept { return image_bound_; }
    /// a(0); +inf in the decreasing case when u(0) = 0.
    double image_origin() const noexcept { return image_origin_; }

    /// a(t), with a zero denominator mapped to +inf.
    double forward(double t) const;
    double normalizer_at(double t) const { return normalizer_.eval1(t); }

    /// Copy that always inverts by bisection.
    AxisTransform without_analytic_inverse() const;

private:
    friend AxisTransform time_change(const AxisKernel&, double, DirectionRequest);

    Direction direction_ = Direction::increasing;
    Expr numerator_ = Expr::literal(0.0);
    Expr denominator_ = Expr::literal(1.0);
    Expr map_ = Expr::literal(0.0);
    Expr normalizer_ = Expr::literal(1.0);
    std::optional<Expr> inverse_;
    std::string family_;
    double upper_ = 1.0;
    double image_bound_ = 0.0;
    double image_origin_ = 0.0;
};

/// Builds the time change of `axis` on [0, y]. With `automatic`, the
/// increasing form u/v is tried first and the decreasing form v/u second.
/// Monotonicity is checked on 101 points of [0, y − 1e-9·y]. Throws
/// ValidationError naming the first violating grid pair.
AxisTransform time_change(const AxisKernel& axis, double y,
                          DirectionRequest request = DirectionRequest::automatic);

/// t in [0, y] with a(t) = x. Uses the analytic inverse when one is attached,
/// otherwise bisects to the resolution of double precision. Throws
/// ValidationError when x is outside the image of a.
double invert(const AxisTransform& tr, double x);

/// Normalization of a decreasing transform: values[k] / u(a⁻¹(x[k])) for a decreasing
/// transform.
std::vector<double> normalize_decreasing(std::span<const double> values, std::span<const double> x,
                                         const AxisTransform& tr);

/// A supremum problem for the n-parameter field restricted to a subset:
/// P{ sup_S (X − g) < 0 }.
struct Scenario {
    std::string label;
    SeparableKernel ambient;
    RestrictionSpec restriction;
    Expr drift;
};

/// Validates the restriction, the ambient kernel and the drift's variables
/// (which must be among s1..sn).
Scenario make_scenario(std::string label, RestrictionSpec restriction, Expr drift,
                       std::optional<SeparableKernel> ambient = std::nullopt);

/// Kernel of the field restricted to the subset, on ∏ [0, y_i].
SeparableKernel restricted_kernel(const Scenario& sc);

/// g_S(s) = g(lift(s)).
double restricted_drift(const Scenario& sc, std::span<const double> s);

/// Where an infinite reduced bound was replaced by a finite one.
struct TruncationRecord {
    std::size_t axis = 0;         // 1-based
    double original_cap = 0.0;    // y_i (1 − 1/G)
    double cap = 0.0;             // a_i(original_cap)
};

/// Image of a scenario on the parallelepiped ∏ [0, x_i], x_i = a_i(y_i), with
/// drift h(t) = g_S(a⁻¹(t)) / ∏ v_i(a_i⁻¹(t_i)) evaluated compositely.
class ReducedScenario {
public:
    std::size_t dim() const noexcept { return transforms_.size(); }
    const Scenario& scenario() const noexcept { return *scenario_; }
    const std::vector<AxisTransform>& transforms() const noexcept { return transforms_; }
    /// x_i, possibly +inf.
    const std::vector<double>& bounds() const noexcept { return bounds_; }
    /// Finite upper limit actually used on each axis.
    const std::vector<double>& caps() const noexcept { return caps_; }
    /// Matching upper limit in the original coordinate (y_i or y_i (1 − 1/G)).
    const std::vector<double>& original_caps() const noexcept { return original_caps_; }
    const std::vector<TruncationRecord>& truncations() const noexcept { return truncations_; }
    std::size_t grid_points() const noexcept { return grid_points_; }

    /// h(t). Throws EvalError when the normalizer vanishes at a⁻¹(t).
    double drift(std::span<const double> t) const;
    /// h at the point whose original coordinates are already known: used
    /// when the grid was built by mapping original coordinates forward.
    double drift_at_original(std::span<const double> s) const;

private:
    friend ReducedScenario reduce_scenario(const Scenario&, std::size_t);

    std::shared_ptr<const Scenario> scenario_;
    std::vector<AxisTransform> transforms_;
    std::vector<double> bounds_;
    std::vector<double> caps_;
    std::vector<double> original_caps_;
    std::vector<TruncationRecord> truncations_;
    std::size_t grid_points_ = 1000;
};

/// Applies the restriction-and-time-change reduction. Infinite bounds are
/// capped at a_i(y_i (1 − 1/grid_points)).
ReducedScenario reduce_scenario(const Scenario& sc, std::size_t grid_points = 1000);

}  // namespace sheetmax
