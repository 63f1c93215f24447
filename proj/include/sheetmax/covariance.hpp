#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sheetmax/expr.hpp"

namespace sheetmax {

/// One factor u(s ∧ t) v(s ∨ t) of a separable covariance.
struct AxisKernel {
    Expr u;
    Expr v;
};

/// Covariance ∏ u_i(s_i ∧ t_i) v_i(s_i ∨ t_i) on ∏ [0, upper_i].
class SeparableKernel {
public:
    /// Checks that every u, v has at most one variable and that u·v > 0 on a
    /// 100-point grid of each open axis domain. Throws ValidationError.
    SeparableKernel(std::vector<AxisKernel> axes, std::vector<double> upper);

    std::size_t dim() const noexcept { return axes_.size(); }
    const std::vector<AxisKernel>& axes() const noexcept { return axes_; }
    const AxisKernel& axis(std::size_t i) const { return axes_.at(i); }
    double upper(std::size_t i) const { return upper_.at(i); }
    const std::vector<double>& upper() const noexcept { return upper_; }

    double covariance(std::span<const double> s, std::span<const double> t) const;

private:
    std::vector<AxisKernel> axes_;
    std::vector<double> upper_;
};

/// The n-parameter Brownian sheet on [0,1]^n: u(t) = t, v(t) = 1.
SeparableKernel sheet_kernel(std::size_t n);

inline double covariance(const SeparableKernel& k, std::span<const double> s,
                         std::span<const double> t) {
    return k.covariance(s, t);
}

/// A d-dimensional subset of the n-parameter sheet's domain: free axes
/// s_1..s_d in ∏ [0, y_i], dependent axes s_{d+k} = f_{d+k}(s_{j_k}), together
/// with user-supplied factors z_i satisfying ∏_k f_{d+k}(s_{j_k}) = ∏_i z_i(s_i).
///
/// Axis indices in `deps` are 1-based to match scenario files.
struct RestrictionSpec {
    std::size_t ambient_dim = 0;
    std::size_t free_dims = 0;
    std::vector<std::size_t> deps;   // deps[k]: free axis driving ambient axis d+1+k
    std::vector<Expr> formulas;      // f_{d+1} .. f_n
    std::vector<Expr> factors;       // z_1 .. z_d
    std::vector<double> bounds;      // y_1 .. y_d
};

/// Outcome of one structural check; `worst_point` and `residual` are filled
/// by the numeric checks.
struct CheckReport {
    std::string check;
    bool ok = true;
    std::string detail;
    std::vector<double> worst_point;
    double residual = 0.0;
};

/// Absolute shrink ε_i = 1e-9·y_i applied at the top of each free axis.
inline double domain_margin(double y) { return 1e-9 * y; }

/// Fixed sample for the factorization and range checks: the 101-point tensor
/// grid over ∏ [0, y_i − ε_i] when d ≤ 2 (the 101-point diagonal otherwise),
/// followed by 1000 points drawn from a fixed verification seed.
std::vector<std::vector<double>> verification_points(const RestrictionSpec& spec);

/// Runs shape, factorization, monotonicity and range checks in order.
/// Never throws on a failed check; each failure is reported.
std::vector<CheckReport> check_restriction(const RestrictionSpec& spec);

/// Throws ValidationError describing the first failed check.
void validate(const RestrictionSpec& spec);

/// Ambient point (s_1..s_d, f_{d+1}(s_{j_1}), .., f_n(s_{j_{n-d}})).
std::vector<double> lift(const RestrictionSpec& spec, std::span<const double> free_point);

/// Covariance of the sheet restricted to the subset: ∏ (s_i ∧ t_i) z_i(s_i ∨ t_i).
SeparableKernel restrict(const RestrictionSpec& spec);

/// Same, for an ambient separable field whose dependent axes are sheet axes;
/// the free axes keep their own (u_i, v_i) and gain the factor z_i in v.
SeparableKernel restrict(const RestrictionSpec& spec, const SeparableKernel& ambient);

/// True when u(t) = t and v(t) = 1 on a grid of [0, 1].
bool is_sheet_axis(const AxisKernel& axis);

}  // namespace sheetmax
