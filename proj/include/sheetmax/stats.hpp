#pragma once

#include <cstddef>
#include <span>
#include <utility>

namespace sheetmax {

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials`, clipped to [0, 1].
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z = kZ95);

/// Two-sample Kolmogorov–Smirnov statistic sup_x |F_a(x) − F_b(x)|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Asymptotic two-sample critical value c(α)·√((n+m)/(nm)),
/// c(α) = √(−ln(α/2)/2).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

}  // namespace sheetmax
