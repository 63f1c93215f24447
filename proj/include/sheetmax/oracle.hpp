#pragma once

#include <map>
#include <string>

namespace sheetmax {

/// Closed-form reference probability.
struct OracleResult {
    double probability = 0.0;
    std::string formula;
    std::map<std::string, double> parameters;
};

/// Standard normal CDF, 0.5·erfc(−x/√2).
double normal_cdf(double x);

/// P{ sup_{t ≥ 0} (w(t) − a t − b) < 0 } = 1 − exp(−2ab), a, b ≥ 0.
double linear_drift_crossing(double a, double b);

/// P{ sup_{[0,T]} w(t) < b } = 2Φ(b/√T) − 1, b, T > 0 (reflection principle).
double reflection_bound(double b, double horizon);

OracleResult linear_drift_oracle(double a, double b);
OracleResult reflection_oracle(double b, double horizon);

}  // namespace sheetmax
