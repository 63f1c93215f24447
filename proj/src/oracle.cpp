#include "sheetmax/oracle.hpp"

#include <cmath>
#include <numbers>

#include "sheetmax/error.hpp"

namespace sheetmax {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double linear_drift_crossing(double a, double b) {
    if (!(a >= 0.0) || !(b >= 0.0))
        throw Error("linear_drift_crossing: parameters must be non-negative");
    return -std::expm1(-2.0 * a * b);
}

double reflection_bound(double b, double horizon) {
    if (!(b > 0.0) || !(horizon > 0.0)) throw Error("reflection_bound: parameters must be positive");
    // 2Φ(z) − 1 = erf(z/√2); erf keeps full relative precision for small z.
    return std::erf(b / std::sqrt(horizon) / std::numbers::sqrt2);
}

OracleResult linear_drift_oracle(double a, double b) {
    return {linear_drift_crossing(a, b), "linear_drift_crossing", {{"a", a}, {"b", b}}};
}

OracleResult reflection_oracle(double b, double horizon) {
    return {reflection_bound(b, horizon), "reflection_bound", {{"b", b}, {"T", horizon}}};
}

}  // namespace sheetmax
