#include "sheetmax/transform.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "sheetmax/error.hpp"

namespace sheetmax {

namespace {

constexpr std::size_t kGridPoints = 101;
constexpr double kInf = std::numeric_limits<double>::infinity();

double grid_point(double y, std::size_t k) {
    return (y - domain_margin(y)) * static_cast<double>(k) / static_cast<double>(kGridPoints - 1);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Ratio num(t)/den(t) with a vanishing denominator mapped to +inf.
double ratio(const Expr& num, const Expr& den, double t) {
    const double d = den.eval1(t);
    const double n = num.eval1(t);
    if (d == 0.0) return n == 0.0 ? std::numeric_limits<double>::quiet_NaN() : kInf;
    return n / d;
}

// Shortest decimal within 1e-13 relative of c, if one with ≤ 12 significant
// digits exists; otherwise c itself.
double snap(double c) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", c);
    double s = c;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), s);
    return std::fabs(s - c) <= 1e-13 * std::fabs(c) ? s : c;
}

bool round_trip_ok(const AxisTransform& tr, const Expr& inverse, double y) {
    for (std::size_t k = 0; k < kGridPoints; ++k) {
        const double p = grid_point(y, k);
        const double x = tr.forward(p);
        const double t = inverse.eval1(x);
        const double back = tr.forward(t);
        const bool forward_ok = std::fabs(back - x) <= 1e-10 * std::max(std::fabs(x), 1e-300) ||
                                back == x;
        // Near the top of the domain a is too steep for a(a⁻¹(x)) to be
        // representable to 1e-10; accept a⁻¹(x) matching t instead.
        const bool inverse_ok = std::fabs(t - p) <= 1e-12 * std::max(std::fabs(p), 1e-300) || t == p;
        if (!forward_ok && !inverse_ok) return false;
    }
    return true;
}

}  // namespace

double AxisTransform::forward(double t) const { return ratio(numerator_, denominator_, t); }

AxisTransform AxisTransform::without_analytic_inverse() const {
    AxisTransform copy = *this;
    copy.inverse_.reset();
    copy.family_.clear();
    return copy;
}

AxisTransform time_change(const AxisKernel& axis, double y, DirectionRequest request) {
    if (!(y > 0.0)) throw ValidationError("time_change", "domain bound must be positive");
    const Expr u = axis.u.renamed("t");
    const Expr v = axis.v.renamed("t");

    auto build = [&](Direction dir, std::string& failure) -> std::optional<AxisTransform> {
        AxisTransform tr;
        tr.direction_ = dir;
        tr.upper_ = y;
        if (dir == Direction::increasing) {
            tr.numerator_ = u;
            tr.denominator_ = v;
            tr.normalizer_ = v;
        } else {
            tr.numerator_ = v;
            tr.denominator_ = u;
            tr.normalizer_ = u;
        }
        tr.map_ = Expr::binary(Expr::Kind::divide, tr.numerator_, tr.denominator_);
        const char* ratio_name = dir == Direction::increasing ? "u/v" : "v/u";
        try {
            double prev = 0.0;
            double prev_t = 0.0;
            bool have_prev = false;
            for (std::size_t k = 0; k < kGridPoints; ++k) {
                const double t = grid_point(y, k);
                const double a = tr.forward(t);
                if (std::isnan(a)) {
                    failure = std::string(ratio_name) + " is undefined at t = " + fmt(t);
                    return std::nullopt;
                }
                if (std::isinf(a)) {
                    // Only the decreasing form may start at +inf (u(0) = 0).
                    if (dir == Direction::decreasing && k == 0) continue;
                    failure = std::string(ratio_name) + " is infinite at t = " + fmt(t);
                    return std::nullopt;
                }
                if (have_prev) {
                    const bool ok = dir == Direction::increasing ? a > prev : a < prev;
                    if (!ok) {
                        failure = std::string(ratio_name) + " is not strictly " +
                                  (dir == Direction::increasing ? "increasing" : "decreasing") +
                                  " between t = " + fmt(prev_t) + " (" + fmt(prev) + ") and t = " + fmt(t) +
                                  " (" + fmt(a) + ")";
                        return std::nullopt;
                    }
                }
                prev = a;
                prev_t = t;
                have_prev = true;
            }
            tr.image_origin_ = tr.forward(0.0);
            tr.image_bound_ = tr.forward(y);
            if (std::isnan(tr.image_bound_)) tr.image_bound_ = prev;
        } catch (const EvalError& e) {
            failure = e.what();
            return std::nullopt;
        }
        return tr;
    };

    std::string inc_failure;
    std::string dec_failure;
    std::optional<AxisTransform> tr;
    if (request != DirectionRequest::decreasing) tr = build(Direction::increasing, inc_failure);
    if (!tr && request != DirectionRequest::increasing) tr = build(Direction::decreasing, dec_failure);
    if (!tr) {
        std::string msg = inc_failure.empty() ? dec_failure
                          : dec_failure.empty() ? inc_failure
                                                : inc_failure + "; " + dec_failure;
        throw ValidationError("time_change", msg);
    }

    if (tr->direction_ == Direction::increasing && tr->image_origin_ == 0.0) {
        // identity
        bool identity = true;
        for (std::size_t k = 0; k < kGridPoints && identity; ++k) {
            const double t = grid_point(y, k);
            identity = std::fabs(tr->forward(t) - t) <= 1e-14 * std::max(t, 1e-300);
        }
        if (identity) {
            Expr inv = Expr::variable("x");
            if (round_trip_ok(*tr, inv, y)) {
                tr->inverse_ = inv;
                tr->family_ = "identity";
                return *tr;
            }
        }
        // a(t) = t / (c - t)  =>  a⁻¹(x) = c x / (1 + x)
        const double pm = grid_point(y, kGridPoints / 2);
        const double am = tr->forward(pm);
        if (am > 0.0) {
            const double c = snap(pm * (1.0 + 1.0 / am));
            bool family = c >= y;
            for (std::size_t k = 1; k < kGridPoints && family; ++k) {
                const double t = grid_point(y, k);
                const double want = t / (c - t);
                family = std::fabs(tr->forward(t) - want) <= 1e-12 * std::fabs(want);
            }
            if (family) {
                Expr x = Expr::variable("x");
                Expr inv = Expr::binary(
                    Expr::Kind::divide, Expr::binary(Expr::Kind::multiply, Expr::literal(c), x),
                    Expr::binary(Expr::Kind::add, Expr::literal(1.0), x));
                if (round_trip_ok(*tr, inv, y)) {
                    tr->inverse_ = inv;
                    tr->family_ = "t/(c-t)";
                }
            }
        }
    }
    return *tr;
}

double invert(const AxisTransform& tr, double x) {
    const bool inc = tr.direction() == Direction::increasing;
    const double lo_img = inc ? tr.image_origin() : tr.image_bound();
    const double hi_img = inc ? tr.image_bound() : tr.image_origin();
    if (!(x >= lo_img && x <= hi_img) || std::isinf(x))
        throw ValidationError("invert", "x = " + fmt(x) + " is outside the image [" + fmt(lo_img) + ", " +
                                            fmt(hi_img) + "]");
    if (tr.analytic_inverse()) return tr.analytic_inverse()->eval1(x);

    const double y = tr.domain_upper();
    if (x == tr.image_origin()) return 0.0;
    if (x == tr.image_bound()) return y;
    // Keep a(lo) on the "below x" side for both directions.
    auto below = [&](double a) { return inc ? a < x : a > x; };
    double lo = 0.0;
    double hi = y;
    for (int iter = 0; iter < 2200; ++iter) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (below(tr.forward(mid))) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double a_lo = lo == 0.0 ? tr.image_origin() : tr.forward(lo);
    const double a_hi = hi == y ? tr.image_bound() : tr.forward(hi);
    return std::fabs(a_lo - x) <= std::fabs(a_hi - x) ? lo : hi;
}

std::vector<double> normalize_decreasing(std::span<const double> values, std::span<const double> x,
                                         const AxisTransform& tr) {
    if (tr.direction() != Direction::decreasing)
        throw ValidationError("normalize", "transform is not in the decreasing form");
    if (values.size() != x.size()) throw Error("normalize_decreasing: size mismatch");
    std::vector<double> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double s = invert(tr, x[k]);
        const double n = tr.normalizer_at(s);
        if (n == 0.0) throw ValidationError("normalize", "normalizer vanishes at t = " + fmt(s));
        out[k] = values[k] / n;
    }
    return out;
}

Scenario make_scenario(std::string label, RestrictionSpec restriction, Expr drift,
                       std::optional<SeparableKernel> ambient) {
    validate(restriction);
    const std::size_t n = restriction.ambient_dim;
    for (const auto& name : drift.free_vars()) {
        bool ok = name.size() >= 2 && name[0] == 's';
        std::size_t m = 0;
        for (std::size_t i = 1; ok && i < name.size(); ++i) {
            ok = name[i] >= '0' && name[i] <= '9';
            m = m * 10 + static_cast<std::size_t>(name[i] - '0');
        }
        if (!ok || m < 1 || m > n)
            throw ValidationError("drift", "variable '" + name + "' is not one of s1..s" + std::to_string(n));
    }
    SeparableKernel kernel = ambient ? std::move(*ambient) : sheet_kernel(n);
    if (kernel.dim() != n) throw ValidationError("kernel", "ambient kernel dimension differs from ambient_dim");
    Scenario sc{std::move(label), std::move(kernel), std::move(restriction), std::move(drift)};
    restricted_kernel(sc);
    return sc;
}

SeparableKernel restricted_kernel(const Scenario& sc) { return restrict(sc.restriction, sc.ambient); }

double restricted_drift(const Scenario& sc, std::span<const double> s) {
    const auto point = lift(sc.restriction, s);
    Bindings b;
    for (std::size_t i = 0; i < point.size(); ++i) b.emplace("s" + std::to_string(i + 1), point[i]);
    return sc.drift.eval(b);
}

double ReducedScenario::drift(std::span<const double> t) const {
    if (t.size() != dim()) throw Error("drift: point dimension does not match reduced scenario");
    std::vector<double> s(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) s[i] = invert(transforms_[i], t[i]);
    return drift_at_original(s);
}

double ReducedScenario::drift_at_original(std::span<const double> s) const {
    double den = 1.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double z = transforms_[i].normalizer_at(s[i]);
        if (z == 0.0)
            throw EvalError("normalizer of axis " + std::to_string(i + 1) + " vanishes at s = " + fmt(s[i]) +
                            " inside the reduced domain");
        den *= z;
    }
    return restricted_drift(*scenario_, s) / den;
}

ReducedScenario reduce_scenario(const Scenario& sc, std::size_t grid_points) {
    if (grid_points < 2) throw ValidationError("reduce", "grid needs at least 2 points per axis");
    const SeparableKernel kernel = restricted_kernel(sc);
    ReducedScenario r;
    r.scenario_ = std::make_shared<const Scenario>(sc);
    r.grid_points_ = grid_points;
    for (std::size_t i = 0; i < kernel.dim(); ++i) {
        const double y = sc.restriction.bounds[i];
        AxisTransform tr = time_change(kernel.axis(i), y, DirectionRequest::increasing);
        const double x = tr.image_bound();
        r.bounds_.push_back(x);
        if (std::isinf(x)) {
            const double y_cap = y * (1.0 - 1.0 / static_cast<double>(grid_points));
            const double cap = tr.forward(y_cap);
            r.original_caps_.push_back(y_cap);
            r.caps_.push_back(cap);
            r.truncations_.push_back({i + 1, y_cap, cap});
        } else {
            r.original_caps_.push_back(y);
            r.caps_.push_back(x);
        }
        r.transforms_.push_back(std::move(tr));
    }
    return r;
}

}  // namespace sheetmax
