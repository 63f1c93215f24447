#include "sheetmax/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sheetmax/error.hpp"
#include "sheetmax/rng.hpp"

namespace sheetmax {

namespace {

constexpr std::size_t kAxisSamples = 101;
constexpr std::size_t kRandomSamples = 1000;
constexpr std::uint64_t kVerificationSeed = 0x5eedf00dULL;
constexpr double kFactorizationTolerance = 1e-9;

std::string point_string(std::span<const double> p) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ')';
    return os.str();
}

double axis_sample(double y, std::size_t k) {
    return (y - domain_margin(y)) * static_cast<double>(k) / static_cast<double>(kAxisSamples - 1);
}

// Variable name "s<m>" -> m, or 0 when the name has another form.
std::size_t axis_of_name(const std::string& name) {
    if (name.size() < 2 || name[0] != 's') return 0;
    std::size_t m = 0;
    for (std::size_t i = 1; i < name.size(); ++i) {
        if (name[i] < '0' || name[i] > '9') return 0;
        m = m * 10 + static_cast<std::size_t>(name[i] - '0');
    }
    return m;
}

CheckReport check_shape(const RestrictionSpec& spec) {
    CheckReport r{"shape", true, {}, {}, 0.0};
    auto fail = [&](std::string msg) {
        r.ok = false;
        r.detail = std::move(msg);
        return r;
    };
    const std::size_t n = spec.ambient_dim;
    const std::size_t d = spec.free_dims;
    if (d < 1) return fail("free_dims must be at least 1");
    if (n <= d) return fail("ambient_dim must exceed free_dims");
    if (spec.formulas.size() != n - d || spec.deps.size() != n - d)
        return fail("expected " + std::to_string(n - d) + " dependent-axis formulas and deps");
    if (spec.factors.size() != d || spec.bounds.size() != d)
        return fail("expected " + std::to_string(d) + " factors and bounds");
    for (std::size_t i = 0; i < d; ++i) {
        const double y = spec.bounds[i];
        if (!(y > 0.0 && y <= 1.0))
            return fail("bound y_" + std::to_string(i + 1) + " must lie in (0, 1]");
        if (spec.factors[i].free_vars().size() > 1)
            return fail("factor z_" + std::to_string(i + 1) + " must depend on one variable");
    }
    for (std::size_t k = 0; k < n - d; ++k) {
        const std::size_t axis = d + 1 + k;
        const std::size_t j = spec.deps[k];
        if (j < 1 || j > d)
            return fail("axis " + std::to_string(axis) + " depends on free axis " + std::to_string(j) +
                        ", outside 1.." + std::to_string(d));
        const auto& vars = spec.formulas[k].free_vars();
        if (vars.size() > 1) return fail("formula f_" + std::to_string(axis) + " must depend on one variable");
        if (vars.size() == 1) {
            const std::size_t named = axis_of_name(vars[0]);
            if (named != 0 && named != j)
                return fail("formula f_" + std::to_string(axis) + " uses " + vars[0] +
                            " but deps maps it to s" + std::to_string(j));
        }
    }
    return r;
}

double dependent_product(const RestrictionSpec& spec, std::span<const double> s) {
    double p = 1.0;
    for (std::size_t k = 0; k < spec.formulas.size(); ++k) p *= spec.formulas[k].eval1(s[spec.deps[k] - 1]);
    return p;
}

double factor_product(const RestrictionSpec& spec, std::span<const double> s) {
    double p = 1.0;
    for (std::size_t i = 0; i < spec.factors.size(); ++i) p *= spec.factors[i].eval1(s[i]);
    return p;
}

CheckReport check_factorization(const RestrictionSpec& spec,
                                const std::vector<std::vector<double>>& points) {
    CheckReport r{"factorization", true, {}, {}, 0.0};
    try {
        for (const auto& p : points) {
            const double lhs = dependent_product(spec, p);
            const double rhs = factor_product(spec, p);
            const double scale = std::max(std::fabs(lhs), std::fabs(rhs));
            const double residual = scale == 0.0 ? 0.0 : std::fabs(lhs - rhs) / scale;
            if (!(residual <= r.residual)) {
                r.residual = residual;
                r.worst_point = p;
            }
        }
    } catch (const EvalError& e) {
        r.ok = false;
        r.detail = e.what();
        return r;
    }
    if (!(r.residual <= kFactorizationTolerance)) {
        r.ok = false;
        r.detail = "product of formulas differs from product of factors by relative " +
                   std::to_string(r.residual) + " at " + point_string(r.worst_point);
    }
    return r;
}

CheckReport check_monotonicity(const RestrictionSpec& spec) {
    CheckReport r{"monotonicity", true, {}, {}, 0.0};
    try {
        for (std::size_t i = 0; i < spec.factors.size(); ++i) {
            const auto& z = spec.factors[i];
            double prev_t = 0.0;
            double prev = 0.0;
            for (std::size_t k = 0; k < kAxisSamples; ++k) {
                const double t = axis_sample(spec.bounds[i], k);
                const double val = z.eval1(t);
                if (!(val > 0.0)) {
                    r.ok = false;
                    r.worst_point = {t};
                    r.residual = val;
                    r.detail = "z_" + std::to_string(i + 1) + " is not positive at t = " + std::to_string(t);
                    return r;
                }
                if (k > 0 && val > prev) {
                    r.ok = false;
                    r.worst_point = {prev_t, t};
                    r.residual = val - prev;
                    r.detail = "z_" + std::to_string(i + 1) + " increases between t = " + std::to_string(prev_t) +
                               " and t = " + std::to_string(t);
                    return r;
                }
                prev_t = t;
                prev = val;
            }
        }
    } catch (const EvalError& e) {
        r.ok = false;
        r.detail = e.what();
    }
    return r;
}

CheckReport check_range(const RestrictionSpec& spec, const std::vector<std::vector<double>>& points) {
    CheckReport r{"range", true, {}, {}, 0.0};
    try {
        for (const auto& p : points) {
            for (std::size_t k = 0; k < spec.formulas.size(); ++k) {
                const double v = spec.formulas[k].eval1(p[spec.deps[k] - 1]);
                if (!(v >= 0.0 && v <= 1.0)) {
                    r.ok = false;
                    r.worst_point = p;
                    r.residual = v;
                    r.detail = "f_" + std::to_string(spec.free_dims + 1 + k) + " = " + std::to_string(v) +
                               " leaves [0, 1] at " + point_string(p);
                    return r;
                }
            }
        }
    } catch (const EvalError& e) {
        r.ok = false;
        r.detail = e.what();
    }
    return r;
}

}  // namespace

SeparableKernel::SeparableKernel(std::vector<AxisKernel> axes, std::vector<double> upper)
    : axes_(std::move(axes)), upper_(std::move(upper)) {
    if (axes_.empty()) throw ValidationError("kernel", "kernel needs at least one axis");
    if (upper_.size() != axes_.size()) throw ValidationError("kernel", "one upper bound per axis required");
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        const auto& a = axes_[i];
        const std::string tag = "axis " + std::to_string(i + 1);
        if (a.u.free_vars().size() > 1 || a.v.free_vars().size() > 1)
            throw ValidationError("kernel", tag + ": u and v must each depend on one variable");
        if (!(upper_[i] > 0.0)) throw ValidationError("kernel", tag + ": upper bound must be positive");
        for (std::size_t k = 1; k < kAxisSamples; ++k) {
            const double t = axis_sample(upper_[i], k);
            double uv = 0.0;
            try {
                uv = a.u.eval1(t) * a.v.eval1(t);
            } catch (const EvalError& e) {
                throw ValidationError("kernel", tag + ": " + e.what());
            }
            if (!(uv > 0.0))
                throw ValidationError("kernel", tag + ": u(t)·v(t) is not positive at t = " + std::to_string(t));
        }
    }
}

double SeparableKernel::covariance(std::span<const double> s, std::span<const double> t) const {
    if (s.size() != axes_.size() || t.size() != axes_.size())
        throw Error("covariance: point dimension does not match kernel");
    double c = 1.0;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        const double lo = std::min(s[i], t[i]);
        const double hi = std::max(s[i], t[i]);
        c *= axes_[i].u.eval1(lo) * axes_[i].v.eval1(hi);
    }
    return c;
}

SeparableKernel sheet_kernel(std::size_t n) {
    if (n < 1) throw ValidationError("kernel", "sheet dimension must be at least 1");
    std::vector<AxisKernel> axes(n, AxisKernel{Expr::variable("t"), Expr::literal(1.0)});
    return SeparableKernel(std::move(axes), std::vector<double>(n, 1.0));
}

std::vector<std::vector<double>> verification_points(const RestrictionSpec& spec) {
    const std::size_t d = spec.free_dims;
    std::vector<std::vector<double>> points;
    if (d == 1) {
        for (std::size_t k = 0; k < kAxisSamples; ++k) points.push_back({axis_sample(spec.bounds[0], k)});
    } else if (d == 2) {
        for (std::size_t a = 0; a < kAxisSamples; ++a)
            for (std::size_t b = 0; b < kAxisSamples; ++b)
                points.push_back({axis_sample(spec.bounds[0], a), axis_sample(spec.bounds[1], b)});
    } else {
        for (std::size_t k = 0; k < kAxisSamples; ++k) {
            std::vector<double> p(d);
            for (std::size_t i = 0; i < d; ++i) p[i] = axis_sample(spec.bounds[i], k);
            points.push_back(std::move(p));
        }
    }
    Rng rng(kVerificationSeed);
    for (std::size_t k = 0; k < kRandomSamples; ++k) {
        std::vector<double> p(d);
        for (std::size_t i = 0; i < d; ++i) {
            const double y = spec.bounds[i];
            p[i] = rng.uniform() * (y - domain_margin(y));
        }
        points.push_back(std::move(p));
    }
    return points;
}

std::vector<CheckReport> check_restriction(const RestrictionSpec& spec) {
    std::vector<CheckReport> reports{check_shape(spec)};
    if (!reports.front().ok) return reports;
    const auto points = verification_points(spec);
    reports.push_back(check_factorization(spec, points));
    reports.push_back(check_monotonicity(spec));
    reports.push_back(check_range(spec, points));
    return reports;
}

void validate(const RestrictionSpec& spec) {
    for (const auto& r : check_restriction(spec))
        if (!r.ok) throw ValidationError(r.check, r.detail);
}

std::vector<double> lift(const RestrictionSpec& spec, std::span<const double> free_point) {
    if (free_point.size() != spec.free_dims) throw Error("lift: point dimension does not match free_dims");
    std::vector<double> out(free_point.begin(), free_point.end());
    out.reserve(spec.ambient_dim);
    for (std::size_t k = 0; k < spec.formulas.size(); ++k)
        out.push_back(spec.formulas[k].eval1(free_point[spec.deps[k] - 1]));
    return out;
}

SeparableKernel restrict(const RestrictionSpec& spec) {
    validate(spec);
    std::vector<AxisKernel> axes;
    for (const auto& z : spec.factors) axes.push_back({Expr::variable("t"), z.renamed("t")});
    return SeparableKernel(std::move(axes), spec.bounds);
}

SeparableKernel restrict(const RestrictionSpec& spec, const SeparableKernel& ambient) {
    validate(spec);
    if (ambient.dim() != spec.ambient_dim)
        throw ValidationError("kernel", "ambient kernel dimension differs from ambient_dim");
    for (std::size_t a = spec.free_dims; a < spec.ambient_dim; ++a) {
        if (!is_sheet_axis(ambient.axis(a)))
            throw ValidationError("kernel", "dependent axis " + std::to_string(a + 1) +
                                                " must be a Brownian-sheet axis (u = t, v = 1)");
    }
    std::vector<AxisKernel> axes;
    for (std::size_t i = 0; i < spec.free_dims; ++i) {
        const auto& src = ambient.axis(i);
        Expr v = is_sheet_axis(src) ? spec.factors[i].renamed("t")
                                    : Expr::binary(Expr::Kind::multiply, src.v.renamed("t"),
                                                   spec.factors[i].renamed("t"));
        axes.push_back({src.u.renamed("t"), std::move(v)});
    }
    return SeparableKernel(std::move(axes), spec.bounds);
}

bool is_sheet_axis(const AxisKernel& axis) {
    try {
        for (std::size_t k = 0; k < kAxisSamples; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(kAxisSamples - 1);
            if (axis.u.eval1(t) != t || axis.v.eval1(t) != 1.0) return false;
        }
    } catch (const EvalError&) {
        return false;
    }
    return true;
}

}  // namespace sheetmax
