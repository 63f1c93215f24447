#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sheetmax {

using Bindings = std::map<std::string, double, std::less<>>;

/// Immutable arithmetic expression over named real variables.
///
/// Grammar (lowest to highest precedence):
///
///     expr    := term (('+' | '-') term)*
///     term    := power (('*' | '/') power)*
///     power   := unary ('^' power)?
///     unary   := '-' unary | primary
///     primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
///
/// Unary minus binds tighter than `^`, so `-x^2` is `(-x)^2`. A minus sign
/// directly in front of a number is part of the literal. `pow(a, b)` and
/// `a ^ b` produce the same node. Functions: sqrt exp log (one argument),
/// min max pow (two arguments).
///
/// Nodes are shared and never mutated, so copies are cheap and an Expr may be
/// evaluated from any number of threads at once.
class Expr {
public:
    enum class Kind { literal, variable, negate, add, subtract, multiply, divide, power, call };
    enum class Function { sqrt, exp, log, min, max };

    struct Node {
        Kind kind = Kind::literal;
        double value = 0.0;
        std::string name;
        Function function = Function::sqrt;
        std::vector<std::shared_ptr<const Node>> operands;
    };

    /// Parses `text`; every identifier not followed by '(' becomes a variable.
    static Expr parse(std::string_view text);
    /// As above, but rejects variables outside `allowed`.
    static Expr parse(std::string_view text, std::span<const std::string> allowed);

    static Expr literal(double value);
    static Expr variable(std::string name);
    static Expr negate(const Expr& operand);
    static Expr binary(Kind kind, const Expr& lhs, const Expr& rhs);
    static Expr call(Function function, std::vector<Expr> args);

    double eval(const Bindings& bindings) const;
    /// Binds every variable of the expression to `x`. Intended for the
    /// single-variable axis functions (u, v, z, f).
    double eval1(double x) const;

    /// Sorted, de-duplicated variable names.
    const std::vector<std::string>& free_vars() const noexcept { return free_vars_; }

    /// Minimal-parenthesis rendering that parses back to the same tree.
    std::string to_string() const;

    /// Copy with every variable renamed to `name`.
    Expr renamed(const std::string& name) const;

    Kind kind() const noexcept { return root_->kind; }
    double value() const noexcept { return root_->value; }
    const std::string& name() const noexcept { return root_->name; }
    Function function() const noexcept { return root_->function; }
    std::size_t arity() const noexcept { return root_->operands.size(); }
    Expr operand(std::size_t i) const { return Expr(root_->operands.at(i)); }

    friend bool operator==(const Expr& a, const Expr& b);

private:
    explicit Expr(std::shared_ptr<const Node> root);

    std::shared_ptr<const Node> root_;
    std::vector<std::string> free_vars_;
};

std::string_view function_name(Expr::Function f) noexcept;

}  // namespace sheetmax
