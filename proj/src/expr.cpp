#include "sheetmax/expr.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <set>

#include "sheetmax/error.hpp"

namespace sheetmax {

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Kind = Expr::Kind;
using Function = Expr::Function;

struct FunctionInfo {
    std::string_view name;
    Function function;
    std::size_t arity;
};

constexpr std::array<FunctionInfo, 6> kFunctions{{
    {"sqrt", Function::sqrt, 1},
    {"exp", Function::exp, 1},
    {"log", Function::log, 1},
    {"min", Function::min, 2},
    {"max", Function::max, 2},
    {"pow", Function::sqrt, 2},  // maps onto Kind::power, function field unused
}};

NodePtr make_literal(double v) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Kind::literal;
    n->value = v;
    return n;
}

NodePtr make_variable(std::string name) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Kind::variable;
    n->name = std::move(name);
    return n;
}

NodePtr make_op(Kind kind, std::vector<NodePtr> operands, Function fn = Function::sqrt) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = kind;
    n->function = fn;
    n->operands = std::move(operands);
    return n;
}

// Precedence levels used by the printer; higher binds tighter.
int precedence(const Expr::Node& n) {
    switch (n.kind) {
        case Kind::add:
        case Kind::subtract: return 1;
        case Kind::multiply:
        case Kind::divide: return 2;
        case Kind::power: return 3;
        case Kind::negate: return 4;
        default: return 5;
    }
}

void format_number(double v, std::string& out) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), end);
}

void print(const Expr::Node& n, std::string& out) {
    auto child = [&](const NodePtr& c, bool parens) {
        if (parens) out += '(';
        print(*c, out);
        if (parens) out += ')';
    };
    switch (n.kind) {
        case Kind::literal:
            if (n.value < 0 || std::signbit(n.value)) {
                out += '(';
                format_number(n.value, out);
                out += ')';
            } else {
                format_number(n.value, out);
            }
            return;
        case Kind::variable: out += n.name; return;
        case Kind::negate:
            out += '-';
            child(n.operands[0], precedence(*n.operands[0]) < 4 || n.operands[0]->kind == Kind::literal);
            return;
        case Kind::power:
            child(n.operands[0], precedence(*n.operands[0]) <= 3);
            out += " ^ ";
            child(n.operands[1], precedence(*n.operands[1]) < 3);
            return;
        case Kind::call:
            out += function_name(n.function);
            out += '(';
            for (std::size_t i = 0; i < n.operands.size(); ++i) {
                if (i) out += ", ";
                print(*n.operands[i], out);
            }
            out += ')';
            return;
        default: {
            const int p = precedence(n);
            const char* op = n.kind == Kind::add        ? " + "
                             : n.kind == Kind::subtract ? " - "
                             : n.kind == Kind::multiply ? " * "
                                                        : " / ";
            child(n.operands[0], precedence(*n.operands[0]) < p);
            out += op;
            child(n.operands[1], precedence(*n.operands[1]) <= p);
            return;
        }
    }
}

std::string render(const Expr::Node& n) {
    std::string s;
    print(n, s);
    return s;
}

class Parser {
public:
    Parser(std::string_view text, std::span<const std::string> allowed, bool restrict_vars)
        : text_(text), allowed_(allowed), restrict_vars_(restrict_vars) {}

    NodePtr run() {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError(pos_, "expected expression, found end of input");
        NodePtr root = parse_expr();
        skip_space();
        if (pos_ < text_.size())
            throw ParseError(pos_, "expected operator or end of input, found '" +
                                       std::string(1, text_[pos_]) + "'");
        return root;
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            throw ParseError(pos_, std::string("expected '") + c + "', found " + describe_here());
        }
    }

    std::string describe_here() const {
        if (pos_ >= text_.size()) return "end of input";
        return "'" + std::string(1, text_[pos_]) + "'";
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (accept('+')) {
                lhs = make_op(Kind::add, {lhs, parse_term()});
            } else if (accept('-')) {
                lhs = make_op(Kind::subtract, {lhs, parse_term()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_power();
        for (;;) {
            if (accept('*')) {
                lhs = make_op(Kind::multiply, {lhs, parse_power()});
            } else if (accept('/')) {
                lhs = make_op(Kind::divide, {lhs, parse_power()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_power() {
        NodePtr base = parse_unary();
        if (accept('^')) return make_op(Kind::power, {base, parse_power()});
        return base;
    }

    NodePtr parse_unary() {
        if (accept('-')) {
            skip_space();
            if (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
                NodePtr number = parse_number();
                return make_literal(-number->value);
            }
            return make_op(Kind::negate, {parse_unary()});
        }
        return parse_primary();
    }

    NodePtr parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError(pos_, "expected expression, found end of input");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        if (accept('(')) {
            NodePtr inner = parse_expr();
            expect(')');
            return inner;
        }
        throw ParseError(pos_, "expected expression, found " + describe_here());
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                digits();
            } else {
                pos_ = save;
            }
        }
        double v = 0.0;
        const char* first = text_.data() + start;
        auto [ptr, ec] = std::from_chars(first, text_.data() + pos_, v);
        if (ec != std::errc() || ptr != text_.data() + pos_)
            throw ParseError(start, "malformed number '" + std::string(text_.substr(start, pos_ - start)) + "'");
        return make_literal(v);
    }

    NodePtr parse_name() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            auto it = std::find_if(kFunctions.begin(), kFunctions.end(),
                                   [&](const FunctionInfo& f) { return f.name == name; });
            if (it == kFunctions.end()) throw ParseError(start, "unknown function '" + name + "'");
            ++pos_;
            std::vector<NodePtr> args{parse_expr()};
            while (accept(',')) args.push_back(parse_expr());
            expect(')');
            if (args.size() != it->arity) {
                throw ParseError(start, "function '" + name + "' takes " + std::to_string(it->arity) +
                                            " argument(s), got " + std::to_string(args.size()));
            }
            if (name == "pow") return make_op(Kind::power, std::move(args));
            return make_op(Kind::call, std::move(args), it->function);
        }
        if (restrict_vars_ && std::find(allowed_.begin(), allowed_.end(), name) == allowed_.end())
            throw ParseError(start, "unknown variable '" + name + "'");
        return make_variable(std::move(name));
    }

    std::string_view text_;
    std::span<const std::string> allowed_;
    bool restrict_vars_;
    std::size_t pos_ = 0;
};

void collect_vars(const Expr::Node& n, std::set<std::string>& out) {
    if (n.kind == Kind::variable) out.insert(n.name);
    for (const auto& c : n.operands) collect_vars(*c, out);
}

[[noreturn]] void domain_error(const Expr::Node& n, const std::string& what, double arg) {
    std::string msg = "domain error: " + what + " in '" + render(n) + "' (argument ";
    format_number(arg, msg);
    msg += ')';
    throw EvalError(msg);
}

template <typename Lookup>
double evaluate(const Expr::Node& n, const Lookup& lookup) {
    switch (n.kind) {
        case Kind::literal: return n.value;
        case Kind::variable: return lookup(n.name);
        case Kind::negate: return -evaluate(*n.operands[0], lookup);
        case Kind::add: return evaluate(*n.operands[0], lookup) + evaluate(*n.operands[1], lookup);
        case Kind::subtract: return evaluate(*n.operands[0], lookup) - evaluate(*n.operands[1], lookup);
        case Kind::multiply: return evaluate(*n.operands[0], lookup) * evaluate(*n.operands[1], lookup);
        case Kind::divide: {
            const double num = evaluate(*n.operands[0], lookup);
            const double den = evaluate(*n.operands[1], lookup);
            if (den == 0.0) domain_error(n, "division by zero", den);
            return num / den;
        }
        case Kind::power: {
            const double base = evaluate(*n.operands[0], lookup);
            const double ex = evaluate(*n.operands[1], lookup);
            if (base == 0.0 && ex < 0.0) domain_error(n, "zero raised to a negative power", ex);
            const double r = std::pow(base, ex);
            if (std::isnan(r) && !std::isnan(base) && !std::isnan(ex))
                domain_error(n, "negative base with non-integer exponent", base);
            return r;
        }
        case Kind::call: {
            const double x = evaluate(*n.operands[0], lookup);
            switch (n.function) {
                case Function::sqrt:
                    if (x < 0.0) domain_error(n, "sqrt of negative value", x);
                    return std::sqrt(x);
                case Function::exp: return std::exp(x);
                case Function::log:
                    if (x <= 0.0) domain_error(n, "log of non-positive value", x);
                    return std::log(x);
                case Function::min: return std::min(x, evaluate(*n.operands[1], lookup));
                case Function::max: return std::max(x, evaluate(*n.operands[1], lookup));
            }
        }
    }
    throw EvalError("corrupt expression node");
}

bool same_tree(const Expr::Node& a, const Expr::Node& b) {
    if (a.kind != b.kind || a.operands.size() != b.operands.size()) return false;
    switch (a.kind) {
        case Kind::literal:
            if (std::bit_cast<std::uint64_t>(a.value) != std::bit_cast<std::uint64_t>(b.value)) return false;
            break;
        case Kind::variable:
            if (a.name != b.name) return false;
            break;
        case Kind::call:
            if (a.function != b.function) return false;
            break;
        default: break;
    }
    for (std::size_t i = 0; i < a.operands.size(); ++i)
        if (!same_tree(*a.operands[i], *b.operands[i])) return false;
    return true;
}

NodePtr rename_tree(const NodePtr& n, const std::string& name) {
    if (n->kind == Kind::variable) return make_variable(name);
    if (n->operands.empty()) return n;
    std::vector<NodePtr> ops;
    ops.reserve(n->operands.size());
    for (const auto& c : n->operands) ops.push_back(rename_tree(c, name));
    return make_op(n->kind, std::move(ops), n->function);
}

}  // namespace

std::string_view function_name(Expr::Function f) noexcept {
    switch (f) {
        case Function::sqrt: return "sqrt";
        case Function::exp: return "exp";
        case Function::log: return "log";
        case Function::min: return "min";
        case Function::max: return "max";
    }
    return "?";
}

Expr::Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {
    std::set<std::string> vars;
    collect_vars(*root_, vars);
    free_vars_.assign(vars.begin(), vars.end());
}

Expr Expr::parse(std::string_view text) {
    return Expr(Parser(text, {}, false).run());
}

Expr Expr::parse(std::string_view text, std::span<const std::string> allowed) {
    return Expr(Parser(text, allowed, true).run());
}

Expr Expr::literal(double value) { return Expr(make_literal(value)); }

Expr Expr::variable(std::string name) { return Expr(make_variable(std::move(name))); }

Expr Expr::negate(const Expr& operand) { return Expr(make_op(Kind::negate, {operand.root_})); }

Expr Expr::binary(Kind kind, const Expr& lhs, const Expr& rhs) {
    switch (kind) {
        case Kind::add:
        case Kind::subtract:
        case Kind::multiply:
        case Kind::divide:
        case Kind::power: return Expr(make_op(kind, {lhs.root_, rhs.root_}));
        default: throw Error("Expr::binary: not a binary operator");
    }
}

Expr Expr::call(Function function, std::vector<Expr> args) {
    const std::size_t want = (function == Function::min || function == Function::max) ? 2 : 1;
    if (args.size() != want) throw Error("Expr::call: wrong number of arguments");
    std::vector<NodePtr> ops;
    for (auto& a : args) ops.push_back(a.root_);
    return Expr(make_op(Kind::call, std::move(ops), function));
}

double Expr::eval(const Bindings& bindings) const {
    return evaluate(*root_, [&](const std::string& name) {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw EvalError("unbound variable '" + name + "'");
        return it->second;
    });
}

double Expr::eval1(double x) const {
    return evaluate(*root_, [x](const std::string&) { return x; });
}

std::string Expr::to_string() const { return render(*root_); }

Expr Expr::renamed(const std::string& name) const { return Expr(rename_tree(root_, name)); }

bool operator==(const Expr& a, const Expr& b) { return same_tree(*a.root_, *b.root_); }

}  // namespace sheetmax
