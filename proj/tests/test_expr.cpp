#include <doctest.h>

#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sheetmax/error.hpp"
#include "sheetmax/expr.hpp"

using sheetmax::Bindings;
using sheetmax::Expr;

namespace {

// Independent shunting-yard evaluator used as the reference. Returns false
// when the expression hits a domain error.
class Reference {
public:
    Reference(std::string text, double x, double y) : text_(std::move(text)), x_(x), y_(y) {}

    bool run(double& result) {
        tokenize();
        std::vector<Tok> output;
        std::vector<Tok> ops;
        std::vector<int> argc;
        bool expect_operand = true;
        for (std::size_t i = 0; i < toks_.size(); ++i) {
            Tok t = toks_[i];
            if (t.type == 'n' || t.type == 'v') {
                output.push_back(t);
                expect_operand = false;
            } else if (t.type == 'f') {
                ops.push_back(t);
                argc.push_back(1);
            } else if (t.type == '(') {
                ops.push_back(t);
                expect_operand = true;
            } else if (t.type == ',') {
                while (ops.back().type != '(') pop(ops, output);
                ++argc.back();
                expect_operand = true;
            } else if (t.type == ')') {
                while (ops.back().type != '(') pop(ops, output);
                ops.pop_back();
                if (!ops.empty() && ops.back().type == 'f') {
                    Tok f = ops.back();
                    ops.pop_back();
                    f.args = argc.back();
                    argc.pop_back();
                    output.push_back(f);
                }
                expect_operand = false;
            } else {
                if (expect_operand && t.type == '-') {
                    t.type = '~';
                    ops.push_back(t);
                    continue;
                }
                const int p = prec(t.type);
                while (!ops.empty() && is_op(ops.back().type)) {
                    const int q = prec(ops.back().type);
                    if (q > p || (q == p && t.type != '^')) pop(ops, output);
                    else break;
                }
                ops.push_back(t);
                expect_operand = true;
            }
        }
        while (!ops.empty()) pop(ops, output);
        std::vector<double> stack;
        for (const Tok& t : output) {
            if (t.type == 'n') stack.push_back(t.value);
            else if (t.type == 'v') stack.push_back(t.name == "x" ? x_ : y_);
            else if (t.type == '~') stack.back() = -stack.back();
            else if (t.type == 'f') {
                std::vector<double> a(stack.end() - t.args, stack.end());
                stack.resize(stack.size() - t.args);
                double r = 0;
                if (t.name == "sqrt") {
                    if (a[0] < 0) return false;
                    r = std::sqrt(a[0]);
                } else if (t.name == "exp") {
                    r = std::exp(a[0]);
                } else if (t.name == "log") {
                    if (a[0] <= 0) return false;
                    r = std::log(a[0]);
                } else if (t.name == "min") {
                    r = std::min(a[0], a[1]);
                } else if (t.name == "max") {
                    r = std::max(a[0], a[1]);
                } else if (t.name == "pow") {
                    if (!power(a[0], a[1], r)) return false;
                }
                stack.push_back(r);
            } else {
                const double b = stack.back();
                stack.pop_back();
                const double a = stack.back();
                double r = 0;
                switch (t.type) {
                    case '+': r = a + b; break;
                    case '-': r = a - b; break;
                    case '*': r = a * b; break;
                    case '/':
                        if (b == 0) return false;
                        r = a / b;
                        break;
                    case '^':
                        if (!power(a, b, r)) return false;
                        break;
                }
                stack.back() = r;
            }
        }
        result = stack.back();
        return true;
    }

private:
    struct Tok {
        char type;
        double value = 0;
        std::string name;
        int args = 0;
    };

    static bool power(double a, double b, double& r) {
        if (a == 0 && b < 0) return false;
        r = std::pow(a, b);
        return !std::isnan(r);
    }
    static bool is_op(char c) { return c == '+' || c == '-' || c == '*' || c == '/' || c == '^' || c == '~'; }
    static int prec(char c) {
        switch (c) {
            case '+':
            case '-': return 1;
            case '*':
            case '/': return 2;
            case '^': return 3;
            default: return 4;
        }
    }
    static void pop(std::vector<Tok>& ops, std::vector<Tok>& out) {
        out.push_back(ops.back());
        ops.pop_back();
    }
    void tokenize() {
        std::size_t i = 0;
        while (i < text_.size()) {
            const char c = text_[i];
            if (c == ' ') {
                ++i;
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t used = 0;
                const double v = std::stod(text_.substr(i), &used);
                toks_.push_back({'n', v, "", 0});
                i += used;
            } else if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t j = i;
                while (j < text_.size() && std::isalnum(static_cast<unsigned char>(text_[j]))) ++j;
                std::string name = text_.substr(i, j - i);
                toks_.push_back({j < text_.size() && text_[j] == '(' ? 'f' : 'v', 0, name, 0});
                i = j;
            } else {
                toks_.push_back({c, 0, "", 0});
                ++i;
            }
        }
    }

    std::string text_;
    double x_;
    double y_;
    std::vector<Tok> toks_;
};

std::string random_text(std::mt19937_64& gen, int depth) {
    std::uniform_int_distribution<int> pick(0, 9);
    const int k = depth <= 0 ? pick(gen) % 3 : pick(gen);
    static const char* numbers[] = {"0.5", "2", "3.25", "1e-1", "7", "0.125"};
    switch (k) {
        case 0: return numbers[pick(gen) % 6];
        case 1: return "x";
        case 2: return "y";
        case 3: return "-" + random_text(gen, depth - 1);
        case 4: {
            static const char* fn1[] = {"sqrt", "exp", "log"};
            return std::string(fn1[pick(gen) % 3]) + "(" + random_text(gen, depth - 1) + ")";
        }
        case 5: {
            static const char* fn2[] = {"min", "max", "pow"};
            return std::string(fn2[pick(gen) % 3]) + "(" + random_text(gen, depth - 1) + ", " +
                   random_text(gen, depth - 1) + ")";
        }
        case 6: return "(" + random_text(gen, depth - 1) + ")";
        default: {
            static const char ops[] = {'+', '-', '*', '/', '^'};
            const char op = ops[pick(gen) % 5];
            return random_text(gen, depth - 1) + " " + op + " " + random_text(gen, depth - 1);
        }
    }
}

}  // namespace

TEST_CASE("precedence and associativity") {
    const Bindings b{{"x", 3.0}};
    CHECK(Expr::parse("-x^2").eval(b) == 9.0);
    CHECK(Expr::parse("-(x^2)").eval(b) == -9.0);
    CHECK(Expr::parse("2^3^2").eval({}) == 512.0);
    CHECK(Expr::parse("10 - 4 - 3").eval({}) == 3.0);
    CHECK(Expr::parse("12 / 3 / 2").eval({}) == 2.0);
    CHECK(Expr::parse("1 + 2 * 3").eval({}) == 7.0);
    CHECK(Expr::parse("pow(2, 3)") == Expr::parse("2 ^ 3"));
    CHECK(Expr::parse("min(x, 1) + max(x, 1)").eval(b) == 4.0);
}

TEST_CASE("tree shapes") {
    const Expr sub = Expr::parse("1 - s1");
    CHECK(sub.kind() == Expr::Kind::subtract);
    CHECK(sub.operand(0).kind() == Expr::Kind::literal);
    CHECK(sub.operand(0).value() == 1.0);
    CHECK(sub.operand(1).kind() == Expr::Kind::variable);
    CHECK(sub.operand(1).name() == "s1");
    const Expr root = Expr::parse("sqrt(1 - s1)");
    CHECK(root.kind() == Expr::Kind::call);
    CHECK(root.function() == Expr::Function::sqrt);
    CHECK(root.arity() == 1);
    CHECK(root.operand(0) == sub);
}

TEST_CASE("restricted-domain expressions from scenario files") {
    const Expr f = Expr::parse("sqrt(1 - s1)");
    CHECK(f.free_vars() == std::vector<std::string>{"s1"});
    CHECK(f.eval({{"s1", 0.75}}) == doctest::Approx(0.5).epsilon(1e-15));
    const Expr g = Expr::parse("1.5*s3*s4/((s1+s3)*(s2+s4))");
    CHECK(g.free_vars() == std::vector<std::string>{"s1", "s2", "s3", "s4"});
    CHECK(g.eval({{"s1", 0.5}, {"s2", 0.5}, {"s3", 0.5}, {"s4", 0.5}}) == doctest::Approx(0.375));
    CHECK(Expr::parse("t/(1-t)").eval1(0.5) == 1.0);
}

TEST_CASE("parse errors carry the byte offset") {
    try {
        Expr::parse("1 + * s1");
        FAIL("expected a parse error");
    } catch (const sheetmax::ParseError& e) {
        CHECK(e.offset() == 4);
        CHECK(std::string(e.what()).find("expected expression") != std::string::npos);
    }
    CHECK_THROWS_AS(Expr::parse(""), sheetmax::ParseError);
    CHECK_THROWS_AS(Expr::parse("(1 + 2"), sheetmax::ParseError);
    CHECK_THROWS_AS(Expr::parse("1 2"), sheetmax::ParseError);
    CHECK_THROWS_AS(Expr::parse("foo(1)"), sheetmax::ParseError);
    CHECK_THROWS_AS(Expr::parse("sqrt(1, 2)"), sheetmax::ParseError);
    const std::vector<std::string> allowed{"s1", "s2"};
    CHECK_NOTHROW(Expr::parse("s1 + s2", allowed));
    CHECK_THROWS_AS(Expr::parse("s1 + s7", allowed), sheetmax::ParseError);
}

TEST_CASE("domain errors name the offending subexpression") {
    auto message = [](const char* text, double x) {
        try {
            Expr::parse(text).eval({{"x", x}});
        } catch (const sheetmax::EvalError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("1 + 1/x", 0.0).find("1 / x") != std::string::npos);
    CHECK(message("2 * sqrt(x)", -1.0).find("sqrt(x)") != std::string::npos);
    CHECK(message("log(x - 1)", 1.0).find("log(x - 1)") != std::string::npos);
    CHECK_FALSE(message("x ^ (-1)", 0.0).empty());
    CHECK_FALSE(message("x ^ 0.5", -2.0).empty());
    CHECK_THROWS_AS(Expr::parse("x + y").eval({{"x", 1.0}}), sheetmax::EvalError);
}

TEST_CASE("printing") {
    CHECK(Expr::parse("(a + b) * c").to_string() == "(a + b) * c");
    CHECK(Expr::parse("a + (b * c)").to_string() == "a + b * c");
    CHECK(Expr::parse("a - (b - c)").to_string() == "a - (b - c)");
    CHECK(Expr::parse("(a ^ b) ^ c").to_string() == "(a ^ b) ^ c");
    CHECK(Expr::parse("-x^2").to_string() == "-x ^ 2");
    CHECK(Expr::parse("-2").kind() == Expr::Kind::literal);
    CHECK(Expr::negate(Expr::literal(2.0)).to_string() == "-(2)");
    CHECK(Expr::parse("-(x^2)").to_string() == "-(x ^ 2)");
    const Expr neg = Expr::binary(Expr::Kind::subtract, Expr::variable("x"), Expr::literal(-2.0));
    CHECK(Expr::parse(neg.to_string()) == neg);
    CHECK(Expr::parse("0.1").to_string() == "0.1");
    CHECK(Expr::parse("1 - s1").renamed("t").to_string() == "1 - t");
}

TEST_CASE("property: print then parse reproduces the tree") {
    std::mt19937_64 gen(20240611);
    for (int i = 0; i < 2000; ++i) {
        const std::string text = random_text(gen, 5);
        const Expr e = Expr::parse(text);
        const std::string printed = e.to_string();
        const Expr back = Expr::parse(printed);
        INFO(text << "  =>  " << printed);
        CHECK(back == e);
        CHECK(back.to_string() == printed);
    }
}

TEST_CASE("property: evaluation agrees with a shunting-yard reference to 0 ulp") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> value(-3.0, 3.0);
    int compared = 0;
    for (int i = 0; i < 3000; ++i) {
        const std::string text = random_text(gen, 5);
        const double x = value(gen);
        const double y = value(gen);
        double expected = 0.0;
        const bool ok = Reference(text, x, y).run(expected);
        INFO(text << " at x=" << x << " y=" << y);
        if (!ok) {
            CHECK_THROWS_AS(Expr::parse(text).eval({{"x", x}, {"y", y}}), sheetmax::EvalError);
            continue;
        }
        const double got = Expr::parse(text).eval({{"x", x}, {"y", y}});
        if (std::isnan(expected)) {
            CHECK(std::isnan(got));
        } else {
            CHECK(got == expected);
            ++compared;
        }
    }
    CHECK(compared > 1000);
}

TEST_CASE("evaluation is pure") {
    const Expr e = Expr::parse("exp(-x) * sqrt(1 + x^2)");
    const std::string before = e.to_string();
    const double first = e.eval1(0.7);
    std::vector<double> results(8);
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < results.size(); ++k)
        pool.emplace_back([&, k] {
            double r = 0;
            for (int i = 0; i < 1000; ++i) r = e.eval1(0.7);
            results[k] = r;
        });
    for (auto& t : pool) t.join();
    for (double r : results) CHECK(r == first);
    CHECK(e.to_string() == before);
    CHECK(e.eval1(0.7) == first);
}
