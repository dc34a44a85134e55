#pragma once

#include "chemofem/core.hpp"
#include "chemofem/fields.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>

namespace chemofem {

/// Arithmetic expression in x, y, t with symbolic differentiation.
///
/// Grammar: sums and products of numbers, the variables x, y, t, the
/// constants pi and e, unary minus, ^ (right associative) and the functions
/// sin cos tan exp log sqrt abs tanh.
class Expression {
public:
    enum class Op { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh };

    Expression() : Expression(num(0.0)) {}

    static Expression parse(std::string_view text) {
        Parser p{text, 0};
        Expression e{p.parse_sum()};
        p.skip_ws();
        if (p.pos != text.size()) {
            throw ConfigError("expression: unexpected '" + std::string(text.substr(p.pos, 1)) + "' at position " +
                              std::to_string(p.pos) + " in \"" + std::string(text) + "\"");
        }
        return e;
    }

    double eval(double x, double y, double t = 0.0) const { return eval_node(*root_, x, y, t); }

    /// d/dvar with var in {'x','y','t'}.
    Expression derivative(char var) const { return Expression{diff(root_, var)}; }

    std::string str() const {
        std::ostringstream os;
        print(os, *root_);
        return os.str();
    }

    /// Value, gradient and Hessian in (x, y) as a ScalarFunction.
    ScalarFunction to_function() const {
        auto f = std::make_shared<Expression>(*this);
        auto fx = std::make_shared<Expression>(derivative('x'));
        auto fy = std::make_shared<Expression>(derivative('y'));
        auto fxx = std::make_shared<Expression>(fx->derivative('x'));
        auto fxy = std::make_shared<Expression>(fx->derivative('y'));
        auto fyy = std::make_shared<Expression>(fy->derivative('y'));
        return {[f](Vec2 p, double t) { return f->eval(p.x, p.y, t); },
                [fx, fy](Vec2 p, double t) { return Vec2{fx->eval(p.x, p.y, t), fy->eval(p.x, p.y, t)}; },
                [fxx, fxy, fyy](Vec2 p, double t) {
                    const double xy = fxy->eval(p.x, p.y, t);
                    return Mat2{{{fxx->eval(p.x, p.y, t), xy}, {xy, fyy->eval(p.x, p.y, t)}}};
                }};
    }

private:
    struct Node {
        Op op = Op::Num;
        double value = 0.0;
        char var = 0;
        std::shared_ptr<const Node> a;
        std::shared_ptr<const Node> b;
    };
    using NodePtr = std::shared_ptr<const Node>;

    explicit Expression(NodePtr root) : root_(std::move(root)) {}

    static NodePtr num(double v) { return std::make_shared<Node>(Node{Op::Num, v, 0, nullptr, nullptr}); }
    static NodePtr var(char c) { return std::make_shared<Node>(Node{Op::Var, 0.0, c, nullptr, nullptr}); }
    static bool is_num(const NodePtr& n, double v) { return n->op == Op::Num && n->value == v; }

    static NodePtr make(Op op, NodePtr a, NodePtr b = nullptr) {
        // light constant folding keeps repeated derivatives small
        const bool ca = a && a->op == Op::Num;
        const bool cb = b && b->op == Op::Num;
        switch (op) {
        case Op::Add:
            if (is_num(a, 0.0)) return b;
            if (is_num(b, 0.0)) return a;
            if (ca && cb) return num(a->value + b->value);
            break;
        case Op::Sub:
            if (is_num(b, 0.0)) return a;
            if (is_num(a, 0.0)) return make(Op::Neg, b);
            if (ca && cb) return num(a->value - b->value);
            break;
        case Op::Mul:
            if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
            if (is_num(a, 1.0)) return b;
            if (is_num(b, 1.0)) return a;
            if (ca && cb) return num(a->value * b->value);
            break;
        case Op::Div:
            if (is_num(a, 0.0)) return num(0.0);
            if (is_num(b, 1.0)) return a;
            break;
        case Op::Pow:
            if (is_num(b, 0.0)) return num(1.0);
            if (is_num(b, 1.0)) return a;
            break;
        case Op::Neg:
            if (ca) return num(-a->value);
            if (a->op == Op::Neg) return a->a;
            break;
        default:
            if (ca && !b) {
                Node tmp{op, 0.0, 0, a, nullptr};
                return num(eval_node(tmp, 0.0, 0.0, 0.0));
            }
            break;
        }
        return std::make_shared<Node>(Node{op, 0.0, 0, std::move(a), std::move(b)});
    }

    static bool depends_on_any(const Node& n) {
        if (n.op == Op::Var) return true;
        if (n.op == Op::Num) return false;
        return (n.a && depends_on_any(*n.a)) || (n.b && depends_on_any(*n.b));
    }

    static double eval_node(const Node& n, double x, double y, double t) {
        auto A = [&] { return eval_node(*n.a, x, y, t); };
        auto B = [&] { return eval_node(*n.b, x, y, t); };
        switch (n.op) {
        case Op::Num: return n.value;
        case Op::Var: return n.var == 'x' ? x : (n.var == 'y' ? y : t);
        case Op::Add: return A() + B();
        case Op::Sub: return A() - B();
        case Op::Mul: return A() * B();
        case Op::Div: return A() / B();
        case Op::Pow: return std::pow(A(), B());
        case Op::Neg: return -A();
        case Op::Sin: return std::sin(A());
        case Op::Cos: return std::cos(A());
        case Op::Tan: return std::tan(A());
        case Op::Exp: return std::exp(A());
        case Op::Log: return std::log(A());
        case Op::Sqrt: return std::sqrt(A());
        case Op::Abs: return std::abs(A());
        case Op::Tanh: return std::tanh(A());
        }
        return 0.0;
    }

    static NodePtr diff(const NodePtr& n, char v) {
        const NodePtr& a = n->a;
        const NodePtr& b = n->b;
        switch (n->op) {
        case Op::Num: return num(0.0);
        case Op::Var: return num(n->var == v ? 1.0 : 0.0);
        case Op::Add: return make(Op::Add, diff(a, v), diff(b, v));
        case Op::Sub: return make(Op::Sub, diff(a, v), diff(b, v));
        case Op::Mul: return make(Op::Add, make(Op::Mul, diff(a, v), b), make(Op::Mul, a, diff(b, v)));
        case Op::Div:
            return make(Op::Div, make(Op::Sub, make(Op::Mul, diff(a, v), b), make(Op::Mul, a, diff(b, v))),
                        make(Op::Mul, b, b));
        case Op::Pow:
            if (!depends_on_any(*b)) {
                return make(Op::Mul, make(Op::Mul, b, make(Op::Pow, a, make(Op::Sub, b, num(1.0)))), diff(a, v));
            }
            return make(Op::Mul, n,
                        make(Op::Add, make(Op::Mul, diff(b, v), make(Op::Log, a)),
                             make(Op::Div, make(Op::Mul, b, diff(a, v)), a)));
        case Op::Neg: return make(Op::Neg, diff(a, v));
        case Op::Sin: return make(Op::Mul, make(Op::Cos, a), diff(a, v));
        case Op::Cos: return make(Op::Neg, make(Op::Mul, make(Op::Sin, a), diff(a, v)));
        case Op::Tan: return make(Op::Div, diff(a, v), make(Op::Pow, make(Op::Cos, a), num(2.0)));
        case Op::Exp: return make(Op::Mul, n, diff(a, v));
        case Op::Log: return make(Op::Div, diff(a, v), a);
        case Op::Sqrt: return make(Op::Div, diff(a, v), make(Op::Mul, num(2.0), n));
        case Op::Abs: return make(Op::Mul, make(Op::Div, a, n), diff(a, v));
        case Op::Tanh:
            return make(Op::Mul, make(Op::Sub, num(1.0), make(Op::Pow, n, num(2.0))), diff(a, v));
        }
        return num(0.0);
    }

    static void print(std::ostream& os, const Node& n) {
        auto bin = [&](const char* s) {
            os << '(';
            print(os, *n.a);
            os << s;
            print(os, *n.b);
            os << ')';
        };
        auto fn = [&](const char* s) {
            os << s << '(';
            print(os, *n.a);
            os << ')';
        };
        switch (n.op) {
        case Op::Num: os << n.value; break;
        case Op::Var: os << n.var; break;
        case Op::Add: bin(" + "); break;
        case Op::Sub: bin(" - "); break;
        case Op::Mul: bin("*"); break;
        case Op::Div: bin("/"); break;
        case Op::Pow: bin("^"); break;
        case Op::Neg: fn("-"); break;
        case Op::Sin: fn("sin"); break;
        case Op::Cos: fn("cos"); break;
        case Op::Tan: fn("tan"); break;
        case Op::Exp: fn("exp"); break;
        case Op::Log: fn("log"); break;
        case Op::Sqrt: fn("sqrt"); break;
        case Op::Abs: fn("abs"); break;
        case Op::Tanh: fn("tanh"); break;
        }
    }

    struct Parser {
        std::string_view s;
        std::size_t pos;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool accept(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        [[noreturn]] void fail(const std::string& what) {
            throw ConfigError("expression: " + what + " at position " + std::to_string(pos) + " in \"" +
                              std::string(s) + "\"");
        }

        NodePtr parse_sum() {
            NodePtr lhs = parse_product();
            while (true) {
                if (accept('+')) lhs = make(Op::Add, lhs, parse_product());
                else if (accept('-')) lhs = make(Op::Sub, lhs, parse_product());
                else return lhs;
            }
        }
        NodePtr parse_product() {
            NodePtr lhs = parse_unary();
            while (true) {
                if (accept('*')) lhs = make(Op::Mul, lhs, parse_unary());
                else if (accept('/')) lhs = make(Op::Div, lhs, parse_unary());
                else return lhs;
            }
        }
        NodePtr parse_unary() {
            if (accept('-')) return make(Op::Neg, parse_unary());
            if (accept('+')) return parse_unary();
            return parse_power();
        }
        NodePtr parse_power() {
            NodePtr base = parse_primary();
            if (accept('^')) return make(Op::Pow, base, parse_unary());
            return base;
        }
        NodePtr parse_primary() {
            skip_ws();
            if (pos >= s.size()) fail("unexpected end");
            if (accept('(')) {
                NodePtr inner = parse_sum();
                if (!accept(')')) fail("expected ')'");
                return inner;
            }
            const char ch = s[pos];
            if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
                const std::string rest(s.substr(pos));
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(rest, &used);
                } catch (const std::exception&) {
                    fail("malformed number");
                }
                pos += used;
                return num(v);
            }
            if (std::isalpha(static_cast<unsigned char>(ch))) {
                const std::size_t start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
                const std::string name(s.substr(start, pos - start));
                if (name == "x" || name == "y" || name == "t") return var(name[0]);
                if (name == "pi") return num(kPi);
                if (name == "e") return num(std::exp(1.0));
                static const std::pair<const char*, Op> funcs[] = {
                    {"sin", Op::Sin},   {"cos", Op::Cos}, {"tan", Op::Tan}, {"exp", Op::Exp},
                    {"log", Op::Log},   {"sqrt", Op::Sqrt}, {"abs", Op::Abs}, {"tanh", Op::Tanh}};
                for (const auto& [fname, op] : funcs) {
                    if (name == fname) {
                        if (!accept('(')) fail("expected '(' after " + name);
                        NodePtr arg = parse_sum();
                        if (!accept(')')) fail("expected ')'");
                        return make(op, arg);
                    }
                }
                pos = start;
                fail("unknown identifier '" + name + "'");
            }
            fail(std::string("unexpected '") + ch + "'");
        }
    };

    NodePtr root_;
};

} // namespace chemofem
