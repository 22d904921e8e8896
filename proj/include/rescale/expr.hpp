#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "rescale/errors.hpp"
#include "rescale/field.hpp"

namespace rescale {

// Closed-form initializer grammar (config scenarios):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := ('+'|'-') unary | power
//   power  := atom ('^' unary)?            right-associative
//   atom   := NUMBER | COORD | 'exp' '(' expr ')' | '(' expr ')'
//   COORD  := 'x' | 'y' | 'z'  (axes 1..3; in 1D both 'x' and 'z' are axis 1)
class Expr {
  public:
    static Expr parse(const std::string& text, std::size_t dim) {
        Parser p{text, 0, dim};
        Expr e;
        e.root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size())
            throw config_error("expression: trailing input at '" + text.substr(p.pos) + "'");
        e.dim_ = dim;
        return e;
    }

    double eval(const Point& z) const { return root_->eval(z); }
    std::size_t dim() const { return dim_; }

  private:
    struct Node {
        virtual ~Node() = default;
        virtual double eval(const Point& z) const = 0;
    };
    using NodePtr = std::unique_ptr<Node>;

    struct Const : Node {
        double v;
        explicit Const(double x) : v(x) {}
        double eval(const Point&) const override { return v; }
    };
    struct Coord : Node {
        std::size_t axis;
        explicit Coord(std::size_t a) : axis(a) {}
        double eval(const Point& z) const override { return z[axis]; }
    };
    struct Unary : Node {
        char op;
        NodePtr a;
        double eval(const Point& z) const override {
            const double x = a->eval(z);
            return op == '-' ? -x : x;
        }
    };
    struct Binary : Node {
        char op;
        NodePtr a, b;
        double eval(const Point& z) const override {
            const double x = a->eval(z), y = b->eval(z);
            switch (op) {
                case '+': return x + y;
                case '-': return x - y;
                case '*': return x * y;
                case '/': return x / y;
                default: return std::pow(x, y);
            }
        }
    };
    struct ExpFn : Node {
        NodePtr a;
        double eval(const Point& z) const override { return std::exp(a->eval(z)); }
    };

    struct Parser {
        const std::string& s;
        std::size_t pos;
        std::size_t dim;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        char peek() {
            skip_ws();
            return pos < s.size() ? s[pos] : '\0';
        }

        NodePtr parse_expr() {
            NodePtr a = parse_term();
            for (;;) {
                const char c = peek();
                if (c != '+' && c != '-') return a;
                ++pos;
                auto b = std::make_unique<Binary>();
                b->op = c;
                b->a = std::move(a);
                b->b = parse_term();
                a = std::move(b);
            }
        }
        NodePtr parse_term() {
            NodePtr a = parse_unary();
            for (;;) {
                const char c = peek();
                if (c != '*' && c != '/') return a;
                ++pos;
                auto b = std::make_unique<Binary>();
                b->op = c;
                b->a = std::move(a);
                b->b = parse_unary();
                a = std::move(b);
            }
        }
        NodePtr parse_unary() {
            const char c = peek();
            if (c == '+' || c == '-') {
                ++pos;
                auto u = std::make_unique<Unary>();
                u->op = c;
                u->a = parse_unary();
                return u;
            }
            return parse_power();
        }
        NodePtr parse_power() {
            NodePtr a = parse_atom();
            if (peek() == '^') {
                ++pos;
                auto b = std::make_unique<Binary>();
                b->op = '^';
                b->a = std::move(a);
                b->b = parse_unary();
                return b;
            }
            return a;
        }
        NodePtr parse_atom() {
            skip_ws();
            if (pos >= s.size()) throw config_error("expression: unexpected end of input");
            const char c = s[pos];
            if (c == '(') {
                ++pos;
                NodePtr e = parse_expr();
                if (!eat(')')) throw config_error("expression: missing ')'");
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                char* end = nullptr;
                const double v = std::strtod(s.c_str() + pos, &end);
                if (end == s.c_str() + pos) throw config_error("expression: bad number");
                pos = static_cast<std::size_t>(end - s.c_str());
                return std::make_unique<Const>(v);
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t e = pos;
                while (e < s.size() && std::isalpha(static_cast<unsigned char>(s[e]))) ++e;
                const std::string name = s.substr(pos, e - pos);
                pos = e;
                if (name == "exp") {
                    if (!eat('(')) throw config_error("expression: exp needs '('");
                    auto f = std::make_unique<ExpFn>();
                    f->a = parse_expr();
                    if (!eat(')')) throw config_error("expression: missing ')'");
                    return f;
                }
                std::size_t axis;
                if (name == "x") axis = 0;
                else if (name == "y") axis = 1;
                else if (name == "z") axis = (dim == 1) ? 0 : 2;
                else throw config_error("expression: unknown identifier '" + name + "'");
                if (axis >= dim)
                    throw config_error("expression: coordinate '" + name +
                                       "' not available in dimension " + std::to_string(dim));
                return std::make_unique<Coord>(axis);
            }
            throw config_error(std::string("expression: unexpected character '") + c + "'");
        }
    };

    NodePtr root_;
    std::size_t dim_ = 1;
};

}  // namespace rescale
