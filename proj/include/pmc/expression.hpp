#pragma once

#include "pmc/fields.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmc {

class ExpressionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/**
 * Arithmetic over the coordinates x, y and r with + - * / ^, unary minus,
 * the constants pi and e, and the functions abs, sqrt, exp, log, min, max,
 * chi(t,a,b) (1 on a <= t <= b, else 0) and chi(a,b) (1 when every coordinate
 * lies in [a,b]; on radial grids the coordinate is r).
 */
class Expression {
public:
    static Expression parse(std::string const& text)
    {
        Parser p{text, 0};
        auto root = p.expression();
        p.skip();
        if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
        Expression e;
        e.root_ = std::move(root);
        e.text_ = text;
        return e;
    }

    std::string const& text() const { return text_; }

    /// Value at a grid point; `radial` makes x[0] the radius.
    double operator()(Point const& x, bool radial = false) const
    {
        Vars v{x[0], radial ? 0.0 : x[1], radial ? x[0] : std::hypot(x[0], x[1]), radial};
        return root_->eval(v);
    }

private:
    struct Vars {
        double x, y, r;
        bool radial;
    };

    struct Node {
        enum class Op { constant, var_x, var_y, var_r, neg, add, sub, mul, div, pow, call } op = Op::constant;
        double value = 0.0;
        std::string fn;
        std::vector<std::shared_ptr<Node const>> args;

        double eval(Vars const& v) const
        {
            auto a = [&](std::size_t i) { return args[i]->eval(v); };
            switch (op) {
            case Op::constant: return value;
            case Op::var_x: return v.x;
            case Op::var_y: return v.y;
            case Op::var_r: return v.r;
            case Op::neg: return -a(0);
            case Op::add: return a(0) + a(1);
            case Op::sub: return a(0) - a(1);
            case Op::mul: return a(0) * a(1);
            case Op::div: return a(0) / a(1);
            case Op::pow: return std::pow(a(0), a(1));
            case Op::call: return call(v);
            }
            return 0.0;
        }

        double call(Vars const& v) const
        {
            auto a = [&](std::size_t i) { return args[i]->eval(v); };
            if (fn == "abs") return std::abs(a(0));
            if (fn == "sqrt") return std::sqrt(a(0));
            if (fn == "exp") return std::exp(a(0));
            if (fn == "log") return std::log(a(0));
            if (fn == "min") return std::min(a(0), a(1));
            if (fn == "max") return std::max(a(0), a(1));
            if (args.size() == 3) {
                double const t = a(0);
                return (t >= a(1) && t <= a(2)) ? 1.0 : 0.0;
            }
            double const lo = a(0), hi = a(1);
            auto in = [&](double t) { return t >= lo && t <= hi; };
            if (v.radial) return in(v.x) ? 1.0 : 0.0;
            return (in(v.x) && in(v.y)) ? 1.0 : 0.0;
        }
    };
    using NodePtr = std::shared_ptr<Node const>;

    static NodePtr make(Node::Op op, std::vector<NodePtr> args = {}, double value = 0.0)
    {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->args = std::move(args);
        n->value = value;
        return n;
    }

    struct Parser {
        std::string const& s;
        std::size_t pos;

        [[noreturn]] void fail(std::string const& msg) const
        {
            throw ExpressionError("expression '" + s + "' at column " + std::to_string(pos + 1) + ": " + msg);
        }
        void skip()
        {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool accept(char c)
        {
            skip();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        void expect(char c)
        {
            if (!accept(c)) fail(std::string("expected '") + c + "'");
        }

        NodePtr expression()
        {
            auto lhs = term();
            while (true) {
                if (accept('+')) lhs = make(Node::Op::add, {lhs, term()});
                else if (accept('-')) lhs = make(Node::Op::sub, {lhs, term()});
                else return lhs;
            }
        }
        NodePtr term()
        {
            auto lhs = unary();
            while (true) {
                if (accept('*')) lhs = make(Node::Op::mul, {lhs, unary()});
                else if (accept('/')) lhs = make(Node::Op::div, {lhs, unary()});
                else return lhs;
            }
        }
        NodePtr unary()
        {
            if (accept('-')) return make(Node::Op::neg, {unary()});
            if (accept('+')) return unary();
            return power();
        }
        // Right associative; -2^2 parses as -(2^2).
        NodePtr power()
        {
            auto base = primary();
            if (accept('^')) return make(Node::Op::pow, {base, unary()});
            return base;
        }
        NodePtr primary()
        {
            skip();
            if (pos >= s.size()) fail("unexpected end of input");
            char const c = s[pos];
            if (accept('(')) {
                auto e = expression();
                expect(')');
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(s.substr(pos), &used);
                } catch (std::exception const&) {
                    fail("malformed number");
                }
                pos += used;
                return make(Node::Op::constant, {}, v);
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t const start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
                std::string const id = s.substr(start, pos - start);
                if (accept('(')) return call(id);
                if (id == "x") return make(Node::Op::var_x);
                if (id == "y") return make(Node::Op::var_y);
                if (id == "r") return make(Node::Op::var_r);
                if (id == "pi") return make(Node::Op::constant, {}, std::numbers::pi);
                if (id == "e") return make(Node::Op::constant, {}, std::numbers::e);
                pos = start;
                fail("unknown identifier '" + id + "'");
            }
            fail(std::string("unexpected '") + c + "'");
        }
        NodePtr call(std::string const& id)
        {
            std::vector<NodePtr> args;
            if (!accept(')')) {
                do {
                    args.push_back(expression());
                } while (accept(','));
                expect(')');
            }
            std::size_t lo = 0, hi = 0;
            if (id == "abs" || id == "sqrt" || id == "exp" || id == "log") lo = hi = 1;
            else if (id == "min" || id == "max") lo = hi = 2;
            else if (id == "chi") {
                lo = 2;
                hi = 3;
            } else fail("unknown function '" + id + "'");
            if (args.size() < lo || args.size() > hi) fail("wrong number of arguments to '" + id + "'");
            auto n = std::make_shared<Node>();
            n->op = Node::Op::call;
            n->fn = id;
            n->args = std::move(args);
            return n;
        }
    };

    NodePtr root_;
    std::string text_;
};

} // namespace pmc
