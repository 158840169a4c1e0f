#include "idsm/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace idsm {

struct Expression::Node {
    enum Kind { Const, VarX1, VarX2, Add, Sub, Mul, Div, Pow, Neg, Func } kind;
    double value = 0.0;
    double (*fn)(double) = nullptr;
    std::unique_ptr<Node> a, b;

    double eval(double x1, double x2) const {
        switch (kind) {
            case Const: return value;
            case VarX1: return x1;
            case VarX2: return x2;
            case Add: return a->eval(x1, x2) + b->eval(x1, x2);
            case Sub: return a->eval(x1, x2) - b->eval(x1, x2);
            case Mul: return a->eval(x1, x2) * b->eval(x1, x2);
            case Div: return a->eval(x1, x2) / b->eval(x1, x2);
            case Pow: return std::pow(a->eval(x1, x2), b->eval(x1, x2));
            case Neg: return -a->eval(x1, x2);
            case Func: return fn(a->eval(x1, x2));
        }
        return 0.0;
    }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::unique_ptr<Node>;

struct Parser {
    const std::string& s;
    std::size_t pos = 0;

    explicit Parser(const std::string& text) : s(text) {}

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool eat(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) {
        throw std::invalid_argument("expression '" + s + "': " + what + " at position " +
                                    std::to_string(pos));
    }

    NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
        auto n = std::make_unique<Node>();
        n->kind = k;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    NodePtr parse_expr() {
        NodePtr left = parse_term();
        for (;;) {
            if (eat('+')) left = make(Node::Add, std::move(left), parse_term());
            else if (eat('-')) left = make(Node::Sub, std::move(left), parse_term());
            else return left;
        }
    }

    NodePtr parse_term() {
        NodePtr left = parse_unary();
        for (;;) {
            if (eat('*')) left = make(Node::Mul, std::move(left), parse_unary());
            else if (eat('/')) left = make(Node::Div, std::move(left), parse_unary());
            else return left;
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) return make(Node::Neg, parse_unary());
        if (eat('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (eat('^')) return make(Node::Pow, std::move(base), parse_unary());
        return base;
    }

    NodePtr parse_atom() {
        skip();
        if (pos >= s.size()) fail("unexpected end");
        const char c = s[pos];
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_expr();
            if (!eat(')')) fail("missing ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t end = 0;
            const double v = std::stod(s.substr(pos), &end);
            pos += end;
            auto n = make(Node::Const);
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            const std::string word = s.substr(start, pos - start);
            if (word == "x1") return make(Node::VarX1);
            if (word == "x2") return make(Node::VarX2);
            if (word == "pi") {
                auto n = make(Node::Const);
                n->value = std::numbers::pi;
                return n;
            }
            if (word == "e") {
                auto n = make(Node::Const);
                n->value = std::numbers::e;
                return n;
            }
            static const std::pair<const char*, double (*)(double)> funcs[] = {
                {"sin", std::sin}, {"cos", std::cos},   {"tan", std::tan},
                {"exp", std::exp}, {"log", std::log},   {"sqrt", std::sqrt},
                {"abs", std::fabs}};
            for (const auto& [name, fn] : funcs) {
                if (word == name) {
                    if (!eat('(')) fail("expected '(' after " + word);
                    NodePtr arg = parse_expr();
                    if (!eat(')')) fail("missing ')' after " + word);
                    auto n = make(Node::Func, std::move(arg));
                    n->fn = fn;
                    return n;
                }
            }
            fail("unknown identifier '" + word + "'");
        }
        fail("unexpected character");
    }
};

}  // namespace

Expression::Expression(const std::string& text) : text_(text) {
    Parser p(text_);
    root_ = p.parse_expr();
    p.skip();
    if (p.pos != text_.size()) p.fail("trailing input");
}

Expression::~Expression() = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;

double Expression::eval(double x1, double x2) const { return root_->eval(x1, x2); }

}  // namespace idsm
