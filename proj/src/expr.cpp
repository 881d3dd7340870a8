#include "shellscale/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "shellscale/errors.hpp"

namespace shellscale {

using detail::BinaryNode;
using detail::ConstantNode;
using detail::Node;
using detail::PowerNode;
using detail::UnaryNode;
using detail::VariableNode;

Expression::Expression() : Expression(constant(0.0)) {}

Expression Expression::constant(double c) { return Expression(std::make_shared<const Node>(Node{ConstantNode{c}})); }

Expression Expression::variable(int axis) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("variable axis must be 0, 1 or 2");
    return Expression(std::make_shared<const Node>(Node{VariableNode{axis}}));
}

Expression Expression::unary(UnaryOp op, const Expression& arg) {
    return Expression(std::make_shared<const Node>(Node{UnaryNode{op, arg.node_}}));
}

Expression Expression::binary(BinaryOp op, const Expression& lhs, const Expression& rhs) {
    return Expression(std::make_shared<const Node>(Node{BinaryNode{op, lhs.node_, rhs.node_}}));
}

Expression Expression::power(const Expression& base, int exponent) {
    return Expression(std::make_shared<const Node>(Node{PowerNode{base.node_, exponent}}));
}

namespace {

bool nodes_equal(const Node& a, const Node& b) {
    if (a.v.index() != b.v.index()) return false;
    if (auto* c = std::get_if<ConstantNode>(&a.v)) return c->value == std::get<ConstantNode>(b.v).value;
    if (auto* v = std::get_if<VariableNode>(&a.v)) return v->axis == std::get<VariableNode>(b.v).axis;
    if (auto* u = std::get_if<UnaryNode>(&a.v)) {
        const auto& w = std::get<UnaryNode>(b.v);
        return u->op == w.op && nodes_equal(*u->arg, *w.arg);
    }
    if (auto* p = std::get_if<PowerNode>(&a.v)) {
        const auto& q = std::get<PowerNode>(b.v);
        return p->exponent == q.exponent && nodes_equal(*p->base, *q.base);
    }
    const auto& x = std::get<BinaryNode>(a.v);
    const auto& y = std::get<BinaryNode>(b.v);
    return x.op == y.op && nodes_equal(*x.lhs, *y.lhs) && nodes_equal(*x.rhs, *y.rhs);
}

bool node_depends_on(const Node& n, int axis) {
    if (std::holds_alternative<ConstantNode>(n.v)) return false;
    if (auto* v = std::get_if<VariableNode>(&n.v)) return v->axis == axis;
    if (auto* u = std::get_if<UnaryNode>(&n.v)) return node_depends_on(*u->arg, axis);
    if (auto* p = std::get_if<PowerNode>(&n.v)) return node_depends_on(*p->base, axis);
    const auto& b = std::get<BinaryNode>(n.v);
    return node_depends_on(*b.lhs, axis) || node_depends_on(*b.rhs, axis);
}

}  // namespace

bool operator==(const Expression& a, const Expression& b) { return nodes_equal(*a.node_, *b.node_); }

bool Expression::is_constant() const { return std::holds_alternative<ConstantNode>(node_->v); }

bool Expression::depends_on(int axis) const { return node_depends_on(*node_, axis); }

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    Tok kind;
    std::size_t offset;
    std::string_view text;
    double number = 0.0;
    bool integral = false;
};

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) { advance(); }

    Expression parse() {
        Expression e = expr();
        if (tok_.kind != Tok::End) fail({"operator", "end of input"});
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    Token tok_{Tok::End, 0, {}};

    [[noreturn]] void fail(std::vector<std::string> expected) const {
        const std::string found = tok_.kind == Tok::End ? "end of input" : "'" + std::string(tok_.text) + "'";
        throw SyntaxError(tok_.offset, std::move(expected), found);
    }

    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        const std::size_t start = pos_;
        if (pos_ >= text_.size()) {
            tok_ = {Tok::End, start, {}};
            return;
        }
        const char c = text_[pos_];
        auto single = [&](Tok k) {
            ++pos_;
            tok_ = {k, start, text_.substr(start, 1)};
        };
        switch (c) {
            case '+': return single(Tok::Plus);
            case '-': return single(Tok::Minus);
            case '*': return single(Tok::Star);
            case '/': return single(Tok::Slash);
            case '^': return single(Tok::Caret);
            case '(': return single(Tok::LParen);
            case ')': return single(Tok::RParen);
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            bool integral = true;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ < text_.size() && text_[pos_] == '.') {
                integral = false;
                ++pos_;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
            if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                std::size_t q = pos_ + 1;
                if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
                if (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
                    integral = false;
                    pos_ = q;
                    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
                }
            }
            tok_ = {Tok::Number, start, text_.substr(start, pos_ - start)};
            const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, tok_.number);
            if (res.ec != std::errc() || res.ptr != text_.data() + pos_ || !std::isfinite(tok_.number))
                throw SyntaxError(start, {"finite number"}, "'" + std::string(tok_.text) + "'");
            tok_.integral = integral;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            tok_ = {Tok::Ident, start, text_.substr(start, pos_ - start)};
            return;
        }
        ++pos_;
        tok_ = {Tok::End, start, text_.substr(start, 1)};
        throw SyntaxError(start, {"number", "identifier", "operator", "'('", "')'"},
                          "'" + std::string(1, c) + "'");
    }

    Expression expr() {
        Expression lhs = term();
        while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
            const BinaryOp op = tok_.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
            advance();
            lhs = Expression::binary(op, lhs, term());
        }
        return lhs;
    }

    Expression term() {
        Expression lhs = unary();
        while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
            const BinaryOp op = tok_.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
            advance();
            lhs = Expression::binary(op, lhs, unary());
        }
        return lhs;
    }

    Expression unary() {
        if (tok_.kind == Tok::Minus) {
            advance();
            const bool literal_next = tok_.kind == Tok::Number;
            Expression arg = unary();
            // A literal directly after the minus folds into one negative
            // constant, so "(-c)" reparses to the constant it was printed from.
            if (literal_next && arg.is_constant()) return Expression::constant(-std::get<ConstantNode>(arg.node().v).value);
            return -arg;
        }
        if (tok_.kind == Tok::Plus) {
            advance();
            return unary();
        }
        return power();
    }

    Expression power() {
        Expression base = primary();
        if (tok_.kind != Tok::Caret) return base;
        advance();
        const long long p = exponent();
        return Expression::power(base, static_cast<int>(p));
    }

    long long exponent() {
        bool negative = false;
        if (tok_.kind == Tok::Minus) {
            negative = true;
            advance();
        }
        long long value = 0;
        const std::size_t start = tok_.offset;
        if (tok_.kind == Tok::Number) {
            if (!tok_.integral) fail({"integer exponent"});
            value = std::llround(tok_.number);
            advance();
        } else if (tok_.kind == Tok::LParen) {
            advance();
            value = exponent();
            if (tok_.kind != Tok::RParen) fail({"')'"});
            advance();
        } else {
            fail({"integer exponent"});
        }
        if (negative) value = -value;
        if (tok_.kind == Tok::Caret) {
            advance();
            const std::size_t inner_offset = tok_.offset;
            const long long inner = exponent();
            if (inner < 0) {
                if (value != 1 && value != -1)
                    throw SyntaxError(inner_offset, {"integer exponent"}, "a fractional power");
                value = (inner % 2 == 0) ? 1 : value;
            } else {
                long long acc = 1;
                for (long long i = 0; i < inner; ++i) {
                    acc *= value;
                    if (std::llabs(acc) > 1000000) throw SyntaxError(start, {"exponent of moderate size"}, "an overflow");
                }
                value = acc;
            }
        }
        if (std::llabs(value) > 1000000) throw SyntaxError(start, {"exponent of moderate size"}, "an overflow");
        return value;
    }

    Expression primary() {
        if (tok_.kind == Tok::Number) {
            const double v = tok_.number;
            advance();
            return Expression::constant(v);
        }
        if (tok_.kind == Tok::LParen) {
            advance();
            Expression e = expr();
            if (tok_.kind != Tok::RParen) fail({"')'"});
            advance();
            return e;
        }
        if (tok_.kind == Tok::Ident) {
            const std::string name(tok_.text);
            const std::size_t offset = tok_.offset;
            if (name == "x1" || name == "x2" || name == "x3") {
                advance();
                return Expression::variable(name[1] - '1');
            }
            UnaryOp op;
            if (name == "exp") op = UnaryOp::Exp;
            else if (name == "log") op = UnaryOp::Log;
            else if (name == "sin") op = UnaryOp::Sin;
            else if (name == "cos") op = UnaryOp::Cos;
            else if (name == "sqrt") op = UnaryOp::Sqrt;
            else throw UnknownIdentifier(name, offset);
            advance();
            if (tok_.kind != Tok::LParen) fail({"'('"});
            advance();
            Expression arg = expr();
            if (tok_.kind != Tok::RParen) fail({"')'"});
            advance();
            return Expression::unary(op, arg);
        }
        fail({"number", "variable", "function", "'('", "'-'"});
    }
};

}  // namespace

Expression parse_expression(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Printer

namespace {

constexpr int kPrecAdd = 1;
constexpr int kPrecMul = 2;
constexpr int kPrecNeg = 3;
constexpr int kPrecPow = 4;
constexpr int kPrecAtom = 5;

int precedence(const Node& n) {
    if (auto* b = std::get_if<BinaryNode>(&n.v))
        return (b->op == BinaryOp::Add || b->op == BinaryOp::Sub) ? kPrecAdd : kPrecMul;
    if (auto* u = std::get_if<UnaryNode>(&n.v)) return u->op == UnaryOp::Neg ? kPrecNeg : kPrecAtom;
    if (std::holds_alternative<PowerNode>(n.v)) return kPrecPow;
    return kPrecAtom;
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

const char* function_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Log: return "log";
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Sqrt: return "sqrt";
        case UnaryOp::Neg: break;
    }
    return "-";
}

void print(const Node& n, std::string& out);

void print_child(const Node& n, bool parens, std::string& out) {
    if (parens) out += '(';
    print(n, out);
    if (parens) out += ')';
}

void print(const Node& n, std::string& out) {
    if (auto* c = std::get_if<ConstantNode>(&n.v)) {
        if (std::signbit(c->value)) out += "(" + format_number(c->value) + ")";
        else out += format_number(c->value);
    } else if (auto* v = std::get_if<VariableNode>(&n.v)) {
        out += "x";
        out += static_cast<char>('1' + v->axis);
    } else if (auto* u = std::get_if<UnaryNode>(&n.v)) {
        if (u->op == UnaryOp::Neg) {
            out += '-';
            const bool literal = std::holds_alternative<ConstantNode>(u->arg->v) && !std::signbit(std::get<ConstantNode>(u->arg->v).value);
            print_child(*u->arg, literal || precedence(*u->arg) < kPrecNeg, out);
        } else {
            out += function_name(u->op);
            print_child(*u->arg, true, out);
        }
    } else if (auto* p = std::get_if<PowerNode>(&n.v)) {
        print_child(*p->base, precedence(*p->base) < kPrecAtom, out);
        out += '^';
        out += std::to_string(p->exponent);
    } else {
        const auto& b = std::get<BinaryNode>(n.v);
        const int prec = precedence(n);
        print_child(*b.lhs, precedence(*b.lhs) < prec, out);
        switch (b.op) {
            case BinaryOp::Add: out += " + "; break;
            case BinaryOp::Sub: out += " - "; break;
            case BinaryOp::Mul: out += "*"; break;
            case BinaryOp::Div: out += "/"; break;
        }
        print_child(*b.rhs, precedence(*b.rhs) <= prec, out);
    }
}

}  // namespace

std::string to_string(const Expression& e) {
    std::string out;
    print(e.node(), out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::string node_text(const Node& n) {
    std::string out;
    print(n, out);
    return out;
}

double eval_node(const Node& n, const std::array<double, 3>& x) {
    if (auto* c = std::get_if<ConstantNode>(&n.v)) return c->value;
    if (auto* v = std::get_if<VariableNode>(&n.v)) return x[v->axis];
    if (auto* u = std::get_if<UnaryNode>(&n.v)) {
        const double a = eval_node(*u->arg, x);
        switch (u->op) {
            case UnaryOp::Neg: return -a;
            case UnaryOp::Exp: return std::exp(a);
            case UnaryOp::Log:
                if (!(a > 0.0)) throw DomainError("log of a non-positive value", node_text(n));
                return std::log(a);
            case UnaryOp::Sin: return std::sin(a);
            case UnaryOp::Cos: return std::cos(a);
            case UnaryOp::Sqrt:
                if (a < 0.0) throw DomainError("sqrt of a negative value", node_text(n));
                return std::sqrt(a);
        }
    }
    if (auto* p = std::get_if<PowerNode>(&n.v)) {
        const double b = eval_node(*p->base, x);
        if (b == 0.0 && p->exponent < 0) throw DomainError("negative power of zero", node_text(n));
        return std::pow(b, p->exponent);
    }
    const auto& b = std::get<BinaryNode>(n.v);
    const double l = eval_node(*b.lhs, x);
    const double r = eval_node(*b.rhs, x);
    switch (b.op) {
        case BinaryOp::Add: return l + r;
        case BinaryOp::Sub: return l - r;
        case BinaryOp::Mul: return l * r;
        case BinaryOp::Div:
            if (r == 0.0) throw DomainError("division by zero", node_text(n));
            return l / r;
    }
    return 0.0;
}

struct JetContext {
    std::array<double, 3> x;
    int order;
    int planar;
};

Jet jet_node(const Node& n, const JetContext& ctx) {
    if (auto* c = std::get_if<ConstantNode>(&n.v)) return Jet::constant(c->value, ctx.order, ctx.planar);
    if (auto* v = std::get_if<VariableNode>(&n.v)) return Jet::variable(v->axis, ctx.x[v->axis], ctx.order, ctx.planar);
    if (auto* u = std::get_if<UnaryNode>(&n.v)) {
        Jet a = jet_node(*u->arg, ctx);
        switch (u->op) {
            case UnaryOp::Neg: return -a;
            case UnaryOp::Exp: return exp(a);
            case UnaryOp::Log:
                if (!(a.value() > 0.0)) throw DomainError("log of a non-positive value", node_text(n));
                return log(a);
            case UnaryOp::Sin: return sin(a);
            case UnaryOp::Cos: return cos(a);
            case UnaryOp::Sqrt:
                if (a.value() < 0.0 || (a.value() == 0.0 && ctx.order > 0))
                    throw DomainError("sqrt is not differentiable at a non-positive value", node_text(n));
                return sqrt(a);
        }
    }
    if (auto* p = std::get_if<PowerNode>(&n.v)) {
        Jet b = jet_node(*p->base, ctx);
        if (b.value() == 0.0 && p->exponent < 0) throw DomainError("negative power of zero", node_text(n));
        return pow(b, p->exponent);
    }
    const auto& b = std::get<BinaryNode>(n.v);
    Jet l = jet_node(*b.lhs, ctx);
    Jet r = jet_node(*b.rhs, ctx);
    switch (b.op) {
        case BinaryOp::Add: return l + r;
        case BinaryOp::Sub: return l - r;
        case BinaryOp::Mul: return l * r;
        case BinaryOp::Div:
            if (r.value() == 0.0) throw DomainError("division by zero", node_text(n));
            return l / r;
    }
    return l;
}

}  // namespace

double evaluate(const Expression& e, const std::array<double, 3>& x) { return eval_node(e.node(), x); }

Jet eval_jet(const Expression& e, const std::array<double, 3>& x, int order, int planar_order) {
    if (order < 0) throw std::invalid_argument("jet order must be non-negative");
    return jet_node(e.node(), JetContext{x, order, planar_order < 0 ? order : planar_order});
}

}  // namespace shellscale
