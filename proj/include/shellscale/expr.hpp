#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include "shellscale/jet.hpp"

namespace shellscale {

enum class UnaryOp { Neg, Exp, Log, Sin, Cos, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div };

class Expression;

namespace detail {

struct ConstantNode {
    double value;
};
struct VariableNode {
    int axis;  // 0, 1, 2 for x1, x2, x3
};
struct UnaryNode {
    UnaryOp op;
    std::shared_ptr<const struct Node> arg;
};
struct BinaryNode {
    BinaryOp op;
    std::shared_ptr<const struct Node> lhs;
    std::shared_ptr<const struct Node> rhs;
};
struct PowerNode {
    std::shared_ptr<const struct Node> base;
    int exponent;
};

struct Node {
    std::variant<ConstantNode, VariableNode, UnaryNode, BinaryNode, PowerNode> v;
};

}  // namespace detail

// Immutable expression tree over x1, x2, x3. Copies share structure, and
// evaluation never mutates, so one Expression may be used from many threads.
class Expression {
public:
    Expression();  // the constant 0

    static Expression constant(double c);
    static Expression variable(int axis);
    static Expression unary(UnaryOp op, const Expression& arg);
    static Expression binary(BinaryOp op, const Expression& lhs, const Expression& rhs);
    static Expression power(const Expression& base, int exponent);

    const detail::Node& node() const { return *node_; }

    bool is_constant() const;
    // True when the expression mentions the variable x_{axis+1}.
    bool depends_on(int axis) const;

    friend bool operator==(const Expression& a, const Expression& b);

    friend Expression operator+(const Expression& a, const Expression& b) { return binary(BinaryOp::Add, a, b); }
    friend Expression operator-(const Expression& a, const Expression& b) { return binary(BinaryOp::Sub, a, b); }
    friend Expression operator*(const Expression& a, const Expression& b) { return binary(BinaryOp::Mul, a, b); }
    friend Expression operator/(const Expression& a, const Expression& b) { return binary(BinaryOp::Div, a, b); }
    Expression operator-() const { return unary(UnaryOp::Neg, *this); }

private:
    explicit Expression(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::Node> node_;
};

Expression parse_expression(std::string_view text);
std::string to_string(const Expression& e);

double evaluate(const Expression& e, const std::array<double, 3>& x);
// Taylor jet of `e` at x, total order `order`, in-plane order capped at
// `planar_order` (negative means no cap).
Jet eval_jet(const Expression& e, const std::array<double, 3>& x, int order, int planar_order = -1);

}  // namespace shellscale
