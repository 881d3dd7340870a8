#pragma once

#include <array>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "shellscale/expr.hpp"
#include "shellscale/metric.hpp"

namespace testsupport {

using shellscale::Expression;

// Dense multivariate polynomial with exact small coefficients, used as an
// oracle for jet coefficients of polynomial expressions.
struct Poly {
    std::map<std::array<int, 3>, double> terms;

    static Poly constant(double c) {
        Poly p;
        if (c != 0.0) p.terms[{0, 0, 0}] = c;
        return p;
    }
    static Poly variable(int axis) {
        Poly p;
        std::array<int, 3> e{0, 0, 0};
        e[axis] = 1;
        p.terms[e] = 1.0;
        return p;
    }
    Poly operator+(const Poly& o) const {
        Poly r = *this;
        for (const auto& [k, v] : o.terms) r.terms[k] += v;
        return r;
    }
    Poly operator-() const {
        Poly r = *this;
        for (auto& [k, v] : r.terms) v = -v;
        return r;
    }
    Poly operator*(const Poly& o) const {
        Poly r;
        for (const auto& [a, va] : terms)
            for (const auto& [b, vb] : o.terms) r.terms[{a[0] + b[0], a[1] + b[1], a[2] + b[2]}] += va * vb;
        return r;
    }
    // Raw partial derivative d^alpha evaluated at x.
    double derivative(const std::array<int, 3>& alpha, const std::array<double, 3>& x) const {
        double s = 0.0;
        for (const auto& [b, c] : terms) {
            double t = c;
            for (int i = 0; i < 3; ++i) {
                if (b[i] < alpha[i]) {
                    t = 0.0;
                    break;
                }
                for (int f = 0; f < alpha[i]; ++f) t *= (b[i] - f);
                for (int f = 0; f < b[i] - alpha[i]; ++f) t *= x[i];
            }
            s += t;
        }
        return s;
    }
};

// Random polynomial expression of total degree at most `degree`, built with
// the DSL operators, together with its expanded form.
inline std::pair<Expression, Poly> random_polynomial(std::mt19937_64& rng, int degree) {
    std::uniform_int_distribution<int> pick(0, 9);
    std::uniform_int_distribution<int> small(-3, 3);
    std::uniform_int_distribution<int> axis(0, 2);
    const int choice = pick(rng);
    if (degree == 0 || choice < 2) {
        const double c = small(rng);
        return {Expression::constant(c), Poly::constant(c)};
    }
    if (choice < 4) {
        const int a = axis(rng);
        return {Expression::variable(a), Poly::variable(a)};
    }
    if (choice < 6) {
        auto [l, pl] = random_polynomial(rng, degree);
        auto [r, pr] = random_polynomial(rng, degree);
        if (choice == 4) return {l + r, pl + pr};
        return {l - r, pl + (-pr)};
    }
    if (choice < 8) {
        const int dl = std::uniform_int_distribution<int>(0, degree)(rng);
        auto [l, pl] = random_polynomial(rng, dl);
        auto [r, pr] = random_polynomial(rng, degree - dl);
        return {l * r, pl * pr};
    }
    if (choice == 8) {
        auto [a, pa] = random_polynomial(rng, degree);
        return {-a, -pa};
    }
    const int e = std::uniform_int_distribution<int>(0, std::min(degree, 3))(rng);
    const int db = e == 0 ? degree : degree / e;
    auto [b, pb] = random_polynomial(rng, db);
    Poly r = Poly::constant(1.0);
    for (int i = 0; i < e; ++i) r = r * pb;
    return {Expression::power(b, e), r};
}

// Random smooth expression that is defined everywhere near the origin.
inline Expression random_smooth(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, 11);
    std::uniform_real_distribution<double> coef(-1.5, 1.5);
    std::uniform_int_distribution<int> axis(0, 2);
    if (depth == 0) {
        if (pick(rng) < 4) return Expression::constant(std::round(coef(rng) * 8.0) / 8.0);
        return Expression::variable(axis(rng));
    }
    const int c = pick(rng);
    using shellscale::UnaryOp;
    switch (c) {
        case 0: return random_smooth(rng, depth - 1) + random_smooth(rng, depth - 1);
        case 1: return random_smooth(rng, depth - 1) - random_smooth(rng, depth - 1);
        case 2:
        case 3: return random_smooth(rng, depth - 1) * random_smooth(rng, depth - 1);
        case 4: return Expression::unary(UnaryOp::Sin, random_smooth(rng, depth - 1));
        case 5: return Expression::unary(UnaryOp::Cos, random_smooth(rng, depth - 1));
        case 6: return Expression::unary(UnaryOp::Exp, Expression::constant(0.5) * random_smooth(rng, depth - 1));
        case 7: {
            Expression a = random_smooth(rng, depth - 1);
            return Expression::unary(UnaryOp::Log, Expression::constant(2.0) + a * a);
        }
        case 8: {
            Expression a = random_smooth(rng, depth - 1);
            return Expression::unary(UnaryOp::Sqrt, Expression::constant(1.5) + a * a);
        }
        case 9: {
            Expression a = random_smooth(rng, depth - 1);
            return random_smooth(rng, depth - 1) / (Expression::constant(1.25) + a * a);
        }
        case 10: return Expression::power(random_smooth(rng, depth - 1), std::uniform_int_distribution<int>(2, 3)(rng));
        default: return -random_smooth(rng, depth - 1);
    }
}


inline Expression linear_form(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    auto r = [&] { return Expression::constant(std::round(u(rng) * 16.0) / 16.0); };
    return r() * Expression::variable(0) + r() * Expression::variable(1) + r() * Expression::variable(2) + r();
}

// Random analytic metric, positive definite by diagonal dominance.
inline shellscale::MetricField random_metric(std::mt19937_64& rng) {
    using shellscale::UnaryOp;
    auto s = [&] { return Expression::unary(UnaryOp::Sin, linear_form(rng)); };
    auto c = [&] { return Expression::unary(UnaryOp::Cos, linear_form(rng)); };
    auto k = [](double v) { return Expression::constant(v); };
    auto diag = [&] { return k(3.0) + k(0.6) * s() + k(0.3) * c() * s(); };
    auto off = [&] { return k(0.5) * s() * c(); };
    return shellscale::MetricField::general({diag(), off(), off(), diag(), off(), diag()}, shellscale::Rect{});
}

// Random smooth conformal factor phi(x3) = a sin(b x3 + c) + d x3^2 + e x3^3
// with its first three derivatives in closed form.
struct RandomPhi {
    double a, b, c, d, e;
    Expression expr() const {
        auto k = [](double v) { return Expression::constant(v); };
        const Expression x = Expression::variable(2);
        return k(a) * Expression::unary(shellscale::UnaryOp::Sin, k(b) * x + k(c)) + k(d) * Expression::power(x, 2) +
               k(e) * Expression::power(x, 3);
    }
    double f(double x) const { return a * std::sin(b * x + c) + d * x * x + e * x * x * x; }
    double d1(double x) const { return a * b * std::cos(b * x + c) + 2 * d * x + 3 * e * x * x; }
    double d2(double x) const { return -a * b * b * std::sin(b * x + c) + 2 * d + 6 * e * x; }
    double d3(double x) const { return -a * b * b * b * std::cos(b * x + c) + 6 * e; }
};

inline RandomPhi random_phi(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {u(rng), 2.0 * u(rng), u(rng), u(rng), u(rng)};
}

// Flat metric pulled back from Euclidean space by
// psi(x) = x + a (sin(x2 + x3), sin(x3 + x1), sin(x1 + x2)).
struct Pullback {
    double a = 0.2;
    shellscale::Mat3 jacobian(const shellscale::Vec3& x) const {
        const double c1 = a * std::cos(x[1] + x[2]);
        const double c2 = a * std::cos(x[2] + x[0]);
        const double c3 = a * std::cos(x[0] + x[1]);
        shellscale::Mat3 j;
        j << 1.0, c1, c1, c2, 1.0, c2, c3, c3, 1.0;
        return j;
    }
    shellscale::Vec3 map(const shellscale::Vec3& x) const {
        return x + a * shellscale::Vec3(std::sin(x[1] + x[2]), std::sin(x[2] + x[0]), std::sin(x[0] + x[1]));
    }
    shellscale::MetricField metric(shellscale::Rect domain = {}) const {
        using shellscale::UnaryOp;
        auto k = [](double v) { return Expression::constant(v); };
        auto x = [](int i) { return Expression::variable(i); };
        const Expression c1 = k(a) * Expression::unary(UnaryOp::Cos, x(1) + x(2));
        const Expression c2 = k(a) * Expression::unary(UnaryOp::Cos, x(2) + x(0));
        const Expression c3 = k(a) * Expression::unary(UnaryOp::Cos, x(0) + x(1));
        // Columns of the Jacobian, row-major by component.
        const std::array<std::array<Expression, 3>, 3> j = {{{k(1.0), c1, c1}, {c2, k(1.0), c2}, {c3, c3, k(1.0)}}};
        auto g = [&](int r, int c) { return j[0][r] * j[0][c] + j[1][r] * j[1][c] + j[2][r] * j[2][c]; };
        return shellscale::MetricField::general({g(0, 0), g(0, 1), g(0, 2), g(1, 1), g(1, 2), g(2, 2)}, domain);
    }
};

inline shellscale::MetricField pullback_metric() { return Pullback{}.metric(); }

// Pullback metric plus a cubic-in-x3 perturbation: flat on the midplate up to
// second normal derivatives, curved at the next order.
inline shellscale::MetricField bent_pullback_metric() {
    using shellscale::UnaryOp;
    const shellscale::MetricField base = pullback_metric();
    auto k = [](double v) { return Expression::constant(v); };
    auto x = [](int i) { return Expression::variable(i); };
    const Expression cube = Expression::power(x(2), 3);
    std::array<Expression, 6> u = base.upper();
    u[0] = u[0] + k(0.3) * cube * (k(1.0) + k(0.5) * Expression::unary(UnaryOp::Sin, x(0) + k(2.0) * x(1)));
    u[1] = u[1] + k(0.2) * cube * x(0) * x(1);
    u[3] = u[3] + k(0.25) * cube * Expression::unary(UnaryOp::Cos, x(0) - x(1));
    u[5] = u[5] + k(0.1) * cube;
    return shellscale::MetricField::general(u, base.domain());
}

}  // namespace testsupport
