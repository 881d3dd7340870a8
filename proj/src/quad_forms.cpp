#include "shellscale/quad_forms.hpp"

#include <cmath>
#include <stdexcept>

#include "shellscale/errors.hpp"

namespace shellscale {

namespace {

Mat3 cofactor(const Mat3& f) {
    Mat3 c;
    c.col(0) = f.col(1).cross(f.col(2));
    c.col(1) = f.col(2).cross(f.col(0));
    c.col(2) = f.col(0).cross(f.col(1));
    return c;
}

// Eigen-decomposition of the Green strain F^T F - I; the stretches minus one
// are recovered as e / (1 + sqrt(1 + e)) without cancellation.
struct StretchData {
    Mat3 q;
    Vec3 e;
    Vec3 s_minus_1;
};

StretchData stretches(const Mat3& f) {
    const Mat3 strain = f.transpose() * f - Mat3::Identity();
    Eigen::SelfAdjointEigenSolver<Mat3> es(sym(strain));
    StretchData d;
    d.q = es.eigenvectors();
    d.e = es.eigenvalues();
    for (int i = 0; i < 3; ++i) d.s_minus_1[i] = d.e[i] / (1.0 + std::sqrt(1.0 + d.e[i]));
    return d;
}

}  // namespace

double dist2_so3(const Mat3& f) {
    const StretchData d = stretches(f);
    return d.s_minus_1.squaredNorm();
}

double EnergyDensity::eval(const Mat3& f) const {
    const double det = f.determinant();
    if (!(det > det_floor)) throw DegenerateDeformation("deformation gradient is degenerate", det);
    return mu * dist2_so3(f) + 0.5 * lambda * (det - 1.0) * (det - 1.0);
}

double EnergyDensity::eval_with_gradient(const Mat3& f, Mat3& grad) const {
    const double det = f.determinant();
    if (!(det > det_floor)) throw DegenerateDeformation("deformation gradient is degenerate", det);
    const StretchData d = stretches(f);
    // F - R = F Q diag((s - 1)/s) Q^T with the polar factor R.
    Vec3 w;
    for (int i = 0; i < 3; ++i) w[i] = d.s_minus_1[i] / (1.0 + d.s_minus_1[i]);
    grad = 2.0 * mu * (f * d.q * w.asDiagonal() * d.q.transpose());
    if (lambda != 0.0) grad += lambda * (det - 1.0) * cofactor(f);
    return mu * d.s_minus_1.squaredNorm() + 0.5 * lambda * (det - 1.0) * (det - 1.0);
}

Mat3 EnergyDensity::gradient(const Mat3& f) const {
    Mat3 g;
    eval_with_gradient(f, g);
    return g;
}

double EnergyDensity::q3(const Mat3& f) const { return q3_bilinear(f, f); }

double EnergyDensity::q3_bilinear(const Mat3& x, const Mat3& y) const {
    return 2.0 * mu * sym(x).cwiseProduct(sym(y)).sum() + lambda * x.trace() * y.trace();
}

ReducedForm::ReducedForm(const EnergyDensity& d, const Mat3& g0) {
    const Mat3 a = sym_inv_sqrt(g0);
    Mat3 h;
    std::array<Mat3, 3> y;
    for (int i = 0; i < 3; ++i) {
        Mat3 e = Mat3::Zero();
        e(i, 2) = 1.0;
        y[i] = a * e * a;
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) h(i, j) = d.q3_bilinear(y[i], y[j]);

    Eigen::SelfAdjointEigenSolver<Mat3> es(h, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues()(0) > 1e-12 * std::max(1.0, es.eigenvalues()(2))))
        throw SingularReduction("plane-stress system is singular; check mu and lambda");

    // Basis of symmetric in-plane matrices matching coords(): E11, E12 + E21, E22.
    std::array<Mat3, 3> x;
    for (auto& m : x) m = Mat3::Zero();
    x[0](0, 0) = 1.0;
    x[1](0, 1) = x[1](1, 0) = 1.0;
    x[2](1, 1) = 1.0;
    Mat3 g;  // g(i, a) = B(Y_i, A X_a A)
    Mat3 b;  // b(a, b) = B(A X_a A, A X_b A)
    for (auto& m : x) m = a * m * a;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) g(i, k) = d.q3_bilinear(y[i], x[k]);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) b(i, k) = d.q3_bilinear(x[i], x[k]);

    const Eigen::LDLT<Mat3> ldlt(h);
    c_ = -ldlt.solve(g);
    m_ = sym(Mat3(b + g.transpose() * c_));
}

PlaneStress ReducedForm::eval(const Mat2& f2) const {
    const Vec3 s = coords(f2);
    return {s.dot(m_ * s), c_ * s};
}

PlaneStress q2_and_c(const EnergyDensity& d, const MetricField& m, const Vec2& xp, const Mat2& f2) {
    return ReducedForm(d, m.evaluate(Vec3(xp[0], xp[1], 0.0))).eval(f2);
}

double thickness_moment(int p) {
    if (p % 2 == 1) return 0.0;
    return 1.0 / ((p + 1) * std::ldexp(1.0, p));
}

CoefficientSet coefficients(int n) {
    if (n < 1) throw std::invalid_argument("coefficients are defined for n >= 1");
    CoefficientSet c;
    c.n = n;
    const double f1 = factorial(n + 1);
    const double base = 1.0 / (std::ldexp(1.0, 2 * n + 3) * (2 * n + 3) * f1 * f1);
    const double nn = n;
    if (n % 2 == 0) {
        c.alpha = 3.0 / (std::ldexp(1.0, n) * (n + 3) * f1);
        c.beta = base * nn * nn / ((nn + 3) * (nn + 3));
        c.gamma = c.beta;
        c.delta = 0.0;
    } else {
        c.alpha = 0.0;
        c.beta = base;
        c.gamma = base * (nn + 1) * (nn + 1) / ((nn + 2) * (nn + 2));
        c.delta = 1.0 / (factorial(n + 2) * std::ldexp(1.0, n + 1));
    }
    return c;
}

CoefficientSet coefficients_via_moments(int n) {
    if (n < 1) throw std::invalid_argument("coefficients are defined for n >= 1");
    CoefficientSet c;
    c.n = n;
    const double f1 = factorial(n + 1);
    const double m1 = thickness_moment(n + 1);
    const double m2 = thickness_moment(n + 2);
    c.delta = m1 / f1;
    c.alpha = 12.0 * m2 / f1;
    c.gamma = (thickness_moment(2 * n + 2) - m1 * m1 - 12.0 * m2 * m2) / (2.0 * f1 * f1);
    c.beta = 0.5 * c.delta * c.delta + c.gamma;
    return c;
}

}  // namespace shellscale
