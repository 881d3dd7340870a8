#pragma once

#include "shellscale/linalg.hpp"
#include "shellscale/metric.hpp"

namespace shellscale {

// W(F) = mu*dist^2(F, SO(3)) + (lambda/2)*(det F - 1)^2.
struct EnergyDensity {
    double mu = 1.0;
    double lambda = 0.0;
    double det_floor = 1e-8;

    double eval(const Mat3& f) const;
    Mat3 gradient(const Mat3& f) const;
    // Value and gradient from one eigendecomposition.
    double eval_with_gradient(const Mat3& f, Mat3& grad) const;

    // Q3(F) = 2 mu |F_sym|^2 + lambda (tr F)^2 and its polarization.
    double q3(const Mat3& f) const;
    double q3_bilinear(const Mat3& x, const Mat3& y) const;

    friend bool operator==(const EnergyDensity&, const EnergyDensity&) = default;
};

// Squared distance to SO(3) for det F > 0, stable for F close to a rotation.
double dist2_so3(const Mat3& f);

struct PlaneStress {
    double q2 = 0.0;
    Vec3 c = Vec3::Zero();
};

// Plane-stress reduction at one midplate point with metric value g0 =
// G(x', 0). Symmetric 2x2 arguments are coordinatized as s = (F11, F12, F22);
// the reduced form is Q2(F) = s^T M s and the minimizing vector c = C s.
class ReducedForm {
public:
    ReducedForm() = default;
    ReducedForm(const EnergyDensity& d, const Mat3& g0);

    PlaneStress eval(const Mat2& f2) const;
    double q2(const Mat2& f2) const { return eval(f2).q2; }
    Vec3 c(const Mat2& f2) const { return eval(f2).c; }

    const Mat3& matrix() const { return m_; }
    const Mat3& c_map() const { return c_; }

    static Vec3 coords(const Mat2& f) { return {f(0, 0), 0.5 * (f(0, 1) + f(1, 0)), f(1, 1)}; }

private:
    Mat3 m_ = Mat3::Zero();
    Mat3 c_ = Mat3::Zero();
};

PlaneStress q2_and_c(const EnergyDensity& d, const MetricField& m, const Vec2& xp, const Mat2& f2);

struct CoefficientSet {
    int n = 0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;  // delta_{n+1}
};

CoefficientSet coefficients(int n);
// Same coefficients rebuilt from the thickness moments m_p of [-1/2, 1/2].
CoefficientSet coefficients_via_moments(int n);
// m_p = integral of t^p over [-1/2, 1/2].
double thickness_moment(int p);

}  // namespace shellscale
