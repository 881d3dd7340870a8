#pragma once

#include <vector>

#include <Eigen/Dense>

namespace shellscale {

using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline Mat3 sym(const Mat3& a) { return 0.5 * (a + a.transpose()); }
inline Mat2 sym(const Mat2& a) { return 0.5 * (a + a.transpose()); }

// Principal square root and inverse square root of a symmetric positive
// definite matrix, both computed from one eigendecomposition.
Mat3 sym_sqrt(const Mat3& a);
Mat3 sym_inv_sqrt(const Mat3& a);
double min_eigenvalue(const Mat3& a);

double factorial(int n);
double binomial(int n, int k);

// Gauss-Legendre rule with n points on [a, b].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
QuadratureRule gauss_legendre(int n, double a, double b);

// Max-norm of a matrix (largest absolute entry).
template <class M>
double max_abs(const M& m) {
    return m.cwiseAbs().maxCoeff();
}

}  // namespace shellscale
