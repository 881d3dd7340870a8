#include "shellscale/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace shellscale {

Mat3 sym_sqrt(const Mat3& a) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(a);
    return sym(Mat3(es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose()));
}

Mat3 sym_inv_sqrt(const Mat3& a) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(a);
    return sym(Mat3(es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose()));
}

double min_eigenvalue(const Mat3& a) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
// Legendre recurrence, weights come from the first eigenvector components.
QuadratureRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("a Gauss rule needs at least one point");
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k, k - 1) = beta;
        jac(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    QuadratureRule rule;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int k = 0; k < n; ++k) {
        rule.nodes.push_back(mid + half * es.eigenvalues()(k));
        const double v = es.eigenvectors()(0, k);
        rule.weights.push_back(2.0 * v * v * half);
    }
    return rule;
}

}  // namespace shellscale
