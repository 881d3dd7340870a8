#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "shellscale/linalg.hpp"
#include "shellscale/metric.hpp"
#include "shellscale/tensor_calc.hpp"

namespace shellscale {

using Mat32 = Eigen::Matrix<double, 3, 2>;

struct TransportOptions {
    int substeps = 4;           // RK4 steps per grid cell edge
    double frame_tol = 1e-8;    // holonomy tolerance relative to |B0|
    std::optional<std::size_t> basepoint;  // defaults to the node nearest the centroid
    // Frame at the basepoint; defaults to the symmetric root of G(basepoint, 0).
    std::optional<Mat3> base_frame;
};

struct FrameField {
    MidplateGrid grid{Rect{}, 5, 5};
    std::size_t basepoint = 0;
    Mat3 base_frame = Mat3::Identity();
    std::vector<Mat3> b0;
    double holonomy_defect = 0.0;  // worst cell loop mismatch relative to |B0|
    double metric_defect = 0.0;    // max |B0^T B0 - G(., 0)|
};

// Integrates d_i B0 = B0 Gamma_i(x', 0) from the basepoint along row j0 and
// then along every column. Throws IntegrabilityViolation when transport
// around a grid cell fails to close within frame_tol.
FrameField frame_transport(const MetricField& m, const MidplateGrid& grid, const TransportOptions& opts = {});

struct Immersion {
    std::vector<Vec3> y0;
    double curl_defect = 0.0;  // max |d1(B0 e2) - d2(B0 e1)| over interior nodes
};

// y0(basepoint) = 0 and d_i y0 = B0 e_i, integrated with fourth-order
// quadrature along the same axis paths as the frame.
Immersion midplate_immersion(const FrameField& frame, double disc_tol = 1e-6);

// Matched isometry expansion at level n on the frame's grid.
// b[0] holds y0; b[k] for k = 1..n+2 and B[k] for k = 0..n+1, one order
// beyond the level so residuals at order n+1 and the plate correctors can
// be formed. dG[m] = d3^m G(x', 0) for m = 0..n+1.
struct ExpansionFields {
    MidplateGrid grid{Rect{}, 5, 5};
    int order = 0;
    std::size_t basepoint = 0;
    Mat3 base_frame = Mat3::Identity();
    std::vector<std::vector<Vec3>> b;
    std::vector<std::vector<Mat3>> B;
    std::vector<std::vector<Mat3>> dG;
    double holonomy_defect = 0.0;
    double metric_defect = 0.0;
    double curl_defect = 0.0;
    // max |d_i b_{k+1} - B0 nabla_i nabla_3^{(k-1)} Gamma_3 e3| over interior nodes, k = 1..n
    double column_defect = 0.0;

    const std::vector<Vec3>& y0() const { return b[0]; }
};

ExpansionFields expansion_fields(const MetricField& m, const FrameField& frame, const Immersion& imm, int n);

// Convenience: transport, immersion and expansion in one call.
ExpansionFields build_expansion(const MetricField& m, const MidplateGrid& grid, int n, const TransportOptions& opts = {},
                                double disc_tol = 1e-6);

// Grid gradients [d1 b_k, d2 b_k] for k = 0..n+1 (k = 0 is y0).
std::vector<std::vector<Mat32>> expansion_gradients(const ExpansionFields& f);

// sum_k C(m,k) B~_k^T B~_{m-k} - d3^m G(x', 0), where B~_k carries grid
// gradients of b_k in its first two columns. Valid for m <= n+1.
std::vector<Mat3> expansion_residual(const ExpansionFields& f, int m);

// Right-hand side of the curvature identity at level n, as a 2x2 field:
// 2 ((grad y0)^T grad b_{n+1})_sym + sum_{k=1}^n C(n+1,k) (grad b_k)^T grad b_{n+1-k} - d3^{n+1} G_{2x2}.
std::vector<Mat2> riem_rhs(const ExpansionFields& f);

// Max over interior nodes of |2 d3^{n-1} R_{i3,j3} - riem_rhs|.
double riem_identity_check(const ExpansionFields& f, const CurvatureMidplateJets& jets);

// Max over interior nodes of the Frobenius norm of a matrix field.
template <class M>
double interior_max_norm(const MidplateGrid& grid, const std::vector<M>& field) {
    double worst = 0.0;
    for (std::size_t n = 0; n < field.size(); ++n)
        if (grid.is_interior(n)) worst = std::max(worst, static_cast<double>(field[n].norm()));
    return worst;
}

}  // namespace shellscale
