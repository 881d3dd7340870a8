#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "shellscale/immersion.hpp"
#include "shellscale/quad_forms.hpp"
#include "shellscale/tensor_calc.hpp"

namespace shellscale {

// Symmetric 2x2 matrices are handled in the coordinates (F11, F12, F22)
// used by ReducedForm.
inline Vec3 sym_coords(const Mat2& f) { return ReducedForm::coords(f); }
inline Mat2 from_sym_coords(const Vec3& s) {
    Mat2 m;
    m << s[0], s[1], s[1], s[2];
    return m;
}

// Per-node geometric data derived from the expansion fields by grid
// differences. The frame used here is [grad y0, b1] so that rigid
// displacements lie exactly in the kernel of the discrete operators.
struct PlateGeometry {
    MidplateGrid grid{Rect{}, 5, 5};
    std::vector<Mat32> grad_y0;
    std::vector<Vec3> b1;
    std::vector<Vec3> b2;
    std::vector<Mat32> grad_b1;
    std::vector<Mat3> frame_inv_t;  // [grad y0, b1]^{-T}
    std::vector<double> weights;    // nodal trapezoid weights
    std::vector<ReducedForm> forms; // Q2 at each node

    PlateGeometry(const ExpansionFields& f, const EnergyDensity& d);
};

struct LimitDisplacement {
    std::vector<Vec3> v;
    std::vector<Vec3> p;
    double constraint_defect = 0.0;  // max |((grad y0)^T grad V)_sym| over interior nodes
    double p_defect = 0.0;           // max |(B0^T [grad V, p])_sym| over interior nodes
};

// Solves [grad y0, b1]^T p = [-(grad V)^T b1; 0] node by node.
LimitDisplacement induced_p(const PlateGeometry& geo, const std::vector<Vec3>& v);

// (grad y0)^T grad p + (grad V)^T grad b1, unsymmetrized.
std::vector<Mat2> bending_tensor(const PlateGeometry& geo, const LimitDisplacement& disp);
// Max over interior nodes of the antisymmetric part of the bending tensor.
double bending_asymmetry(const PlateGeometry& geo, const std::vector<Mat2>& bending);

struct Projection {
    std::vector<Vec3> w;            // nodal minimizer of the least-squares problem
    std::vector<Vec3> space_gp;     // P_S F at Gauss points (sym coords)
    std::vector<Vec3> field_gp;     // F at Gauss points (sym coords)
    double norm2 = 0.0;             // |F|^2_Q2
    double space_norm2 = 0.0;       // |P_S F|^2_Q2
    double perp_norm2 = 0.0;        // |P_S-perp F|^2_Q2
    double cross = 0.0;             // <P_S F, P_S-perp F>_Q2
    int iterations = 0;
    double residual = 0.0;
};

// Finite strain space on bilinear elements over the midplate grid with 2x2
// Gauss quadrature: P_S F = ((grad y0)^T grad w*)_sym where w* minimizes
// |((grad y0)^T grad w)_sym - F|_Q2.
class StrainSpace {
public:
    StrainSpace(const ExpansionFields& f, const MetricField& m, const EnergyDensity& d, double solver_tol = 1e-10);

    const MidplateGrid& grid() const { return grid_; }
    std::size_t gauss_points() const { return gps_.size(); }

    // F given at nodes (interpolated bilinearly) or directly at Gauss points.
    Projection project(const std::vector<Mat2>& nodal) const;
    Projection project_gp(const std::vector<Vec3>& at_gp) const;
    // Strain ((grad y0)^T grad w)_sym of a nodal field at Gauss points.
    std::vector<Vec3> strain_gp(const std::vector<Vec3>& w) const;

private:
    struct GaussPoint {
        std::size_t cell;
        std::array<std::size_t, 4> nodes;
        std::array<double, 4> shape;
        Eigen::Matrix<double, 3, 12> strain;  // element dofs -> sym coords
        Mat3 form;                            // Q2 matrix
        double weight;
    };
    MidplateGrid grid_;
    std::vector<GaussPoint> gps_;
    Eigen::SparseMatrix<double> k_scaled_;
    Eigen::VectorXd scale_;
    // Factorization of the scaled matrix plus a small shift, used to
    // precondition conjugate gradients on the semidefinite system.
    std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> shifted_;
    double tol_;
};

struct LimitEnergyResult {
    double total = 0.0;
    double bending = 0.0;     // (1/24) |bending + alpha_n R|^2_Q2
    double perp = 0.0;        // beta_n |P_S-perp R|^2_Q2
    double space = 0.0;       // gamma_n |P_S R|^2_Q2
    CoefficientSet coefficients;
    std::vector<Mat2> curvature;  // R = [d3^{n-1} R_{i3,j3}(x', 0)]
    double bending_asymmetry = 0.0;
    double constraint_defect = 0.0;
};

// Curvature block of order n-1 from the jets, checked against the grid.
std::vector<Mat2> curvature_block(const ExpansionFields& f, const CurvatureMidplateJets& jets);

LimitEnergyResult limit_energy_eval(const ExpansionFields& f, const CurvatureMidplateJets& jets,
                                    const PlateGeometry& geo, const StrainSpace& space,
                                    const std::vector<Vec3>& v);

// Same functional evaluated as the thickness integral
// (1/2) int int Q2(S + x3 bend + x3^{n+1}/(2 (n+1)!) riem_rhs) with the
// optimal shift S = -(m_{n+1}/(n+1)!) P_S(riem_rhs / 2); curvature from the
// expansion fields, thickness integral by Gauss-Legendre.
double limit_energy_thickness_integral(const ExpansionFields& f, const PlateGeometry& geo, const StrainSpace& space,
                                       const std::vector<Vec3>& v);

struct LimitMinimum {
    double value = 0.0;
    std::vector<Vec3> v;
    LimitEnergyResult detail;
};

struct LimitMinimizeOptions {
    double penalty_epsilon = 1e-8;
    double regularization = 1e-12;  // relative Tikhonov weight for grid-scale null modes
};

LimitMinimum minimize_limit_energy(const ExpansionFields& f, const CurvatureMidplateJets& jets,
                                   const PlateGeometry& geo, const StrainSpace& space,
                                   const LimitMinimizeOptions& opts = {});

// Removes the weighted L2 projection onto {S y0 + c}.
std::vector<Vec3> remove_rigid(const PlateGeometry& geo, const std::vector<Vec3>& y0, const std::vector<Vec3>& v);

}  // namespace shellscale
