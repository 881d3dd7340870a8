#include "shellscale/limit_energy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "shellscale/errors.hpp"
#include "shellscale/grid_fd.hpp"
#include "shellscale/parallel.hpp"

namespace shellscale {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

void require_same_grid(const MidplateGrid& a, const MidplateGrid& b, const char* what) {
    if (!(a == b)) throw std::invalid_argument(std::string(what) + " live on different grids");
}

void require_size(const MidplateGrid& grid, std::size_t n, const char* what) {
    if (n != grid.size())
        throw std::invalid_argument(std::string(what) + " has " + std::to_string(n) + " nodes, the grid has " +
                                    std::to_string(grid.size()));
}

double q2(const Mat3& form, const Vec3& s) { return s.dot(form * s); }

// First derivative along one axis acting on a 3-vector nodal field stored as
// [V_0, V_1, ...] with three components per node.
SpMat fd_operator(const MidplateGrid& grid, int axis) {
    const int nx = grid.nx(), ny = grid.ny();
    const double inv = 1.0 / (axis == 0 ? grid.dx() : grid.dy());
    std::vector<Triplet> t;
    t.reserve(grid.size() * 15);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Stencil5 st = axis == 0 ? fd_stencil(i, nx) : fd_stencil(j, ny);
            const std::size_t row = grid.node(i, j);
            for (int q = 0; q < 5; ++q) {
                if (st.w[q] == 0.0) continue;
                const std::size_t col = axis == 0 ? grid.node(st.start + q, j) : grid.node(i, st.start + q);
                for (int c = 0; c < 3; ++c)
                    t.emplace_back(static_cast<int>(3 * row + c), static_cast<int>(3 * col + c), st.w[q] * inv);
            }
        }
    }
    const int n = static_cast<int>(3 * grid.size());
    SpMat m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

SpMat block_diagonal(const std::vector<Mat3>& blocks) {
    std::vector<Triplet> t;
    t.reserve(blocks.size() * 9);
    for (std::size_t n = 0; n < blocks.size(); ++n)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                if (blocks[n](r, c) != 0.0)
                    t.emplace_back(static_cast<int>(3 * n + r), static_cast<int>(3 * n + c), blocks[n](r, c));
    const int n = static_cast<int>(3 * blocks.size());
    SpMat m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

// Conjugate-gradient preconditioner applying a prefactored matrix.
class FactoredPreconditioner {
public:
    using Factor = Eigen::SimplicialLDLT<SpMat>;
    FactoredPreconditioner() = default;
    template <class M>
    FactoredPreconditioner& analyzePattern(const M&) { return *this; }
    template <class M>
    FactoredPreconditioner& factorize(const M&) { return *this; }
    template <class M>
    FactoredPreconditioner& compute(const M&) { return *this; }
    template <class R>
    Eigen::VectorXd solve(const Eigen::MatrixBase<R>& b) const { return factor->solve(b); }
    Eigen::ComputationInfo info() const { return Eigen::Success; }

    std::shared_ptr<const Factor> factor;
};

std::vector<Vec3> unflatten(const Eigen::VectorXd& x) {
    std::vector<Vec3> out(x.size() / 3);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = x.segment<3>(3 * n);
    return out;
}

}  // namespace

PlateGeometry::PlateGeometry(const ExpansionFields& f, const EnergyDensity& d) : grid(f.grid) {
    const std::size_t nn = grid.size();
    grad_y0 = grid_gradient(grid, f.b[0]);
    b1 = f.b[1];
    b2 = f.b[2];
    grad_b1 = grid_gradient(grid, f.b[1]);
    weights = trapezoid_weights(grid);
    frame_inv_t.resize(nn);
    forms.resize(nn);
    parallel_for(nn, [&](std::size_t n) {
        Mat3 frame;
        frame.leftCols<2>() = grad_y0[n];
        frame.col(2) = b1[n];
        const double det = frame.determinant();
        if (!(det > 0.0))
            throw SingularFrame("frame [grad y0, b1] has determinant " + std::to_string(det) + " at node " +
                                std::to_string(n));
        frame_inv_t[n] = frame.inverse().transpose();
        forms[n] = ReducedForm(d, f.dG[0][n]);
    });
}

LimitDisplacement induced_p(const PlateGeometry& geo, const std::vector<Vec3>& v) {
    require_size(geo.grid, v.size(), "displacement");
    const std::vector<Mat32> grad = grid_gradient(geo.grid, v);
    LimitDisplacement out;
    out.v = v;
    out.p.resize(v.size());
    for (std::size_t n = 0; n < v.size(); ++n) {
        const Vec3 rhs(-grad[n].col(0).dot(geo.b1[n]), -grad[n].col(1).dot(geo.b1[n]), 0.0);
        out.p[n] = geo.frame_inv_t[n] * rhs;
        if (!geo.grid.is_interior(n)) continue;
        out.constraint_defect = std::max(out.constraint_defect, max_abs(sym(Mat2(geo.grad_y0[n].transpose() * grad[n]))));
        Mat3 frame, disp;
        frame.leftCols<2>() = geo.grad_y0[n];
        frame.col(2) = geo.b1[n];
        disp.leftCols<2>() = grad[n];
        disp.col(2) = out.p[n];
        out.p_defect = std::max(out.p_defect, max_abs(sym(Mat3(frame.transpose() * disp))));
    }
    return out;
}

std::vector<Mat2> bending_tensor(const PlateGeometry& geo, const LimitDisplacement& disp) {
    require_size(geo.grid, disp.v.size(), "displacement");
    const std::vector<Mat32> grad_v = grid_gradient(geo.grid, disp.v);
    const std::vector<Mat32> grad_p = grid_gradient(geo.grid, disp.p);
    std::vector<Mat2> out(grad_v.size());
    for (std::size_t n = 0; n < out.size(); ++n)
        out[n] = geo.grad_y0[n].transpose() * grad_p[n] + grad_v[n].transpose() * geo.grad_b1[n];
    return out;
}

double bending_asymmetry(const PlateGeometry& geo, const std::vector<Mat2>& bending) {
    double worst = 0.0;
    for (std::size_t n = 0; n < bending.size(); ++n)
        if (geo.grid.is_interior(n)) worst = std::max(worst, 0.5 * std::abs(bending[n](0, 1) - bending[n](1, 0)));
    return worst;
}

StrainSpace::StrainSpace(const ExpansionFields& f, const MetricField& m, const EnergyDensity& d, double solver_tol)
    : grid_(f.grid), tol_(solver_tol) {
    const int nx = grid_.nx(), ny = grid_.ny();
    const std::size_t cells = static_cast<std::size_t>(nx - 1) * (ny - 1);
    const double dx = grid_.dx(), dy = grid_.dy();
    const double g = 1.0 / std::sqrt(3.0);
    gps_.resize(4 * cells);
    parallel_for(cells, [&](std::size_t c) {
        const int i = static_cast<int>(c % (nx - 1)), j = static_cast<int>(c / (nx - 1));
        const std::array<std::size_t, 4> nodes{grid_.node(i, j), grid_.node(i + 1, j), grid_.node(i, j + 1),
                                               grid_.node(i + 1, j + 1)};
        for (int q = 0; q < 4; ++q) {
            const double s = 0.5 * (1.0 + ((q % 2) ? g : -g));
            const double t = 0.5 * (1.0 + ((q / 2) ? g : -g));
            GaussPoint& gp = gps_[4 * c + q];
            gp.cell = c;
            gp.nodes = nodes;
            gp.shape = {(1 - s) * (1 - t), s * (1 - t), (1 - s) * t, s * t};
            const std::array<double, 4> d1{-(1 - t) / dx, (1 - t) / dx, -t / dx, t / dx};
            const std::array<double, 4> d2{-(1 - s) / dy, -s / dy, (1 - s) / dy, s / dy};
            Vec3 a1 = Vec3::Zero(), a2 = Vec3::Zero();
            for (int a = 0; a < 4; ++a) {
                a1 += gp.shape[a] * f.B[0][nodes[a]].col(0);
                a2 += gp.shape[a] * f.B[0][nodes[a]].col(1);
            }
            gp.strain.setZero();
            for (int a = 0; a < 4; ++a) {
                for (int k = 0; k < 3; ++k) {
                    gp.strain(0, 3 * a + k) = a1[k] * d1[a];
                    gp.strain(1, 3 * a + k) = 0.5 * (a1[k] * d2[a] + a2[k] * d1[a]);
                    gp.strain(2, 3 * a + k) = a2[k] * d2[a];
                }
            }
            const Vec3 x(grid_.x1(i) + s * dx, grid_.x2(j) + t * dy, 0.0);
            gp.form = ReducedForm(d, m.evaluate(x)).matrix();
            gp.weight = 0.25 * dx * dy;
        }
    });

    std::vector<Eigen::Matrix<double, 12, 12>> element(cells);
    parallel_for(cells, [&](std::size_t c) {
        element[c].setZero();
        for (int q = 0; q < 4; ++q) {
            const GaussPoint& gp = gps_[4 * c + q];
            element[c] += gp.weight * gp.strain.transpose() * gp.form * gp.strain;
        }
    });
    std::vector<Triplet> t;
    t.reserve(cells * 144);
    for (std::size_t c = 0; c < cells; ++c) {
        const auto& nodes = gps_[4 * c].nodes;
        for (int a = 0; a < 12; ++a)
            for (int b = 0; b < 12; ++b)
                t.emplace_back(static_cast<int>(3 * nodes[a / 3] + a % 3), static_cast<int>(3 * nodes[b / 3] + b % 3),
                               element[c](a, b));
    }
    const int n = static_cast<int>(3 * grid_.size());
    SpMat k(n, n);
    k.setFromTriplets(t.begin(), t.end());
    scale_.resize(n);
    for (int r = 0; r < n; ++r) {
        const double diag = k.coeff(r, r);
        scale_[r] = diag > 0.0 ? 1.0 / std::sqrt(diag) : 1.0;
    }
    k_scaled_ = scale_.asDiagonal() * k * scale_.asDiagonal();
    SpMat shift(n, n);
    shift.setIdentity();
    auto factor = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(SpMat(k_scaled_ + 1e-10 * shift));
    if (factor->info() != Eigen::Success) throw SolverDiverged("factorization of the strain projection failed", 0.0);
    shifted_ = factor;
}

std::vector<Vec3> StrainSpace::strain_gp(const std::vector<Vec3>& w) const {
    require_size(grid_, w.size(), "strain field");
    std::vector<Vec3> out(gps_.size());
    for (std::size_t q = 0; q < gps_.size(); ++q) {
        const GaussPoint& gp = gps_[q];
        Eigen::Matrix<double, 12, 1> we;
        for (int a = 0; a < 4; ++a) we.segment<3>(3 * a) = w[gp.nodes[a]];
        out[q] = gp.strain * we;
    }
    return out;
}

Projection StrainSpace::project(const std::vector<Mat2>& nodal) const {
    require_size(grid_, nodal.size(), "projected field");
    std::vector<Vec3> at_gp(gps_.size());
    for (std::size_t q = 0; q < gps_.size(); ++q) {
        Vec3 s = Vec3::Zero();
        for (int a = 0; a < 4; ++a) s += gps_[q].shape[a] * sym_coords(nodal[gps_[q].nodes[a]]);
        at_gp[q] = s;
    }
    return project_gp(at_gp);
}

Projection StrainSpace::project_gp(const std::vector<Vec3>& at_gp) const {
    if (at_gp.size() != gps_.size()) throw std::invalid_argument("projected field does not match the Gauss points");
    const int n = static_cast<int>(3 * grid_.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (std::size_t q = 0; q < gps_.size(); ++q) {
        const GaussPoint& gp = gps_[q];
        const Eigen::Matrix<double, 12, 1> fe = gp.weight * gp.strain.transpose() * (gp.form * at_gp[q]);
        for (int a = 0; a < 4; ++a) rhs.segment<3>(3 * gp.nodes[a]) += fe.segment<3>(3 * a);
    }
    Projection out;
    out.field_gp = at_gp;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    if (rhs.norm() > 0.0) {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, FactoredPreconditioner> cg;
        cg.setTolerance(tol_);
        cg.setMaxIterations(std::max(1000, n));
        cg.compute(k_scaled_);
        cg.preconditioner().factor = shifted_;
        const Eigen::VectorXd z = cg.solve(scale_.asDiagonal() * rhs);
        out.iterations = static_cast<int>(cg.iterations());
        out.residual = cg.error();
        if (cg.info() != Eigen::Success && !(cg.error() <= tol_))
            throw SolverDiverged("strain projection missed its residual target", cg.error());
        w = scale_.asDiagonal() * z;
    }
    out.w = unflatten(w);
    out.space_gp = strain_gp(out.w);
    for (std::size_t q = 0; q < gps_.size(); ++q) {
        const GaussPoint& gp = gps_[q];
        const Vec3 ps = out.space_gp[q], perp = at_gp[q] - ps;
        out.norm2 += gp.weight * q2(gp.form, at_gp[q]);
        out.space_norm2 += gp.weight * q2(gp.form, ps);
        out.perp_norm2 += gp.weight * q2(gp.form, perp);
        out.cross += gp.weight * ps.dot(gp.form * perp);
    }
    return out;
}

std::vector<Mat2> curvature_block(const ExpansionFields& f, const CurvatureMidplateJets& jets) {
    require_same_grid(f.grid, jets.grid, "curvature jets and expansion fields");
    if (jets.order < f.order - 1)
        throw InsufficientJetOrder("level " + std::to_string(f.order) + " needs curvature jets of order " +
                                   std::to_string(f.order - 1));
    return jets.blocks[f.order - 1];
}

LimitEnergyResult limit_energy_eval(const ExpansionFields& f, const CurvatureMidplateJets& jets,
                                    const PlateGeometry& geo, const StrainSpace& space, const std::vector<Vec3>& v) {
    require_same_grid(f.grid, geo.grid, "plate geometry and expansion fields");
    require_same_grid(f.grid, space.grid(), "strain space and expansion fields");
    LimitEnergyResult out;
    out.coefficients = coefficients(f.order);
    out.curvature = curvature_block(f, jets);
    const LimitDisplacement disp = induced_p(geo, v);
    out.constraint_defect = disp.constraint_defect;
    const std::vector<Mat2> bend = bending_tensor(geo, disp);
    out.bending_asymmetry = bending_asymmetry(geo, bend);
    double bending = 0.0;
    for (std::size_t n = 0; n < bend.size(); ++n)
        bending += geo.weights[n] *
                   q2(geo.forms[n].matrix(), sym_coords(bend[n]) + out.coefficients.alpha * sym_coords(out.curvature[n]));
    const Projection proj = space.project(out.curvature);
    out.bending = bending / 24.0;
    out.perp = out.coefficients.beta * proj.perp_norm2;
    out.space = out.coefficients.gamma * proj.space_norm2;
    out.total = out.bending + out.perp + out.space;
    return out;
}

double limit_energy_thickness_integral(const ExpansionFields& f, const PlateGeometry& geo, const StrainSpace& space,
                                       const std::vector<Vec3>& v) {
    require_same_grid(f.grid, geo.grid, "plate geometry and expansion fields");
    require_same_grid(f.grid, space.grid(), "strain space and expansion fields");
    const int n = f.order;
    const CoefficientSet coeffs = coefficients(n);
    std::vector<Mat2> curv = riem_rhs(f);
    for (Mat2& r : curv) r *= 0.5;
    const Projection proj = space.project(curv);
    const std::vector<Mat32> grad_w = grid_gradient(f.grid, proj.w);
    const std::vector<Mat2> bend = bending_tensor(geo, induced_p(geo, v));
    const QuadratureRule rule = gauss_legendre(n + 3, -0.5, 0.5);
    const double inv_fact = 1.0 / factorial(n + 1);
    double total = 0.0;
    for (std::size_t node = 0; node < bend.size(); ++node) {
        const Vec3 shift = -coeffs.delta * sym_coords(Mat2(geo.grad_y0[node].transpose() * grad_w[node]));
        const Vec3 b = sym_coords(bend[node]), r = sym_coords(curv[node]);
        double column = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double t = rule.nodes[q];
            column += rule.weights[q] * 0.5 * q2(geo.forms[node].matrix(), shift + t * b + std::pow(t, n + 1) * inv_fact * r);
        }
        total += geo.weights[node] * column;
    }
    return total;
}

std::vector<Vec3> remove_rigid(const PlateGeometry& geo, const std::vector<Vec3>& y0, const std::vector<Vec3>& v) {
    require_size(geo.grid, v.size(), "displacement");
    require_size(geo.grid, y0.size(), "midplate immersion");
    auto basis = [&](int k, std::size_t n) -> Vec3 {
        if (k < 3) return Vec3::Unit(k);
        return Vec3::Unit(k - 3).cross(y0[n]);
    };
    Eigen::Matrix<double, 6, 6> gram = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t n = 0; n < v.size(); ++n) {
        for (int a = 0; a < 6; ++a) {
            rhs[a] += geo.weights[n] * basis(a, n).dot(v[n]);
            for (int b = 0; b < 6; ++b) gram(a, b) += geo.weights[n] * basis(a, n).dot(basis(b, n));
        }
    }
    const Eigen::Matrix<double, 6, 1> coef = gram.ldlt().solve(rhs);
    std::vector<Vec3> out = v;
    for (std::size_t n = 0; n < v.size(); ++n)
        for (int a = 0; a < 6; ++a) out[n] -= coef[a] * basis(a, n);
    return out;
}

LimitMinimum minimize_limit_energy(const ExpansionFields& f, const CurvatureMidplateJets& jets,
                                   const PlateGeometry& geo, const StrainSpace& space,
                                   const LimitMinimizeOptions& opts) {
    require_same_grid(f.grid, geo.grid, "plate geometry and expansion fields");
    if (!(opts.penalty_epsilon > 0.0)) throw std::invalid_argument("penalty epsilon must be positive");
    const std::size_t nn = geo.grid.size();
    const CoefficientSet coeffs = coefficients(f.order);
    const std::vector<Mat2> curv = curvature_block(f, jets);

    std::vector<Mat3> pa1(nn), pa2(nn), y1(nn), y2(nn), z1(nn), z2(nn), wq(nn), wc(nn);
    Eigen::VectorXd target(3 * nn);
    for (std::size_t n = 0; n < nn; ++n) {
        const Vec3 a1 = geo.grad_y0[n].col(0), a2 = geo.grad_y0[n].col(1);
        const Vec3 c1 = geo.grad_b1[n].col(0), c2 = geo.grad_b1[n].col(1);
        pa1[n] = -geo.frame_inv_t[n].col(0) * geo.b1[n].transpose();
        pa2[n] = -geo.frame_inv_t[n].col(1) * geo.b1[n].transpose();
        y1[n] << a1.transpose(), 0.5 * a2.transpose(), Vec3::Zero().transpose();
        y2[n] << Vec3::Zero().transpose(), 0.5 * a1.transpose(), a2.transpose();
        z1[n] << c1.transpose(), 0.5 * c2.transpose(), Vec3::Zero().transpose();
        z2[n] << Vec3::Zero().transpose(), 0.5 * c1.transpose(), c2.transpose();
        wq[n] = geo.weights[n] * geo.forms[n].matrix();
        wc[n] = geo.weights[n] * Vec3(1.0, 2.0, 1.0).asDiagonal().toDenseMatrix();
        target.segment<3>(3 * n) = coeffs.alpha * sym_coords(curv[n]);
    }
    const SpMat d1 = fd_operator(geo.grid, 0), d2 = fd_operator(geo.grid, 1);
    const SpMat p = block_diagonal(pa1) * d1 + block_diagonal(pa2) * d2;
    const SpMat y1m = block_diagonal(y1), y2m = block_diagonal(y2);
    const SpMat bend = SpMat(y1m * d1 * p) + SpMat(y2m * d2 * p) + SpMat(block_diagonal(z1) * d1) +
                       SpMat(block_diagonal(z2) * d2);
    const SpMat constraint = SpMat(y1m * d1) + SpMat(y2m * d2);
    const SpMat wqm = block_diagonal(wq), wcm = block_diagonal(wc);

    SpMat a = SpMat(bend.transpose() * wqm * bend) / 24.0;
    double scale = 0.0;
    for (int k = 0; k < a.rows(); ++k) scale = std::max(scale, a.coeff(k, k));
    a += SpMat(constraint.transpose() * wcm * constraint) / opts.penalty_epsilon;
    SpMat reg(a.rows(), a.cols());
    reg.setIdentity();
    a += opts.regularization * std::max(scale, 1e-300) * reg;
    const Eigen::VectorXd rhs = -(bend.transpose() * (wqm * target)) / 24.0;

    Eigen::SimplicialLDLT<SpMat> solver(a);
    if (solver.info() != Eigen::Success) throw SolverDiverged("factorization of the limit energy system failed", 0.0);
    Eigen::VectorXd x = solver.solve(rhs);
    for (int step = 0; step < 3; ++step) x += solver.solve(Eigen::VectorXd(rhs - a * x));
    const double residual = rhs.norm() > 0.0 ? (a * x - rhs).norm() / rhs.norm() : (a * x).norm();
    if (solver.info() != Eigen::Success || !(residual <= 1e-8))
        throw SolverDiverged("limit energy minimization missed its residual target", residual);

    LimitMinimum out;
    out.v = remove_rigid(geo, f.y0(), unflatten(x));
    out.detail = limit_energy_eval(f, jets, geo, space, out.v);
    out.value = out.detail.total;
    return out;
}

}  // namespace shellscale
