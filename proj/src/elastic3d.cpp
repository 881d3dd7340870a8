#include "shellscale/elastic3d.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

#include "shellscale/errors.hpp"
#include "shellscale/grid_fd.hpp"
#include "shellscale/parallel.hpp"

namespace shellscale {

namespace {

// Pairwise summation in a fixed order.
double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

void require_matching_grid(const ExpansionFields& f, const HexMesh& mesh) {
    if (!(mesh.midplate() == f.grid))
        throw std::invalid_argument("the mesh's in-plane nodes must coincide with the expansion grid");
}

using Vec = Eigen::VectorXd;

Vec flatten(const std::vector<Vec3>& u) {
    Vec x(3 * u.size());
    for (std::size_t n = 0; n < u.size(); ++n) x.segment<3>(3 * n) = u[n];
    return x;
}

std::vector<Vec3> unflatten(const Vec& x) {
    std::vector<Vec3> u(x.size() / 3);
    for (std::size_t n = 0; n < u.size(); ++n) u[n] = x.segment<3>(3 * n);
    return u;
}

std::vector<double> to_std(const Vec& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

}  // namespace

HexMesh::HexMesh(Rect d, int nx_, int ny_, int nz_, double h_) : domain(d), nx(nx_), ny(ny_), nz(nz_), h(h_) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("a hexahedral mesh needs at least 2 nodes per in-plane axis");
    if (nz < 2) throw std::invalid_argument("a hexahedral mesh needs at least 2 nodes across the thickness");
    if (!(h > 0.0)) throw std::invalid_argument("thickness must be positive");
    if (!(domain.x1_max > domain.x1_min && domain.x2_max > domain.x2_min))
        throw std::invalid_argument("midplate rectangle is empty");
}

Vec3 HexMesh::point(std::size_t n) const {
    const int i = static_cast<int>(n % nx);
    const int j = static_cast<int>((n / nx) % ny);
    const int k = static_cast<int>(n / (static_cast<std::size_t>(nx) * ny));
    return {domain.x1_min + i * dx(), domain.x2_min + j * dy(), -0.5 * h + k * dz()};
}

DeformationGrid identity_deformation(const HexMesh& mesh) {
    DeformationGrid g{mesh, std::vector<Vec3>(mesh.size())};
    for (std::size_t n = 0; n < mesh.size(); ++n) g.u[n] = mesh.point(n);
    return g;
}

Energy3d::Energy3d(const MetricField& m, const EnergyDensity& d, const HexMesh& mesh, int gauss_order)
    : mesh_(mesh), density_(d) {
    if (gauss_order < 1) throw std::invalid_argument("Gauss order must be at least 1");
    const QuadratureRule rule = gauss_legendre(gauss_order, 0.0, 1.0);
    const int g = gauss_order;
    points_ = g * g * g;
    const double dx = mesh.dx(), dy = mesh.dy(), dz = mesh.dz();
    std::vector<Vec3> local(points_);
    for (int c = 0; c < g; ++c) {
        for (int b = 0; b < g; ++b) {
            for (int a = 0; a < g; ++a) {
                const Vec3 s(rule.nodes[a], rule.nodes[b], rule.nodes[c]);
                local[(c * g + b) * g + a] = s;
                Eigen::Matrix<double, 8, 3> ds;
                for (int l = 0; l < 8; ++l) {
                    const int ai = l & 1, bi = (l >> 1) & 1, ci = (l >> 2) & 1;
                    const double f0 = ai ? s[0] : 1.0 - s[0];
                    const double f1 = bi ? s[1] : 1.0 - s[1];
                    const double f2 = ci ? s[2] : 1.0 - s[2];
                    ds(l, 0) = (ai ? 1.0 : -1.0) * f1 * f2 / dx;
                    ds(l, 1) = (bi ? 1.0 : -1.0) * f0 * f2 / dy;
                    ds(l, 2) = (ci ? 1.0 : -1.0) * f0 * f1 / dz;
                }
                dshape.push_back(ds);
                ref_weight.push_back(rule.weights[a] * rule.weights[b] * rule.weights[c] * dx * dy * dz / mesh.h);
            }
        }
    }
    const std::size_t elements = mesh.elements();
    inv_sqrt_g.resize(elements * points_);
    parallel_for(elements, [&](std::size_t e) {
        const int i = static_cast<int>(e % (mesh.nx - 1));
        const int j = static_cast<int>((e / (mesh.nx - 1)) % (mesh.ny - 1));
        const int k = static_cast<int>(e / (static_cast<std::size_t>(mesh.nx - 1) * (mesh.ny - 1)));
        for (int q = 0; q < points_; ++q) {
            const Vec3 x(mesh.domain.x1_min + (i + local[q][0]) * dx, mesh.domain.x2_min + (j + local[q][1]) * dy,
                         -0.5 * mesh.h + (k + local[q][2]) * dz);
            inv_sqrt_g[e * points_ + q] = sym_inv_sqrt(m.evaluate(x));
        }
    });
}

template <bool WithGradient>
double Energy3d::evaluate(const std::vector<Vec3>& u, std::vector<Vec3>* grad) const {
    if (u.size() != mesh_.size()) throw std::invalid_argument("deformation does not match the mesh");
    const std::size_t elements = mesh_.elements();
    const int ex = mesh_.nx - 1, ey = mesh_.ny - 1;
    std::vector<double> element_energy(elements);
    std::vector<Eigen::Matrix<double, 3, 8>> element_grad(WithGradient ? elements : 0);
    auto corners = [&](std::size_t e) {
        const int i = static_cast<int>(e % ex);
        const int j = static_cast<int>((e / ex) % ey);
        const int k = static_cast<int>(e / (static_cast<std::size_t>(ex) * ey));
        std::array<std::size_t, 8> nodes;
        for (int l = 0; l < 8; ++l) nodes[l] = mesh_.node(i + (l & 1), j + ((l >> 1) & 1), k + ((l >> 2) & 1));
        return nodes;
    };
    parallel_for(elements, [&](std::size_t e) {
        const std::array<std::size_t, 8> nodes = corners(e);
        Eigen::Matrix<double, 3, 8> ue;
        for (int l = 0; l < 8; ++l) ue.col(l) = u[nodes[l]];
        double sum = 0.0;
        Eigen::Matrix<double, 3, 8> ge = Eigen::Matrix<double, 3, 8>::Zero();
        for (int q = 0; q < points_; ++q) {
            const Mat3& a = inv_sqrt_g[e * points_ + q];
            const Mat3 f = ue * dshape[q] * a;
            if constexpr (WithGradient) {
                Mat3 p;
                sum += ref_weight[q] * density_.eval_with_gradient(f, p);
                ge += ref_weight[q] * (p * a) * dshape[q].transpose();
            } else {
                sum += ref_weight[q] * density_.eval(f);
            }
        }
        element_energy[e] = sum;
        if constexpr (WithGradient) element_grad[e] = ge;
    });
    if constexpr (WithGradient) {
        grad->assign(u.size(), Vec3::Zero());
        for (std::size_t e = 0; e < elements; ++e) {
            const std::array<std::size_t, 8> nodes = corners(e);
            for (int l = 0; l < 8; ++l) (*grad)[nodes[l]] += element_grad[e].col(l);
        }
    }
    return pairwise_sum(element_energy.data(), element_energy.size());
}

double Energy3d::energy(const std::vector<Vec3>& u) const { return evaluate<false>(u, nullptr); }

double Energy3d::energy_and_gradient(const std::vector<Vec3>& u, std::vector<Vec3>& grad) const {
    return evaluate<true>(u, &grad);
}

double energy3d(const DeformationGrid& u, const MetricField& m, const EnergyDensity& d, int gauss_order) {
    return Energy3d(m, d, u.mesh, gauss_order).energy(u.u);
}

std::vector<Vec3> gradient3d(const DeformationGrid& u, const MetricField& m, const EnergyDensity& d,
                             int gauss_order) {
    std::vector<Vec3> g;
    Energy3d(m, d, u.mesh, gauss_order).energy_and_gradient(u.u, g);
    return g;
}

DeformationGrid ansatz_deformation(const ExpansionFields& f, const HexMesh& mesh, int order) {
    require_matching_grid(f, mesh);
    if (order < 1) throw std::invalid_argument("ansatz order must be at least 1");
    if (order > f.order + 1)
        throw InsufficientJetOrder("ansatz of order " + std::to_string(order) + " needs expansion fields of level " +
                                   std::to_string(order - 1));
    DeformationGrid out{mesh, std::vector<Vec3>(mesh.size())};
    const std::size_t plane = f.grid.size();
    for (std::size_t n = 0; n < mesh.size(); ++n) {
        const std::size_t m = n % plane;
        const double x3 = mesh.point(n)[2];
        Vec3 u = f.b[0][m];
        double c = 1.0;
        for (int k = 1; k <= order; ++k) {
            c *= x3 / k;
            u += c * f.b[k][m];
        }
        out.u[n] = u;
    }
    return out;
}

RecoveryCorrectors recovery_correctors(const ExpansionFields& f, const CurvatureMidplateJets& jets,
                                       const PlateGeometry& geo, const StrainSpace& space,
                                       const std::vector<Vec3>& v) {
    const int n = f.order;
    const MidplateGrid& grid = f.grid;
    const std::size_t nn = grid.size();
    if (!(geo.grid == grid) || !(space.grid() == grid))
        throw std::invalid_argument("plate geometry, strain space and expansion fields live on different grids");
    const CoefficientSet coeffs = coefficients(n);
    const std::vector<Mat2> curv = curvature_block(f, jets);

    RecoveryCorrectors c;
    const LimitDisplacement disp = induced_p(geo, v);
    c.v = v;
    c.p = disp.p;
    c.w.assign(nn, Vec3::Zero());
    if (coeffs.delta != 0.0) {
        const Projection proj = space.project(curv);
        for (std::size_t node = 0; node < nn; ++node) c.w[node] = -coeffs.delta * proj.w[node];
    }
    const std::vector<Mat32> grad_w = grid_gradient(grid, c.w);
    const std::vector<Mat32> grad_v = grid_gradient(grid, v);
    const std::vector<Mat32> grad_top = grid_gradient(grid, f.b[n + 1]);
    const std::vector<Mat2> rhs = riem_rhs(f);
    const std::vector<Mat2> bend = bending_tensor(geo, disp);

    c.q.resize(nn);
    c.k0.resize(nn);
    c.r.resize(nn);
    for (std::size_t node = 0; node < nn; ++node) {
        const ReducedForm& form = geo.forms[node];
        const Mat3& inv_t = geo.frame_inv_t[node];
        const Vec3& b1 = geo.b1[node];
        const Vec3& b2 = geo.b2[node];

        // Membrane corrector at order h^{n+1}: third column relaxes the strain of w.
        const Mat2 strain_w = sym(Mat2(geo.grad_y0[node].transpose() * grad_w[node]));
        const Vec3 wq = form.c(strain_w) - Vec3(grad_w[node].col(0).dot(b1), grad_w[node].col(1).dot(b1), 0.0);
        c.q[node] = inv_t * wq;

        // Curvature corrector at order x3^{n+1}: relaxes the residual of the truncated expansion.
        Mat3 s = -f.dG[n + 1][node];
        for (int k = 1; k <= n; ++k) s += binomial(n + 1, k) * (f.B[k][node].transpose() * f.B[n + 1 - k][node]);
        Vec3 bracket;
        for (int i = 0; i < 2; ++i) bracket[i] = 2.0 * (s(i, 2) + b1.dot(grad_top[node].col(i)));
        bracket[2] = s(2, 2);
        c.k0[node] = inv_t * (0.5 * (form.c(rhs[node]) - bracket));

        // Bending corrector at order h^n x3.
        const Vec3 rb = form.c(sym(bend[node])) -
                        Vec3(grad_v[node].col(0).dot(b2), grad_v[node].col(1).dot(b2), c.p[node].dot(b2));
        c.r[node] = inv_t * rb;
    }
    return c;
}

DeformationGrid recovery_deformation(const ExpansionFields& f, const RecoveryCorrectors& c, const HexMesh& mesh) {
    require_matching_grid(f, mesh);
    const std::size_t plane = f.grid.size();
    if (c.v.size() != plane || c.k0.size() != plane) throw std::invalid_argument("correctors do not match the grid");
    const int n = f.order;
    const double h = mesh.h;
    const double hn = std::pow(h, n), hn1 = hn * h;
    const double top = 1.0 / factorial(n + 2);
    DeformationGrid out{mesh, std::vector<Vec3>(mesh.size())};
    for (std::size_t node = 0; node < mesh.size(); ++node) {
        const std::size_t m = node % plane;
        const double x3 = mesh.point(node)[2];
        Vec3 u = f.b[0][m];
        double coef = 1.0;
        for (int k = 1; k <= n + 1; ++k) {
            coef *= x3 / k;
            u += coef * f.b[k][m];
        }
        u += hn * c.v[m] + hn1 * c.w[m] + hn * x3 * c.p[m] + hn1 * x3 * c.q[m];
        u += std::pow(x3, n + 2) * top * c.k0[m] + hn * 0.5 * x3 * x3 * c.r[m];
        out.u[node] = u;
    }
    return out;
}

namespace {

struct Gauge {
    std::vector<int> pinned;  // flattened dof indices
};

Gauge make_gauge(const HexMesh& mesh) {
    const MidplateGrid plane = mesh.midplate();
    const std::size_t c = plane.centroid_node();
    const int i = plane.i_of(c), j = plane.j_of(c), k = mesh.nz / 2;
    const int ie = i + 1 < mesh.nx ? i + 1 : i - 1;
    const int je = j + 1 < mesh.ny ? j + 1 : j - 1;
    const auto dof = [&](std::size_t node, int comp) { return static_cast<int>(3 * node + comp); };
    const std::size_t base = mesh.node(i, j, k), n1 = mesh.node(ie, j, k), n2 = mesh.node(i, je, k);
    return {{dof(base, 0), dof(base, 1), dof(base, 2), dof(n1, 1), dof(n1, 2), dof(n2, 2)}};
}

class Objective {
public:
    Objective(const Energy3d& e, const Gauge& g) : energy_(e), gauge_(g) {}
    // Value and gauge-projected gradient; +inf for degenerate deformations.
    double operator()(const Vec& x, Vec& grad) {
        ++evaluations;
        std::vector<Vec3> g;
        double value;
        try {
            value = energy_.energy_and_gradient(unflatten(x), g);
        } catch (const DegenerateDeformation&) {
            grad = Vec::Zero(x.size());
            return std::numeric_limits<double>::infinity();
        }
        grad = flatten(g);
        for (int d : gauge_.pinned) grad[d] = 0.0;
        return value;
    }
    int evaluations = 0;

private:
    const Energy3d& energy_;
    const Gauge& gauge_;
};

struct LineSearchPoint {
    double alpha;
    double value;
    double slope;
    Vec grad;
};

// Strong Wolfe line search (bracketing followed by safeguarded zoom).
bool strong_wolfe(Objective& obj, const Vec& x, double f0, double d0, const Vec& dir, double alpha0,
                  const LbfgsOptions& opts, LineSearchPoint& out) {
    auto eval = [&](double a) {
        LineSearchPoint p{a, 0.0, 0.0, Vec()};
        p.value = obj(x + a * dir, p.grad);
        p.slope = std::isfinite(p.value) ? p.grad.dot(dir) : 0.0;
        return p;
    };
    auto sufficient = [&](const LineSearchPoint& p) {
        return std::isfinite(p.value) && p.value <= f0 + opts.armijo * p.alpha * d0;
    };
    auto curvature_ok = [&](const LineSearchPoint& p) { return std::abs(p.slope) <= -opts.curvature * d0; };

    auto zoom = [&](LineSearchPoint lo, LineSearchPoint hi) {
        for (int it = 0; it < 40; ++it) {
            const double width = hi.alpha - lo.alpha;
            double a = lo.alpha + 0.5 * width;
            if (std::isfinite(hi.value)) {
                const double denom = 2.0 * (hi.value - lo.value - lo.slope * width);
                if (denom > 0.0) {
                    const double trial = lo.alpha - lo.slope * width * width / denom;
                    const double lo_b = lo.alpha + 0.1 * width, hi_b = hi.alpha - 0.1 * width;
                    if ((trial - lo_b) * (trial - hi_b) < 0.0) a = trial;
                }
            }
            const LineSearchPoint p = eval(a);
            if (!sufficient(p) || p.value >= lo.value) {
                hi = p;
            } else {
                if (curvature_ok(p)) {
                    out = p;
                    return true;
                }
                if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = p;
            }
            if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
        }
        // Accept the best point with sufficient decrease if curvature never held.
        if (lo.alpha > 0.0) {
            out = lo;
            return true;
        }
        return false;
    };

    LineSearchPoint prev{0.0, f0, d0, Vec()};
    double a = alpha0;
    for (int it = 0; it < 40; ++it) {
        const LineSearchPoint p = eval(a);
        if (!sufficient(p) || (it > 0 && p.value >= prev.value)) return zoom(prev, p);
        if (curvature_ok(p)) {
            out = p;
            return true;
        }
        if (p.slope >= 0.0) return zoom(p, prev);
        prev = p;
        a *= 2.0;
    }
    return false;
}

}  // namespace

MinimizeResult minimize3d(const DeformationGrid& init, const Energy3d& energy, const LbfgsOptions& opts) {
    if (!(init.mesh.midplate() == energy.mesh().midplate()) || init.mesh.nz != energy.mesh().nz ||
        init.mesh.h != energy.mesh().h)
        throw std::invalid_argument("initial deformation and energy use different meshes");
    const Gauge gauge = make_gauge(init.mesh);
    Objective obj(energy, gauge);
    Vec x = flatten(init.u);
    Vec g;
    double f = obj(x, g);
    if (!std::isfinite(f)) throw DegenerateDeformation("initial deformation is degenerate", 0.0);

    MinimizeResult res{init, f, f, 0, 0, g.norm()};
    const double g0 = g.norm();
    std::deque<Vec> s_hist, y_hist;
    std::deque<double> rho_hist;
    auto finish = [&](int iterations) {
        res.u.u = unflatten(x);
        res.energy = f;
        res.iterations = iterations;
        res.evaluations = obj.evaluations;
        res.gradient_norm = g.norm();
        return res;
    };
    if (g0 == 0.0) return finish(0);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (g.norm() <= opts.gradient_tol * g0) return finish(iter);
        // Two-loop recursion.
        Vec q = g;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        double gamma = 1.0;
        if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        Vec dir = gamma * q;
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(dir);
            dir += (alpha[i] - beta) * s_hist[i];
        }
        dir = -dir;
        for (int d : gauge.pinned) dir[d] = 0.0;
        double d0 = g.dot(dir);
        if (!(d0 < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -g;
            d0 = g.dot(dir);
        }
        const double alpha0 = s_hist.empty() ? std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()) : 1.0;
        LineSearchPoint p;
        if (!strong_wolfe(obj, x, f, d0, dir, alpha0, opts, p)) {
            res.evaluations = obj.evaluations;
            throw LineSearchFailed("line search found no acceptable step", to_std(x), f);
        }
        const Vec s = p.alpha * dir;
        const Vec y = p.grad - g;
        const double sy = s.dot(y);
        x += s;
        f = p.value;
        g = p.grad;
        if (sy > 1e-300) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
    }
    if (g.norm() <= opts.gradient_tol * g0) return finish(opts.max_iterations);
    throw MaxIterations("minimization reached its iteration limit", to_std(x), f);
}

std::string to_string(SweepMode mode) {
    switch (mode) {
        case SweepMode::Ansatz: return "ansatz";
        case SweepMode::Recovery: return "recovery";
        case SweepMode::Minimize: return "minimize";
    }
    return "ansatz";
}

SweepMode sweep_mode_from_string(const std::string& s) {
    if (s == "ansatz") return SweepMode::Ansatz;
    if (s == "recovery") return SweepMode::Recovery;
    if (s == "minimize" || s == "minimized") return SweepMode::Minimize;
    throw std::invalid_argument("unknown sweep mode '" + s + "' (expected ansatz, recovery or minimize)");
}

LogFit fit_log_log(const std::vector<double>& h, const std::vector<double>& e) {
    if (h.size() != e.size() || h.size() < 2) throw std::invalid_argument("a log-log fit needs at least two points");
    Eigen::MatrixXd a(h.size(), 2);
    Eigen::VectorXd b(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0) || !(e[i] > 0.0)) throw std::invalid_argument("log-log fit needs positive values");
        a(i, 0) = std::log(h[i]);
        a(i, 1) = 1.0;
        b[i] = std::log(e[i]);
    }
    const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
    return {c[0], c[1], (a * c - b).norm()};
}

namespace {

// Builds the deformation of one sweep mode on a mesh (before minimization).
struct SweepBuilder {
    const MetricField& m;
    const EnergyDensity& d;
    const ExpansionFields& f;
    SweepMode mode;
    std::optional<RecoveryCorrectors> correctors;

    SweepBuilder(const MetricField& m_, const EnergyDensity& d_, const ExpansionFields& f_,
                 const CurvatureMidplateJets& jets, SweepMode mode_, const std::vector<Vec3>& v)
        : m(m_), d(d_), f(f_), mode(mode_) {
        if (mode != SweepMode::Ansatz) {
            const PlateGeometry geo(f, d);
            const StrainSpace space(f, m, d);
            correctors = recovery_correctors(f, jets, geo, space,
                                             v.empty() ? std::vector<Vec3>(f.grid.size(), Vec3::Zero()) : v);
        }
    }

    DeformationGrid build(const HexMesh& mesh) const {
        if (mode == SweepMode::Ansatz) return ansatz_deformation(f, mesh, f.order + 1);
        return recovery_deformation(f, *correctors, mesh);
    }
};

}  // namespace

SweepResult scaling_sweep(const MetricField& m, const EnergyDensity& d, const ExpansionFields& f,
                          const CurvatureMidplateJets& jets, const std::vector<double>& hs, SweepMode mode,
                          const SweepOptions& opts) {
    if (hs.size() < 3) throw std::invalid_argument("a sweep needs at least three thickness values");
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if (!(hs[i] > 0.0)) throw std::invalid_argument("thickness values must be positive");
        if (i > 0 && !(hs[i] < hs[i - 1])) throw std::invalid_argument("thickness values must be strictly decreasing");
    }
    const int n = f.order;
    const MidplateGrid& grid = f.grid;
    const SweepBuilder coarse(m, d, f, jets, mode, opts.v);

    // Same construction with V = 0 on the in-plane refined grid, for the floor estimate.
    const MidplateGrid fine_grid(grid.domain(), 2 * grid.nx() - 1, 2 * grid.ny() - 1);
    const ExpansionFields fine = build_expansion(m, fine_grid, n);
    const CurvatureMidplateJets fine_jets = curvature_midplate_jets(m, fine_grid, std::max(n - 1, 0));
    const SweepBuilder refined(m, d, fine, fine_jets, mode, {});
    const SweepBuilder plain = opts.v.empty() ? coarse : SweepBuilder(m, d, f, jets, mode, {});

    SweepResult out;
    out.mode = mode;
    out.n = n;
    const double power = 2.0 * (n + 1);
    for (double h : hs) {
        const HexMesh mesh(grid.domain(), grid.nx(), grid.ny(), opts.nz, h);
        const HexMesh fine_mesh(grid.domain(), fine_grid.nx(), fine_grid.ny(), opts.nz, h);
        const Energy3d energy(m, d, mesh, opts.gauss_order);
        const Energy3d fine_energy(m, d, fine_mesh, opts.gauss_order);
        SweepPoint pt;
        pt.h = h;
        const DeformationGrid init = coarse.build(mesh);
        pt.floor = std::abs(energy.energy(plain.build(mesh).u) - fine_energy.energy(refined.build(fine_mesh).u));
        if (mode == SweepMode::Minimize) {
            try {
                const MinimizeResult r = minimize3d(init, energy, opts.lbfgs);
                pt.energy = r.energy;
                pt.iterations = r.iterations;
            } catch (const OptimizerError& e) {
                pt.energy = e.last_value();
                pt.converged = false;
                pt.iterations = opts.lbfgs.max_iterations;
            }
        } else {
            pt.energy = energy.energy(init.u);
        }
        pt.scaled = pt.energy / std::pow(h, power);
        // Absolute roundoff floor of the energy sum.
        const double roundoff = 1e-24 * (d.mu + std::abs(d.lambda)) * grid.domain().area();
        pt.used_in_fit = pt.energy > 10.0 * pt.floor && pt.energy > roundoff;
        out.points.push_back(pt);
    }
    std::vector<double> fh, fe;
    for (const SweepPoint& p : out.points)
        if (p.used_in_fit) {
            fh.push_back(p.h);
            fe.push_back(p.energy);
        }
    out.floor = fh.size() < 3;
    if (out.floor) {
        fh.clear();
        fe.clear();
        for (const SweepPoint& p : out.points) {
            fh.push_back(p.h);
            fe.push_back(std::max(p.energy, std::numeric_limits<double>::min()));
        }
    }
    const LogFit fit = fit_log_log(fh, fe);
    out.slope = fit.slope;
    out.intercept = fit.intercept;
    out.residual = fit.residual;
    return out;
}

}  // namespace shellscale
