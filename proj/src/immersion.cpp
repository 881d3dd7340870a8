#include "shellscale/immersion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shellscale/errors.hpp"
#include "shellscale/grid_fd.hpp"
#include "shellscale/parallel.hpp"

namespace shellscale {

namespace {

// Christoffel matrices sampled at half-substep spacing: Gamma_1 along every
// grid row and Gamma_2 along every grid column. RK4 needs the start, middle
// and end of each substep, so a cell edge with S substeps uses 2S+1 samples.
struct GammaLines {
    int per_edge = 0;                      // 2 * substeps
    std::vector<std::vector<Mat3>> rows;   // rows[j][q], x1 = x1_min + q * dx / per_edge
    std::vector<std::vector<Mat3>> cols;   // cols[i][q], x2 = x2_min + q * dy / per_edge
};

GammaLines sample_gamma(const MetricField& m, const MidplateGrid& grid, int substeps) {
    GammaLines g;
    g.per_edge = 2 * substeps;
    const int nx = grid.nx(), ny = grid.ny();
    const int row_len = g.per_edge * (nx - 1) + 1;
    const int col_len = g.per_edge * (ny - 1) + 1;
    g.rows.assign(ny, std::vector<Mat3>(row_len));
    g.cols.assign(nx, std::vector<Mat3>(col_len));
    const std::size_t row_total = static_cast<std::size_t>(ny) * row_len;
    const std::size_t col_total = static_cast<std::size_t>(nx) * col_len;
    parallel_for(row_total + col_total, [&](std::size_t idx) {
        if (idx < row_total) {
            const int j = static_cast<int>(idx / row_len), q = static_cast<int>(idx % row_len);
            const double x1 = grid.domain().x1_min + q * grid.dx() / g.per_edge;
            g.rows[j][q] = christoffel(m, Vec3(x1, grid.x2(j), 0.0)).gamma[0];
        } else {
            const std::size_t k = idx - row_total;
            const int i = static_cast<int>(k / col_len), q = static_cast<int>(k % col_len);
            const double x2 = grid.domain().x2_min + q * grid.dy() / g.per_edge;
            g.cols[i][q] = christoffel(m, Vec3(grid.x1(i), x2, 0.0)).gamma[1];
        }
    });
    return g;
}

// Transports B one grid edge along a sampled line, from node `from` to the
// neighbouring node in direction `dir` (+1 or -1).
Mat3 transport_edge(const std::vector<Mat3>& line, int per_edge, double spacing, int from, int dir, Mat3 b) {
    const int substeps = per_edge / 2;
    const double h = dir * spacing / substeps;
    int q = from * per_edge;
    for (int t = 0; t < substeps; ++t) {
        const Mat3& g0 = line[q];
        const Mat3& gm = line[q + dir];
        const Mat3& g1 = line[q + 2 * dir];
        const Mat3 k1 = b * g0;
        const Mat3 k2 = (b + 0.5 * h * k1) * gm;
        const Mat3 k3 = (b + 0.5 * h * k2) * gm;
        const Mat3 k4 = (b + h * k3) * g1;
        b += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        q += 2 * dir;
    }
    return b;
}

// Integral over the cell [a, a+1] of the cubic through four nearby samples.
template <class Get>
Vec3 cell_integral(Get f, int a, int n, double h) {
    if (a == 0) return (9.0 * f(0) + 19.0 * f(1) - 5.0 * f(2) + f(3)) * (h / 24.0);
    if (a == n - 2) return (f(n - 4) - 5.0 * f(n - 3) + 19.0 * f(n - 2) + 9.0 * f(n - 1)) * (h / 24.0);
    return (-f(a - 1) + 13.0 * f(a) + 13.0 * f(a + 1) - f(a + 2)) * (h / 24.0);
}

}  // namespace

FrameField frame_transport(const MetricField& m, const MidplateGrid& grid, const TransportOptions& opts) {
    if (opts.substeps < 1) throw std::invalid_argument("transport needs at least one substep per cell");
    FrameField out{grid, opts.basepoint.value_or(grid.centroid_node()), Mat3::Identity(), {}, 0.0, 0.0};
    if (out.basepoint >= grid.size()) throw std::invalid_argument("basepoint is outside the grid");
    const int nx = grid.nx(), ny = grid.ny();
    const int i0 = grid.i_of(out.basepoint), j0 = grid.j_of(out.basepoint);
    const Vec2 xb = grid.point(out.basepoint);
    out.base_frame = opts.base_frame.value_or(sym_sqrt(m.evaluate(Vec3(xb[0], xb[1], 0.0))));
    if (!(out.base_frame.determinant() > 0.0)) throw SingularFrame("base frame must have positive determinant");

    const GammaLines g = sample_gamma(m, grid, opts.substeps);
    const int pe = g.per_edge;
    out.b0.assign(grid.size(), Mat3::Zero());
    out.b0[out.basepoint] = out.base_frame;
    for (int i = i0 + 1; i < nx; ++i)
        out.b0[grid.node(i, j0)] = transport_edge(g.rows[j0], pe, grid.dx(), i - 1, +1, out.b0[grid.node(i - 1, j0)]);
    for (int i = i0 - 1; i >= 0; --i)
        out.b0[grid.node(i, j0)] = transport_edge(g.rows[j0], pe, grid.dx(), i + 1, -1, out.b0[grid.node(i + 1, j0)]);
    parallel_for(nx, [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        for (int j = j0 + 1; j < ny; ++j)
            out.b0[grid.node(i, j)] = transport_edge(g.cols[i], pe, grid.dy(), j - 1, +1, out.b0[grid.node(i, j - 1)]);
        for (int j = j0 - 1; j >= 0; --j)
            out.b0[grid.node(i, j)] = transport_edge(g.cols[i], pe, grid.dy(), j + 1, -1, out.b0[grid.node(i, j + 1)]);
    });

    // Loop holonomy: both axis paths around each cell must reach the same frame.
    const std::size_t cells = static_cast<std::size_t>(nx - 1) * (ny - 1);
    std::vector<double> defect(cells, 0.0);
    parallel_for(cells, [&](std::size_t c) {
        const int i = static_cast<int>(c % (nx - 1)), j = static_cast<int>(c / (nx - 1));
        const Mat3& start = out.b0[grid.node(i, j)];
        const Mat3 a = transport_edge(g.cols[i + 1], pe, grid.dy(), j, +1,
                                      transport_edge(g.rows[j], pe, grid.dx(), i, +1, start));
        const Mat3 b = transport_edge(g.rows[j + 1], pe, grid.dx(), i, +1,
                                      transport_edge(g.cols[i], pe, grid.dy(), j, +1, start));
        defect[c] = (a - b).norm() / start.norm();
    });
    for (double d : defect) out.holonomy_defect = std::max(out.holonomy_defect, d);

    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Vec2 x = grid.point(n);
        const Mat3 gram = out.b0[n].transpose() * out.b0[n];
        out.metric_defect =
            std::max(out.metric_defect, max_abs(Mat3(gram - m.evaluate_unchecked(Vec3(x[0], x[1], 0.0)))));
    }
    if (out.holonomy_defect > opts.frame_tol)
        throw IntegrabilityViolation("frame transport around a grid cell does not close; the midplate metric is not flat",
                                     out.holonomy_defect);
    return out;
}

Immersion midplate_immersion(const FrameField& frame, double disc_tol) {
    const MidplateGrid& grid = frame.grid;
    const int nx = grid.nx(), ny = grid.ny();
    if (nx < 5 || ny < 5) throw std::invalid_argument("immersion needs at least 5 nodes per axis");
    const int i0 = grid.i_of(frame.basepoint), j0 = grid.j_of(frame.basepoint);
    Immersion out;
    out.y0.assign(grid.size(), Vec3::Zero());

    auto row_col0 = [&](int i) -> Vec3 { return frame.b0[grid.node(i, j0)].col(0); };
    for (int i = i0 + 1; i < nx; ++i)
        out.y0[grid.node(i, j0)] = out.y0[grid.node(i - 1, j0)] + cell_integral(row_col0, i - 1, nx, grid.dx());
    for (int i = i0 - 1; i >= 0; --i)
        out.y0[grid.node(i, j0)] = out.y0[grid.node(i + 1, j0)] - cell_integral(row_col0, i, nx, grid.dx());
    for (int i = 0; i < nx; ++i) {
        auto col_col1 = [&](int j) -> Vec3 { return frame.b0[grid.node(i, j)].col(1); };
        for (int j = j0 + 1; j < ny; ++j)
            out.y0[grid.node(i, j)] = out.y0[grid.node(i, j - 1)] + cell_integral(col_col1, j - 1, ny, grid.dy());
        for (int j = j0 - 1; j >= 0; --j)
            out.y0[grid.node(i, j)] = out.y0[grid.node(i, j + 1)] - cell_integral(col_col1, j, ny, grid.dy());
    }

    std::vector<Vec3> e1(grid.size()), e2(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        e1[n] = frame.b0[n].col(0);
        e2[n] = frame.b0[n].col(1);
    }
    const std::vector<Vec3> d1e2 = grid_derivative(grid, e2, 0);
    const std::vector<Vec3> d2e1 = grid_derivative(grid, e1, 1);
    for (std::size_t n = 0; n < grid.size(); ++n)
        if (grid.is_interior(n)) out.curl_defect = std::max(out.curl_defect, (d1e2[n] - d2e1[n]).cwiseAbs().maxCoeff());
    if (out.curl_defect > disc_tol)
        throw IntegrabilityViolation("frame columns are not the gradient of an immersion", out.curl_defect);
    return out;
}

ExpansionFields expansion_fields(const MetricField& m, const FrameField& frame, const Immersion& imm, int n) {
    if (n < 1) throw std::invalid_argument("expansion level must be at least 1");
    const MidplateGrid& grid = frame.grid;
    const std::size_t nn = grid.size();
    ExpansionFields f;
    f.grid = grid;
    f.order = n;
    f.basepoint = frame.basepoint;
    f.base_frame = frame.base_frame;
    f.holonomy_defect = frame.holonomy_defect;
    f.metric_defect = frame.metric_defect;
    f.curl_defect = imm.curl_defect;
    f.b.assign(n + 3, std::vector<Vec3>(nn, Vec3::Zero()));
    f.B.assign(n + 2, std::vector<Mat3>(nn, Mat3::Zero()));
    f.dG.assign(n + 2, std::vector<Mat3>(nn, Mat3::Zero()));
    f.b[0] = imm.y0;
    f.B[0] = frame.b0;
    // predicted[k][node] = B0 nabla_i nabla_3^{(k-1)} Gamma_3 e3 (columns i = 1, 2) for k = 1..n
    std::vector<std::vector<Mat32>> predicted(n + 1, std::vector<Mat32>(nn, Mat32::Zero()));

    parallel_for(nn, [&](std::size_t node) {
        const Vec2 x = grid.point(node);
        const ChristoffelJets cj = christoffel_jets(m, Vec3(x[0], x[1], 0.0), n + 1, 1);
        const std::vector<JetMat3> series = covariant_gamma3_series(cj, n);
        const Mat3& b0 = frame.b0[node];
        f.b[1][node] = b0.col(2);
        for (int k = 1; k <= n + 1; ++k) {
            f.B[k][node] = b0 * series[k - 1].value();
            f.b[k + 1][node] = f.B[k][node].col(2);
        }
        for (int k = 1; k <= n; ++k)
            for (int i = 0; i < 2; ++i)
                predicted[k][node].col(i) = b0 * covariant_derivative(cj, series[k - 1], i).value().col(2);
        for (int mm = 0; mm <= n + 1; ++mm) f.dG[mm][node] = cj.metric.d3(mm);
    });

    // Column consistency: grid gradients of b_k against the recursion. At
    // k = n+1 only the covariant prediction applies; the first columns of
    // B_{n+1} differ from grad b_{n+1} by the curvature.
    for (int k = 1; k <= n + 1; ++k) {
        const std::vector<Mat32> grad = grid_gradient(grid, f.b[k]);
        for (std::size_t node = 0; node < nn; ++node) {
            if (!grid.is_interior(node)) continue;
            if (k <= n) f.column_defect = std::max(f.column_defect, max_abs(Mat32(grad[node] - f.B[k][node].leftCols<2>())));
            if (k >= 2) f.column_defect = std::max(f.column_defect, max_abs(Mat32(grad[node] - predicted[k - 1][node])));
        }
    }
    return f;
}

ExpansionFields build_expansion(const MetricField& m, const MidplateGrid& grid, int n, const TransportOptions& opts,
                                double disc_tol) {
    const FrameField frame = frame_transport(m, grid, opts);
    const Immersion imm = midplate_immersion(frame, disc_tol);
    return expansion_fields(m, frame, imm, n);
}

std::vector<std::vector<Mat32>> expansion_gradients(const ExpansionFields& f) {
    std::vector<std::vector<Mat32>> out;
    out.reserve(f.order + 2);
    for (int k = 0; k <= f.order + 1; ++k) out.push_back(grid_gradient(f.grid, f.b[k]));
    return out;
}

std::vector<Mat3> expansion_residual(const ExpansionFields& f, int m) {
    if (m < 0 || m > f.order + 1)
        throw InsufficientJetOrder("expansion residual of order " + std::to_string(m) + " needs fields of level " +
                                   std::to_string(m - 1) + " or more");
    const std::vector<std::vector<Mat32>> grads = expansion_gradients(f);
    const std::size_t nn = f.grid.size();
    std::vector<Mat3> out(nn);
    for (std::size_t node = 0; node < nn; ++node) {
        auto bt = [&](int k) {
            Mat3 b;
            b.leftCols<2>() = grads[k][node];
            b.col(2) = f.b[k + 1][node];
            return b;
        };
        Mat3 r = -f.dG[m][node];
        for (int k = 0; k <= m; ++k) r += binomial(m, k) * (bt(k).transpose() * bt(m - k));
        out[node] = r;
    }
    return out;
}

std::vector<Mat2> riem_rhs(const ExpansionFields& f) {
    const int n = f.order;
    const std::vector<std::vector<Mat32>> grads = expansion_gradients(f);
    std::vector<Mat2> out(f.grid.size());
    for (std::size_t node = 0; node < out.size(); ++node) {
        const Mat2 cross = grads[0][node].transpose() * grads[n + 1][node];
        Mat2 r = cross + cross.transpose();
        for (int k = 1; k <= n; ++k) r += binomial(n + 1, k) * (grads[k][node].transpose() * grads[n + 1 - k][node]);
        r -= f.dG[n + 1][node].topLeftCorner<2, 2>();
        out[node] = r;
    }
    return out;
}

double riem_identity_check(const ExpansionFields& f, const CurvatureMidplateJets& jets) {
    if (!(jets.grid == f.grid)) throw std::invalid_argument("curvature jets and expansion fields live on different grids");
    if (jets.order < f.order - 1)
        throw InsufficientJetOrder("curvature identity at level " + std::to_string(f.order) + " needs jets of order " +
                                   std::to_string(f.order - 1));
    const std::vector<Mat2> rhs = riem_rhs(f);
    double worst = 0.0;
    for (std::size_t node = 0; node < rhs.size(); ++node) {
        if (!f.grid.is_interior(node)) continue;
        worst = std::max(worst, max_abs(Mat2(2.0 * jets.blocks[f.order - 1][node] - rhs[node])));
    }
    return worst;
}

}  // namespace shellscale
