#include "shellscale/tensor_calc.hpp"

#include <stdexcept>

#include "shellscale/errors.hpp"
#include "shellscale/parallel.hpp"

namespace shellscale {

namespace {

std::array<JetMat3, 3> christoffel_from_metric(const JetMat3& g) {
    const std::array<JetMat3, 3> dg = {g.partial(0), g.partial(1), g.partial(2)};
    const JetMat3 ginv = inverse(g);
    std::array<JetMat3, 3> gamma;
    for (int a = 0; a < 3; ++a) {
        // t(m, c) = d_a G_{mc} + d_c G_{ma} - d_m G_{ac}
        JetMat3 t;
        for (int m = 0; m < 3; ++m)
            for (int c = 0; c < 3; ++c) t(m, c) = dg[a](m, c) + dg[c](m, a) - dg[m](a, c);
        gamma[a] = 0.5 * (ginv * t);
    }
    return gamma;
}

}  // namespace

ChristoffelJets christoffel_jets(const MetricField& m, const Vec3& x, int order, int planar_order) {
    if (order < 0) throw std::invalid_argument("Christoffel jet order must be non-negative");
    const int planar = planar_order < 0 ? order : planar_order;
    ChristoffelJets out;
    out.metric = m.jet(x, order + 1, planar + 1);
    out.gamma = christoffel_from_metric(out.metric);
    return out;
}

ChristoffelTriple christoffel(const MetricField& m, const Vec3& x) {
    const ChristoffelJets j = christoffel_jets(m, x, 0, 0);
    return {{j.gamma[0].value(), j.gamma[1].value(), j.gamma[2].value()}};
}

JetMat3 covariant_derivative(const ChristoffelJets& g, const JetMat3& f, int axis) {
    if (f.order() < 1) throw InsufficientJetOrder("covariant derivative needs a jet of order at least 1");
    return f.partial(axis) + g.gamma[axis] * f;
}

std::vector<JetMat3> covariant_gamma3_series(const ChristoffelJets& g, int count) {
    if (g.gamma[2].order() < count)
        throw InsufficientJetOrder("Christoffel jets too shallow for the requested covariant series");
    std::vector<JetMat3> out;
    out.reserve(count + 1);
    out.push_back(g.gamma[2]);
    for (int j = 0; j < count; ++j) out.push_back(covariant_derivative(g, out.back(), 2));
    return out;
}

namespace {

// Mixed curvature matrices R_{cd} (entry (a, b) = R^a_{b,cd}) for one (c, d).
JetMat3 curvature_matrix(const std::array<JetMat3, 3>& gamma, int c, int d) {
    return gamma[d].partial(c) - gamma[c].partial(d) + gamma[c] * gamma[d] - gamma[d] * gamma[c];
}

}  // namespace

Tensor4<Jet> riemann_jets(const MetricField& m, const Vec3& x, int order, int planar_order) {
    const int planar = planar_order < 0 ? order : planar_order;
    const ChristoffelJets cj = christoffel_jets(m, x, order + 1, planar + 1);
    Tensor4<Jet> r;
    for (int c = 0; c < 3; ++c) {
        for (int d = c + 1; d < 3; ++d) {
            const JetMat3 rl = cj.metric * curvature_matrix(cj.gamma, c, d);
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    const Jet v = rl(a, b).truncated(order, planar);
                    r(a, b, c, d) = v;
                    r(a, b, d, c) = -v;
                }
            }
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) r(a, b, c, c) = Jet(0.0, order, planar);
    }
    return r;
}

RiemannAtPoint riemann(const MetricField& m, const Vec3& x) {
    const ChristoffelJets cj = christoffel_jets(m, x, 1, 1);
    const Mat3 g = cj.metric.value();
    RiemannAtPoint out;
    out.mixed.v.fill(0.0);
    out.lowered.v.fill(0.0);
    for (int c = 0; c < 3; ++c) {
        for (int d = c + 1; d < 3; ++d) {
            const Mat3 mixed = curvature_matrix(cj.gamma, c, d).value();
            const Mat3 lowered = g * mixed;
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    out.mixed(a, b, c, d) = mixed(a, b);
                    out.mixed(a, b, d, c) = -mixed(a, b);
                    out.lowered(a, b, c, d) = lowered(a, b);
                    out.lowered(a, b, d, c) = -lowered(a, b);
                }
            }
        }
    }
    return out;
}

CurvatureMidplateJets curvature_midplate_jets(const MetricField& m, const MidplateGrid& grid, int order) {
    if (order < 0) throw std::invalid_argument("curvature jet order must be non-negative");
    CurvatureMidplateJets out{grid, order, {}, {}};
    out.blocks.assign(order + 1, std::vector<Mat2>(grid.size(), Mat2::Zero()));
    out.midplate.assign(grid.size(), Vec3::Zero());
    parallel_for(grid.size(), [&](std::size_t node) {
        const Vec2 xp = grid.point(node);
        // In-plane order 0 suffices: only x3-derivatives at the node are needed.
        const Tensor4<Jet> r = riemann_jets(m, Vec3(xp[0], xp[1], 0.0), order, 0);
        for (int k = 0; k <= order; ++k) {
            Mat2 b;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) b(i, j) = r(i, 2, j, 2).d3(k);
            out.blocks[k][node] = b;
        }
        out.midplate[node] = Vec3(r(0, 1, 0, 1).value(), r(0, 1, 0, 2).value(), r(0, 1, 1, 2).value());
    });
    return out;
}

}  // namespace shellscale
