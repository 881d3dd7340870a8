#pragma once

#include <array>
#include <vector>

#include "shellscale/jet.hpp"
#include "shellscale/linalg.hpp"
#include "shellscale/metric.hpp"

namespace shellscale {

// Christoffel matrices at a point, (Gamma_a)_{bc} = Gamma^b_{ac}.
struct ChristoffelTriple {
    std::array<Mat3, 3> gamma;
};

// Christoffel matrices as jets, together with the metric jets they were
// computed from (one order higher).
struct ChristoffelJets {
    std::array<JetMat3, 3> gamma;
    JetMat3 metric;
};

ChristoffelJets christoffel_jets(const MetricField& m, const Vec3& x, int order, int planar_order = -1);
ChristoffelTriple christoffel(const MetricField& m, const Vec3& x);

// nabla_a F = d_a F + Gamma_a F.
JetMat3 covariant_derivative(const ChristoffelJets& g, const JetMat3& f, int axis);

// Iterated covariant derivatives along x3 of Gamma_3: entry j holds
// nabla_3^{(j)} Gamma_3 for j = 0..count.
std::vector<JetMat3> covariant_gamma3_series(const ChristoffelJets& g, int count);

// Four-index array stored flat with index ((a*3 + b)*3 + c)*3 + d.
template <class T>
struct Tensor4 {
    std::array<T, 81> v;
    T& operator()(int a, int b, int c, int d) { return v[((a * 3 + b) * 3 + c) * 3 + d]; }
    const T& operator()(int a, int b, int c, int d) const { return v[((a * 3 + b) * 3 + c) * 3 + d]; }
};

struct RiemannAtPoint {
    Tensor4<double> mixed;    // R^a_{b,cd}
    Tensor4<double> lowered;  // R_{ab,cd}
};

RiemannAtPoint riemann(const MetricField& m, const Vec3& x);

// Jets of the lowered curvature R_{ab,cd} about x.
Tensor4<Jet> riemann_jets(const MetricField& m, const Vec3& x, int order, int planar_order = -1);

// Normal jets of the curvature on the midplate x3 = 0.
struct CurvatureMidplateJets {
    MidplateGrid grid;
    int order;
    // blocks[k][node] = [d3^k R_{i3,j3}(x', 0)]_{i,j=1,2}
    std::vector<std::vector<Mat2>> blocks;
    // (R_{12,12}, R_{12,13}, R_{12,23}) at (x', 0) per node
    std::vector<Vec3> midplate;
};

CurvatureMidplateJets curvature_midplate_jets(const MetricField& m, const MidplateGrid& grid, int order);

}  // namespace shellscale
