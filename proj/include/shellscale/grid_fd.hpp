#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "shellscale/metric.hpp"

namespace shellscale {

// Five-point, fourth-order first-derivative stencil for position i on a line
// of n equally spaced samples: centered in the interior, one-sided within
// two points of either end. Weights are for unit spacing.
struct Stencil5 {
    int start;
    std::array<double, 5> w;
};

inline Stencil5 fd_stencil(int i, int n) {
    if (n < 5) throw std::invalid_argument("fourth-order differences need at least 5 samples per axis");
    constexpr double s = 1.0 / 12.0;
    if (i == 0) return {0, {-25 * s, 48 * s, -36 * s, 16 * s, -3 * s}};
    if (i == 1) return {0, {-3 * s, -10 * s, 18 * s, -6 * s, 1 * s}};
    if (i == n - 2) return {n - 5, {-1 * s, 6 * s, -18 * s, 10 * s, 3 * s}};
    if (i == n - 1) return {n - 5, {3 * s, -16 * s, 36 * s, -48 * s, 25 * s}};
    return {i - 2, {1 * s, -8 * s, 0.0, 8 * s, -1 * s}};
}

// Derivative of a nodal field along x1 (axis 0) or x2 (axis 1).
template <class T>
std::vector<T> grid_derivative(const MidplateGrid& grid, const std::vector<T>& f, int axis) {
    std::vector<T> out(f.size());
    const int nx = grid.nx(), ny = grid.ny();
    const double inv = 1.0 / (axis == 0 ? grid.dx() : grid.dy());
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Stencil5 st = axis == 0 ? fd_stencil(i, nx) : fd_stencil(j, ny);
            T acc = f[grid.node(i, j)] * 0.0;
            for (int q = 0; q < 5; ++q) {
                if (st.w[q] == 0.0) continue;
                const std::size_t nd = axis == 0 ? grid.node(st.start + q, j) : grid.node(i, st.start + q);
                acc += st.w[q] * f[nd];
            }
            out[grid.node(i, j)] = acc * inv;
        }
    }
    return out;
}

// Gradient [d1 f, d2 f] of a vector field as a 3x2 matrix per node.
inline std::vector<Eigen::Matrix<double, 3, 2>> grid_gradient(const MidplateGrid& grid, const std::vector<Vec3>& f) {
    const std::vector<Vec3> d1 = grid_derivative(grid, f, 0);
    const std::vector<Vec3> d2 = grid_derivative(grid, f, 1);
    std::vector<Eigen::Matrix<double, 3, 2>> out(f.size());
    for (std::size_t n = 0; n < f.size(); ++n) {
        out[n].col(0) = d1[n];
        out[n].col(1) = d2[n];
    }
    return out;
}

// Nodal trapezoid weights of the grid (they sum to the rectangle area).
inline std::vector<double> trapezoid_weights(const MidplateGrid& grid) {
    std::vector<double> w(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const int i = grid.i_of(n), j = grid.j_of(n);
        const double wx = (i == 0 || i == grid.nx() - 1) ? 0.5 : 1.0;
        const double wy = (j == 0 || j == grid.ny() - 1) ? 0.5 : 1.0;
        w[n] = wx * wy * grid.dx() * grid.dy();
    }
    return w;
}

}  // namespace shellscale
