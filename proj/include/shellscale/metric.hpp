#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "shellscale/expr.hpp"
#include "shellscale/jet.hpp"
#include "shellscale/linalg.hpp"

namespace shellscale {

// Axis-aligned midplate rectangle.
struct Rect {
    double x1_min = 0.0;
    double x1_max = 1.0;
    double x2_min = 0.0;
    double x2_max = 1.0;

    double area() const { return (x1_max - x1_min) * (x2_max - x2_min); }
    friend bool operator==(const Rect&, const Rect&) = default;
};

// Uniform tensor grid on the midplate; node (i, j) has index j*nx + i.
class MidplateGrid {
public:
    MidplateGrid(Rect domain, int nx, int ny);

    const Rect& domain() const { return domain_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    double x1(int i) const { return domain_.x1_min + i * dx_; }
    double x2(int j) const { return domain_.x2_min + j * dy_; }
    std::size_t node(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
    int i_of(std::size_t node) const { return static_cast<int>(node % nx_); }
    int j_of(std::size_t node) const { return static_cast<int>(node / nx_); }
    Vec2 point(std::size_t node) const { return {x1(i_of(node)), x2(j_of(node))}; }
    // Node closest to the centroid of the rectangle (ties go to the lower index).
    std::size_t centroid_node() const;
    // Nodes far enough from the boundary for the centered five-point stencil.
    bool is_interior(std::size_t node) const;

    friend bool operator==(const MidplateGrid& a, const MidplateGrid& b) {
        return a.domain_ == b.domain_ && a.nx_ == b.nx_ && a.ny_ == b.ny_;
    }

private:
    Rect domain_;
    int nx_;
    int ny_;
    double dx_;
    double dy_;
};

enum class MetricFamily { General, Conformal, Constant };

// Reference metric G(x', x3) on the unit-thickness plate, given either by
// six expressions for the upper triangle or by a conformal factor exp(2*phi).
class MetricField {
public:
    // Upper-triangle order: G11, G12, G13, G22, G23, G33.
    static MetricField general(const std::array<Expression, 6>& upper, Rect domain, double spd_floor = 1e-10);
    static MetricField conformal(const Expression& phi, Rect domain, double spd_floor = 1e-10);
    static MetricField constant(const Mat3& g, Rect domain, double spd_floor = 1e-10);

    MetricFamily family() const { return family_; }
    const Rect& domain() const { return domain_; }
    double spd_floor() const { return spd_floor_; }
    const Expression& phi() const { return phi_; }
    // Expression for the (r, c) entry; for the conformal family this is the
    // explicit exp(2*phi) or 0.
    Expression entry(int r, int c) const;
    const std::array<Expression, 6>& upper() const { return upper_; }

    // Metric value; throws NotPositiveDefinite when the smallest eigenvalue
    // does not exceed the floor.
    Mat3 evaluate(const Vec3& x) const;
    Mat3 evaluate_unchecked(const Vec3& x) const;
    Mat3 inverse(const Vec3& x) const;
    // Symmetric positive root of the inverse metric.
    Mat3 inverse_sqrt(const Vec3& x) const;
    JetMat3 jet(const Vec3& x, int order, int planar_order = -1) const;

    // Metric multiplied by a positive constant.
    MetricField scaled(double c) const;

    friend bool operator==(const MetricField& a, const MetricField& b);

private:
    MetricFamily family_ = MetricFamily::General;
    std::array<Expression, 6> upper_;
    Expression phi_;
    Rect domain_;
    double spd_floor_ = 1e-10;
};

struct SpdReport {
    bool ok = true;
    double min_eigenvalue = 0.0;
    Vec3 witness = Vec3::Zero();
};

// Samples the metric on grid nodes at `layers` evenly spaced thickness
// levels spanning [-1/2, 1/2].
SpdReport check_spd(const MetricField& metric, const MidplateGrid& grid, int layers);

}  // namespace shellscale
