#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "shellscale/immersion.hpp"
#include "shellscale/limit_energy.hpp"
#include "shellscale/metric.hpp"
#include "shellscale/quad_forms.hpp"

namespace shellscale {

// Box mesh of omega x [-h/2, h/2] with nx x ny x nz nodes. x3 is the
// physical thickness coordinate.
struct HexMesh {
    Rect domain;
    int nx = 2;
    int ny = 2;
    int nz = 2;
    double h = 1.0;

    HexMesh(Rect domain, int nx, int ny, int nz, double h);
    std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
    std::size_t elements() const { return static_cast<std::size_t>(nx - 1) * (ny - 1) * (nz - 1); }
    std::size_t node(int i, int j, int k) const { return (static_cast<std::size_t>(k) * ny + j) * nx + i; }
    double dx() const { return (domain.x1_max - domain.x1_min) / (nx - 1); }
    double dy() const { return (domain.x2_max - domain.x2_min) / (ny - 1); }
    double dz() const { return h / (nz - 1); }
    Vec3 point(std::size_t node) const;
    MidplateGrid midplate() const { return MidplateGrid(domain, nx, ny); }
};

struct DeformationGrid {
    HexMesh mesh;
    std::vector<Vec3> u;
};

DeformationGrid identity_deformation(const HexMesh& mesh);

// Thickness-averaged energy (1/h) int W(grad u G^{-1/2}) with Gauss
// quadrature on trilinear hexahedra. Quadrature data are precomputed.
class Energy3d {
public:
    Energy3d(const MetricField& m, const EnergyDensity& d, const HexMesh& mesh, int gauss_order = 2);

    const HexMesh& mesh() const { return mesh_; }
    double energy(const std::vector<Vec3>& u) const;
    double energy_and_gradient(const std::vector<Vec3>& u, std::vector<Vec3>& grad) const;

private:
    template <bool WithGradient>
    double evaluate(const std::vector<Vec3>& u, std::vector<Vec3>* grad) const;

    HexMesh mesh_;
    EnergyDensity density_;
    int points_;                                  // Gauss points per element
    std::vector<Eigen::Matrix<double, 8, 3>> dshape;  // reference gradients per point
    std::vector<double> ref_weight;               // dV weight per point, already divided by h
    std::vector<Mat3> inv_sqrt_g;                 // per element and point
};

double energy3d(const DeformationGrid& u, const MetricField& m, const EnergyDensity& d, int gauss_order = 2);
std::vector<Vec3> gradient3d(const DeformationGrid& u, const MetricField& m, const EnergyDensity& d,
                             int gauss_order = 2);

// u = y0 + sum_{k=1}^{K} x3^k / k! b_k at every node. The mesh's in-plane
// nodes must coincide with the fields' grid.
DeformationGrid ansatz_deformation(const ExpansionFields& f, const HexMesh& mesh, int order);

struct RecoveryCorrectors {
    std::vector<Vec3> v;
    std::vector<Vec3> p;
    std::vector<Vec3> w;
    std::vector<Vec3> q;
    std::vector<Vec3> k0;
    std::vector<Vec3> r;
};

RecoveryCorrectors recovery_correctors(const ExpansionFields& f, const CurvatureMidplateJets& jets,
                                       const PlateGeometry& geo, const StrainSpace& space, const std::vector<Vec3>& v);

// u = Y + h^n V + h^{n+1} w + h^n x3 p + h^{n+1} x3 q + x3^{n+2}/(n+2)! k0 + h^n x3^2/2 r,
// Y = y0 + sum_{k=1}^{n+1} x3^k/k! b_k.
DeformationGrid recovery_deformation(const ExpansionFields& f, const RecoveryCorrectors& c, const HexMesh& mesh);

struct LbfgsOptions {
    int memory = 10;
    int max_iterations = 2000;
    double gradient_tol = 1e-6;  // relative to the initial gradient norm
    double armijo = 1e-4;
    double curvature = 0.9;
};

struct MinimizeResult {
    DeformationGrid u;
    double energy = 0.0;
    double initial_energy = 0.0;
    int iterations = 0;
    int evaluations = 0;
    double gradient_norm = 0.0;
};

// Limited-memory BFGS with a strong Wolfe line search. Six displacement
// components near the midplate centroid are pinned (a 3-2-1 gauge).
// Throws LineSearchFailed or MaxIterations carrying the last iterate.
MinimizeResult minimize3d(const DeformationGrid& init, const Energy3d& energy, const LbfgsOptions& opts = {});

enum class SweepMode { Ansatz, Recovery, Minimize };
std::string to_string(SweepMode mode);
SweepMode sweep_mode_from_string(const std::string& s);

struct SweepPoint {
    double h = 0.0;
    double energy = 0.0;
    double scaled = 0.0;       // energy / h^{2(n+1)}
    double floor = 0.0;        // quadrature floor estimate
    bool used_in_fit = true;
    bool converged = true;     // false when minimization stopped early
    int iterations = 0;
};

struct SweepResult {
    SweepMode mode = SweepMode::Ansatz;
    int n = 0;
    std::vector<SweepPoint> points;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
    bool floor = false;  // fewer than three usable points
};

struct SweepOptions {
    int nz = 5;  // in-plane nodes follow the expansion grid
    int gauss_order = 2;
    LbfgsOptions lbfgs;
    // Displacement for recovery and minimize modes; empty means V = 0.
    std::vector<Vec3> v;
};

// Least-squares fit of log E against log h.
struct LogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
};
LogFit fit_log_log(const std::vector<double>& h, const std::vector<double>& e);

// The floor of each point is |E(u) - E(u')| where u' is the same
// construction on the in-plane refined grid; points with E <= 10 floor are
// left out of the fit.
SweepResult scaling_sweep(const MetricField& m, const EnergyDensity& d, const ExpansionFields& f,
                          const CurvatureMidplateJets& jets, const std::vector<double>& hs, SweepMode mode,
                          const SweepOptions& opts = {});

}  // namespace shellscale
