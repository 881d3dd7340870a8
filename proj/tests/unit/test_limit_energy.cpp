#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "shellscale/errors.hpp"
#include "shellscale/limit_energy.hpp"
#include "test_support.hpp"

using namespace shellscale;

namespace {

MetricField conformal_power(int p) {
    return MetricField::conformal(
        parse_expression("x3^" + std::to_string(p) + "/" + std::to_string(static_cast<long>(factorial(p)))), Rect{});
}

struct Setup {
    MetricField metric;
    ExpansionFields fields;
    CurvatureMidplateJets jets;
    PlateGeometry geo;
    StrainSpace space;

    Setup(MetricField m, int n, int nodes, EnergyDensity d = {})
        : metric(std::move(m)),
          fields(build_expansion(metric, MidplateGrid(Rect{}, nodes, nodes), n)),
          jets(curvature_midplate_jets(metric, fields.grid, std::max(n - 1, 0))),
          geo(fields, d),
          space(fields, metric, d) {}
};

template <class F>
std::vector<Vec3> sample(const MidplateGrid& grid, F f) {
    std::vector<Vec3> out(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) out[n] = f(grid.point(n));
    return out;
}

double max_diff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double e = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) e = std::max(e, (a[n] - b[n]).cwiseAbs().maxCoeff());
    return e;
}

Mat3 skew(const Vec3& w) {
    Mat3 s;
    s << 0, -w[2], w[1], w[2], 0, -w[0], -w[1], w[0], 0;
    return s;
}

// (1/2) min over s, b of the integral over [-1/2, 1/2] of (s + b t - t^{n+1}/(n+1)!)^2,
// by least squares on a fine midpoint rule.
double scalar_residual(int n) {
    const int m = 20000;
    Eigen::MatrixXd a(m, 2);
    Eigen::VectorXd y(m);
    const double w = std::sqrt(1.0 / m);
    for (int k = 0; k < m; ++k) {
        const double t = -0.5 + (k + 0.5) / m;
        a(k, 0) = w;
        a(k, 1) = w * t;
        y[k] = w * std::pow(t, n + 1) / factorial(n + 1);
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
    return 0.5 * (a * c - y).squaredNorm();
}

}  // namespace

TEST_CASE("induced p for out-of-plane, constant and rigid displacements") {
    const Setup flat(MetricField::constant(Mat3::Identity(), Rect{}), 1, 17);
    const MidplateGrid& grid = flat.fields.grid;
    const auto v = sample(grid, [](const Vec2& x) { return Vec3(0, 0, x[0] * x[0] - 0.5 * x[0] * x[1] + x[1] * x[1] * x[1]); });
    const LimitDisplacement d = induced_p(flat.geo, v);
    const auto expected = sample(grid, [](const Vec2& x) {
        return Vec3(-(2 * x[0] - 0.5 * x[1]), -(-0.5 * x[0] + 3 * x[1] * x[1]), 0.0);
    });
    CHECK(max_diff(d.p, expected) <= 1e-10);
    CHECK(d.constraint_defect <= 1e-12);
    CHECK(d.p_defect <= 1e-10);
    // Bending tensor equals -hess v.
    const std::vector<Mat2> bend = bending_tensor(flat.geo, d);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Vec2 x = grid.point(n);
        Mat2 hess;
        hess << 2.0, -0.5, -0.5, 6.0 * x[1];
        CHECK((bend[n] + hess).norm() <= 1e-9);
    }

    const Setup bent(testsupport::bent_pullback_metric(), 2, 17);
    const LimitDisplacement c = induced_p(bent.geo, std::vector<Vec3>(bent.fields.grid.size(), Vec3(1, -2, 3)));
    for (const Vec3& p : c.p) CHECK(p.norm() <= 1e-12);

    const Mat3 s = skew(Vec3(0.3, -0.7, 0.4));
    std::vector<Vec3> rigid(bent.fields.grid.size());
    for (std::size_t n = 0; n < rigid.size(); ++n) rigid[n] = s * bent.fields.y0()[n] + Vec3(0.1, 0.2, -0.3);
    const LimitDisplacement r = induced_p(bent.geo, rigid);
    for (std::size_t n = 0; n < rigid.size(); ++n) CHECK((r.p[n] - s * bent.fields.b[1][n]).norm() <= 1e-12);
    CHECK(r.constraint_defect <= 1e-12);
    for (const Mat2& b : bending_tensor(bent.geo, r)) CHECK(b.norm() <= 1e-10);
    for (const Mat2& b : bending_tensor(bent.geo, induced_p(bent.geo, std::vector<Vec3>(rigid.size(), Vec3::Zero()))))
        CHECK(b.norm() == 0.0);
}

TEST_CASE("singular frames are rejected") {
    ExpansionFields f = build_expansion(MetricField::constant(Mat3::Identity(), Rect{}), MidplateGrid(Rect{}, 9, 9), 1);
    f.b[1][40] = Vec3(1, 0, 0);
    CHECK_THROWS_AS(PlateGeometry(f, EnergyDensity{}), SingularFrame);
}

TEST_CASE("strain projection: members of the space, idempotence and orthogonality") {
    const Setup bent(testsupport::bent_pullback_metric(), 2, 17, EnergyDensity{1.0, 0.7});
    const MidplateGrid& grid = bent.fields.grid;
    const auto w = sample(grid, [](const Vec2& x) {
        return Vec3(std::sin(x[0] + 2 * x[1]), x[0] * x[1] - std::cos(x[1]), std::exp(0.3 * x[0]));
    });
    const std::vector<Vec3> member = bent.space.strain_gp(w);
    const Projection pm = bent.space.project_gp(member);
    CHECK(pm.perp_norm2 <= 1e-16 * pm.norm2);
    CHECK(std::abs(pm.space_norm2 - pm.norm2) <= 1e-8 * pm.norm2);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> field(bent.space.gauss_points());
    for (Vec3& s : field) s = Vec3(u(rng), u(rng), u(rng));
    const Projection p = bent.space.project_gp(field);
    CHECK(p.space_norm2 > 0.0);
    CHECK(p.perp_norm2 > 0.0);
    CHECK(std::abs(p.cross) <= 1e-8 * p.norm2);
    CHECK(std::abs(p.norm2 - p.space_norm2 - p.perp_norm2) <= 1e-8 * p.norm2);
    const Projection again = bent.space.project_gp(p.space_gp);
    double diff = 0.0, size = 0.0;
    for (std::size_t q = 0; q < field.size(); ++q) {
        diff = std::max(diff, (again.space_gp[q] - p.space_gp[q]).cwiseAbs().maxCoeff());
        size = std::max(size, p.space_gp[q].cwiseAbs().maxCoeff());
    }
    CHECK(diff <= 1e-7 * size);

    const Projection zero = bent.space.project_gp(std::vector<Vec3>(field.size(), Vec3::Zero()));
    CHECK(zero.norm2 == 0.0);
    for (const Vec3& s : zero.space_gp) CHECK(s.norm() == 0.0);
}

TEST_CASE("compatible strains on a flat midplate are recovered under refinement") {
    // F = sym grad w with w = (sin(x1 x2), cos(x1 + x2)) satisfies curl^T curl F = 0.
    auto strain = [](const Vec2& x) {
        const double f11 = x[1] * std::cos(x[0] * x[1]);
        const double f22 = -std::sin(x[0] + x[1]);
        const double f12 = 0.5 * (x[0] * std::cos(x[0] * x[1]) - std::sin(x[0] + x[1]));
        Mat2 f;
        f << f11, f12, f12, f22;
        return f;
    };
    double previous = 1.0;
    for (int nodes : {9, 17, 33}) {
        const Setup flat(MetricField::constant(Mat3::Identity(), Rect{}), 1, nodes);
        std::vector<Mat2> f(flat.fields.grid.size());
        for (std::size_t n = 0; n < f.size(); ++n) f[n] = strain(flat.fields.grid.point(n));
        const Projection p = flat.space.project(f);
        const double ratio = p.perp_norm2 / p.norm2;
        if (nodes > 9) CHECK(3.0 * ratio <= previous);
        if (nodes == 33) CHECK(ratio <= 1e-4);
        previous = ratio;
    }
}

TEST_CASE("limit energy of an out-of-plane quadratic on the Euclidean plate") {
    const Setup flat(MetricField::constant(Mat3::Identity(), Rect{}), 1, 65);
    const auto v = sample(flat.fields.grid, [](const Vec2& x) { return Vec3(0, 0, x[0] * x[0]); });
    const LimitEnergyResult r = limit_energy_eval(flat.fields, flat.jets, flat.geo, flat.space, v);
    // (1/24) * 2 mu |diag(2, 0)|^2 over the unit square.
    CHECK(r.total == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(r.perp == 0.0);
    CHECK(r.space == 0.0);
    CHECK(r.bending_asymmetry <= 1e-10);
}

TEST_CASE("conformal cubic factor: value, split and two evaluation routes") {
    const Setup conf(conformal_power(3), 2, 17);
    const std::vector<Vec3> zero(conf.fields.grid.size(), Vec3::Zero());
    const LimitEnergyResult r = limit_energy_eval(conf.fields, conf.jets, conf.geo, conf.space, zero);
    for (const Mat2& c : r.curvature) CHECK((c + Mat2::Identity()).norm() <= 1e-12);
    // Scalar thickness problem: (1/2) int (s + b t + t^3/6 R)^2 with R = -Id in
    // the space and Q2(Id) = 4; the bending part keeps b = 0.
    const double m2 = 1.0 / 12.0, m4 = 1.0 / 80.0, m6 = 1.0 / 448.0;
    const double alpha = (m4 / 6.0) / m2;  // coefficient of R in the bending term
    CHECK(r.bending == doctest::Approx(4.0 * alpha * alpha / 24.0).epsilon(1e-10));
    CHECK(r.perp <= 1e-18);
    const double full = 4.0 * 0.5 * m6 / 36.0;
    CHECK(r.total == doctest::Approx(full).epsilon(1e-9));
    CHECK(r.total == doctest::Approx(1.0 / 8064.0).epsilon(1e-9));
    CHECK(limit_energy_thickness_integral(conf.fields, conf.geo, conf.space, zero) ==
          doctest::Approx(r.total).epsilon(1e-9));
}

TEST_CASE("two evaluation routes agree on a non-conformal metric") {
    const Setup bent(testsupport::bent_pullback_metric(), 2, 33, EnergyDensity{1.0, 0.5});
    const std::vector<Vec3> zero(bent.fields.grid.size(), Vec3::Zero());
    const LimitEnergyResult r0 = limit_energy_eval(bent.fields, bent.jets, bent.geo, bent.space, zero);
    CHECK(r0.total > 0.0);
    CHECK(r0.bending >= 0.0);
    CHECK(r0.perp >= 0.0);
    CHECK(r0.space >= 0.0);
    CHECK(r0.total == doctest::Approx(r0.bending + r0.perp + r0.space).epsilon(1e-14));
    CHECK(limit_energy_thickness_integral(bent.fields, bent.geo, bent.space, zero) ==
          doctest::Approx(r0.total).epsilon(1e-3));

    const LimitMinimum m = minimize_limit_energy(bent.fields, bent.jets, bent.geo, bent.space);
    CHECK(m.value <= r0.total);
    CHECK(m.detail.constraint_defect <= 1e-3);
    CHECK(m.detail.bending_asymmetry <= 1e-3);
    CHECK(limit_energy_thickness_integral(bent.fields, bent.geo, bent.space, m.v) ==
          doctest::Approx(m.value).epsilon(1e-3));

    // Rigid displacements change nothing.
    const Mat3 s = skew(Vec3(-0.2, 0.5, 0.9));
    std::vector<Vec3> rigid(zero.size());
    for (std::size_t n = 0; n < rigid.size(); ++n) rigid[n] = s * bent.fields.y0()[n] + Vec3(1, 2, 3);
    const LimitEnergyResult rr = limit_energy_eval(bent.fields, bent.jets, bent.geo, bent.space, rigid);
    CHECK(rr.total == doctest::Approx(r0.total).epsilon(1e-10));
    CHECK(std::abs(rr.bending - r0.bending) <= 1e-10 * r0.total);
}

TEST_CASE("kernel: flat metrics give zero energy on rigid displacements") {
    const Setup pb(testsupport::pullback_metric(), 1, 17);
    const Mat3 s = skew(Vec3(0.4, 0.1, -0.6));
    std::vector<Vec3> rigid(pb.fields.grid.size());
    for (std::size_t n = 0; n < rigid.size(); ++n) rigid[n] = s * pb.fields.y0()[n] + Vec3(-1, 0, 2);
    const LimitEnergyResult r = limit_energy_eval(pb.fields, pb.jets, pb.geo, pb.space, rigid);
    CHECK(r.total <= 1e-12);
}

TEST_CASE("minimization over first-order isometries") {
    {
        const Setup conf(conformal_power(3), 2, 17);
        const LimitMinimum m = minimize_limit_energy(conf.fields, conf.jets, conf.geo, conf.space);
        const double gamma_term = 4.0 * scalar_residual(2);
        CHECK(gamma_term == doctest::Approx(1.984126984e-5).epsilon(1e-6));
        CHECK(m.value == doctest::Approx(gamma_term).epsilon(1e-6));
        CHECK(m.detail.bending <= 1e-8 * m.value);
        // The minimizer is an out-of-plane paraboloid: V3 = -alpha |x - x_c|^2 / 2 up to affine terms.
        const double alpha = (1.0 / 80.0 / 6.0) * 12.0;
        const MidplateGrid& g = conf.fields.grid;
        const std::size_t c = g.centroid_node();
        const std::size_t e = g.node(g.nx() - 1, g.j_of(c));
        const std::size_t w = g.node(0, g.j_of(c));
        const double second = (m.v[e][2] + m.v[w][2] - 2.0 * m.v[c][2]) / std::pow(g.x1(g.nx() - 1) - g.x1(g.i_of(c)), 2);
        CHECK(second == doctest::Approx(-alpha).epsilon(1e-6));
    }
    {
        const Setup flat(MetricField::constant(Mat3::Identity(), Rect{}), 1, 17);
        const LimitMinimum m = minimize_limit_energy(flat.fields, flat.jets, flat.geo, flat.space);
        CHECK(m.value <= 1e-20);
        for (const Vec3& v : m.v) CHECK(v.norm() <= 1e-12);
    }
}
