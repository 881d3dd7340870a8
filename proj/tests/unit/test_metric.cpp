#include <cmath>
#include <random>

#include "doctest.h"
#include "shellscale/errors.hpp"
#include "shellscale/metric.hpp"
#include "test_support.hpp"

using namespace shellscale;

TEST_CASE("closed-form metric values") {
    const MetricField id = MetricField::constant(Mat3::Identity(), Rect{});
    CHECK(id.evaluate(Vec3(0.3, 0.1, -0.2)) == Mat3::Identity());

    const MetricField m = MetricField::conformal(parse_expression("x3^2/2"), Rect{});
    CHECK(max_abs(m.evaluate(Vec3::Zero()) - Mat3::Identity()) == 0.0);
    const Mat3 g = m.evaluate(Vec3(0.0, 0.0, 0.5));
    CHECK(g(0, 0) == doctest::Approx(1.2840254166877414).epsilon(1e-15));
    CHECK(g(0, 1) == 0.0);
}

TEST_CASE("metric jets of conformal factors") {
    const MetricField a = MetricField::conformal(parse_expression("x3^2/2"), Rect{});
    CHECK(a.jet(Vec3::Zero(), 3)(0, 0).d3(2) == doctest::Approx(2.0).epsilon(1e-15));
    const MetricField b = MetricField::conformal(parse_expression("x3^3/6"), Rect{});
    const JetMat3 j = b.jet(Vec3::Zero(), 4);
    CHECK(j(1, 1).d3(3) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(j(0, 1).d3(3) == 0.0);
    const JetMat3 idj = MetricField::constant(Mat3::Identity(), Rect{}).jet(Vec3(0.2, 0.3, 0.1), 3);
    for (std::size_t i = 1; i < idj(0, 0).coefficients().size(); ++i) CHECK(idj(0, 0).coefficients()[i] == 0.0);
    CHECK_THROWS_AS(MetricField::conformal(parse_expression("x1*x3"), Rect{}), std::invalid_argument);
}

TEST_CASE("inverse and inverse square root") {
    Mat3 d = Mat3::Identity();
    d(0, 0) = 4.0;
    const MetricField m = MetricField::constant(d, Rect{});
    const Mat3 r = m.inverse_sqrt(Vec3::Zero());
    CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r(1, 1) == doctest::Approx(1.0).epsilon(1e-15));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        Mat3 a;
        for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = n(rng);
        const Mat3 g = a.transpose() * a + 0.2 * Mat3::Identity();
        const MetricField c = MetricField::constant(sym(g), Rect{});
        const Mat3 s = c.inverse_sqrt(Vec3::Zero());
        CHECK(max_abs(s - s.transpose()) == 0.0);
        CHECK(max_abs(s * s * g - Mat3::Identity()) <= 1e-12 * g.norm());
        CHECK(max_abs(c.inverse(Vec3::Zero()) * g - Mat3::Identity()) <= 1e-12 * g.norm());
    }
}

TEST_CASE("positive definiteness checks") {
    const MidplateGrid grid(Rect{}, 5, 5);
    const SpdReport id = check_spd(MetricField::constant(Mat3::Identity(), Rect{}), grid, 5);
    CHECK(id.ok);
    CHECK(id.min_eigenvalue == doctest::Approx(1.0));

    const Expression one = Expression::constant(1.0), zero = Expression::constant(0.0);
    const MetricField affine = MetricField::general({one, zero, zero, one, zero, parse_expression("x3 + 1")}, Rect{});
    const SpdReport a = check_spd(affine, grid, 5);
    CHECK(a.ok);
    CHECK(a.min_eigenvalue == doctest::Approx(0.5));

    const MetricField degenerate = MetricField::general({one, zero, zero, one, zero, parse_expression("x3")}, Rect{});
    const SpdReport d = check_spd(degenerate, grid, 5);
    CHECK_FALSE(d.ok);
    CHECK(d.witness[2] <= 0.0);
    CHECK_THROWS_AS(degenerate.evaluate(Vec3(0.0, 0.0, -0.25)), NotPositiveDefinite);
    try {
        degenerate.evaluate(Vec3(0.0, 0.0, -0.25));
    } catch (const NotPositiveDefinite& e) {
        CHECK(e.min_eigenvalue() == doctest::Approx(-0.25));
        CHECK(e.point()[2] == -0.25);
    }
}

TEST_CASE("metric jets agree with finite differences along x3") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int t = 0; t < 20; ++t) {
        const MetricField m = testsupport::random_metric(rng);
        const Vec3 x(u(rng), u(rng), u(rng));
        const JetMat3 j = m.jet(x, 1);
        const double h = 1e-3;
        auto g = [&](double dz) { return m.evaluate(x + Vec3(0.0, 0.0, dz)); };
        const Mat3 fd = (-g(2 * h) + 8 * g(h) - 8 * g(-h) + g(-2 * h)) / (12 * h);
        const Mat3 jd = j.d3(1);
        CHECK(max_abs(fd - jd) <= 1e-6 * std::max(1.0, max_abs(jd)));
        CHECK(max_abs(j.value() - j.value().transpose()) == 0.0);
    }
}

TEST_CASE("grid geometry") {
    const MidplateGrid g(Rect{0.0, 2.0, -1.0, 1.0}, 5, 3);
    CHECK(g.dx() == 0.5);
    CHECK(g.dy() == 1.0);
    CHECK(g.centroid_node() == g.node(2, 1));
    CHECK(g.point(g.node(4, 2)) == Vec2(2.0, 1.0));
    CHECK_THROWS_AS(MidplateGrid(Rect{}, 1, 4), std::invalid_argument);
}
