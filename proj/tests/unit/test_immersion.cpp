#include <cmath>
#include <string>

#include "doctest.h"
#include "shellscale/classifier.hpp"
#include "shellscale/errors.hpp"
#include "shellscale/immersion.hpp"
#include "test_support.hpp"

using namespace shellscale;

namespace {

MetricField conformal_power(int p) {
    return MetricField::conformal(
        parse_expression("x3^" + std::to_string(p) + "/" + std::to_string(static_cast<long>(factorial(p)))), Rect{});
}

double max_field_error(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double e = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) e = std::max(e, (a[n] - b[n]).cwiseAbs().maxCoeff());
    return e;
}

template <class M>
double max_norm(const std::vector<M>& f) {
    double e = 0.0;
    for (const M& m : f) e = std::max(e, m.cwiseAbs().maxCoeff());
    return e;
}

}  // namespace

TEST_CASE("identity metric gives the trivial frame and immersion") {
    const MidplateGrid grid(Rect{}, 9, 9);
    const MetricField m = MetricField::constant(Mat3::Identity(), Rect{});
    const FrameField frame = frame_transport(m, grid);
    for (const Mat3& b : frame.b0) CHECK((b - Mat3::Identity()).norm() == 0.0);
    const Immersion imm = midplate_immersion(frame);
    const Vec2 xb = grid.point(frame.basepoint);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Vec2 x = grid.point(n);
        CHECK((imm.y0[n] - Vec3(x[0] - xb[0], x[1] - xb[1], 0.0)).norm() <= 1e-14);
    }
    const ExpansionFields f = expansion_fields(m, frame, imm, 3);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        CHECK(f.b[1][n] == Vec3(0, 0, 1));
        for (int k = 2; k <= 4; ++k) CHECK(f.b[k][n].norm() == 0.0);
        for (int k = 1; k <= 3; ++k) CHECK(f.B[k][n].norm() == 0.0);
    }
    for (int order = 0; order <= 4; ++order) CHECK(max_norm(expansion_residual(f, order)) <= 1e-13);
}

TEST_CASE("conformal metrics with phi(0) = 0 have the identity frame") {
    const MidplateGrid grid(Rect{}, 9, 9);
    for (int p = 2; p <= 4; ++p) {
        const FrameField frame = frame_transport(conformal_power(p), grid);
        CHECK(frame.metric_defect <= 1e-10);
        for (const Mat3& b : frame.b0) CHECK((b - Mat3::Identity()).norm() <= 1e-12);
        const Immersion imm = midplate_immersion(frame);
        const ExpansionFields f = expansion_fields(conformal_power(p), frame, imm, p - 1);
        for (std::size_t n = 0; n < grid.size(); ++n) {
            CHECK((f.b[1][n] - Vec3(0, 0, 1)).norm() <= 1e-12);
            // B_1 = phi'(0) Id and B_2 = (phi'' + phi'^2)(0) Id vanish for p >= 3; B_1 vanishes for p = 2.
            CHECK(f.B[1][n].norm() <= 1e-14);
            CHECK(f.b[2][n].norm() <= 1e-14);
            if (p >= 3) {
                CHECK(f.B[2][n].norm() <= 1e-14);
                CHECK(f.b[3][n].norm() <= 1e-14);
            }
        }
    }
}

TEST_CASE("metric with varying normal length") {
    const MetricField m = MetricField::general(
        {parse_expression("1"), parse_expression("0"), parse_expression("0"), parse_expression("1"),
         parse_expression("0"), parse_expression("(1 + x1)^2")},
        Rect{});
    const MidplateGrid grid(Rect{}, 17, 17);
    const FrameField frame = frame_transport(m, grid);
    CHECK(frame.holonomy_defect <= 1e-8);
    CHECK(frame.metric_defect <= 1e-8);
    const Immersion imm = midplate_immersion(frame);
    const ExpansionFields f = expansion_fields(m, frame, imm, 1);
    const Vec2 xb = grid.point(frame.basepoint);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Vec2 x = grid.point(n);
        CHECK((f.b[1][n] - Vec3(0, 0, 1 + x[0])).norm() <= 1e-8);
        CHECK((f.y0()[n] - Vec3(x[0] - xb[0], x[1] - xb[1], 0.0)).norm() <= 1e-8);
    }
    // Transport along x2 first and then x1 reaches the same frames.
    TransportOptions opts;
    opts.basepoint = grid.node(0, 0);
    opts.base_frame = frame.b0[grid.node(0, 0)];
    const FrameField other = frame_transport(m, grid, opts);
    double diff = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) diff = std::max(diff, (other.b0[n] - frame.b0[n]).norm());
    CHECK(diff <= 1e-8);
    CHECK(max_norm(expansion_residual(f, 0)) <= 1e-8);
    CHECK(max_norm(expansion_residual(f, 1)) <= 1e-6);
}

TEST_CASE("pullback metric frame matches the analytic Jacobian") {
    const testsupport::Pullback pb;
    const MetricField m = pb.metric();
    double previous = 0.0;
    for (int nx : {17, 33}) {
        const MidplateGrid grid(Rect{}, nx, nx);
        const FrameField frame = frame_transport(m, grid);
        const Immersion imm = midplate_immersion(frame);
        const Vec2 xb = grid.point(frame.basepoint);
        const Vec3 base(xb[0], xb[1], 0.0);
        // B0 = Q * Dpsi with the rotation Q fixed at the basepoint.
        const Mat3 q = frame.base_frame * pb.jacobian(base).inverse();
        CHECK((q.transpose() * q - Mat3::Identity()).norm() <= 1e-12);
        double frame_err = 0.0, y_err = 0.0;
        for (std::size_t n = 0; n < grid.size(); ++n) {
            const Vec2 x = grid.point(n);
            const Vec3 p(x[0], x[1], 0.0);
            frame_err = std::max(frame_err, (frame.b0[n] - q * pb.jacobian(p)).cwiseAbs().maxCoeff());
            y_err = std::max(y_err, (imm.y0[n] - q * (pb.map(p) - pb.map(base))).cwiseAbs().maxCoeff());
        }
        CHECK(frame_err <= 1e-8);
        CHECK(y_err <= 1e-7);
        CHECK(frame.metric_defect <= 1e-8);
        if (nx == 33) CHECK(frame.metric_defect * 8.0 <= previous);
        previous = frame.metric_defect;
    }
}

TEST_CASE("frame transport detects a curved midplate") {
    const MidplateGrid grid(Rect{}, 9, 9);
    CHECK_THROWS_AS(frame_transport(conformal_power(1), grid), IntegrabilityViolation);
}

TEST_CASE("expansion residuals of the conformal family") {
    const MidplateGrid grid(Rect{}, 9, 9);
    {
        const ExpansionFields f = build_expansion(conformal_power(2), grid, 1);
        CHECK(max_norm(expansion_residual(f, 0)) <= 1e-12);
        CHECK(max_norm(expansion_residual(f, 1)) <= 1e-12);
        for (const Mat3& r : expansion_residual(f, 2))
            CHECK((r.topLeftCorner<2, 2>() + 2.0 * Mat2::Identity()).norm() <= 1e-12);
    }
    {
        const ExpansionFields f = build_expansion(conformal_power(3), grid, 2);
        for (int mm = 0; mm <= 2; ++mm) CHECK(max_norm(expansion_residual(f, mm)) <= 1e-12);
        for (const Mat3& r : expansion_residual(f, 3))
            CHECK((r.topLeftCorner<2, 2>() + 2.0 * Mat2::Identity()).norm() <= 1e-12);
    }
    {
        const ExpansionFields f = build_expansion(conformal_power(4), grid, 3);
        for (int mm = 0; mm <= 3; ++mm) CHECK(max_norm(expansion_residual(f, mm)) <= 1e-12);
        CHECK(max_norm(expansion_residual(f, 4)) >= 1.0);
    }
    CHECK_THROWS_AS(expansion_residual(build_expansion(conformal_power(3), grid, 2), 4), InsufficientJetOrder);
}

TEST_CASE("curvature identity on the conformal family") {
    const MidplateGrid grid(Rect{}, 33, 33);
    for (int p : {3, 4}) {
        const MetricField m = conformal_power(p);
        const ExpansionFields f = build_expansion(m, grid, p - 1);
        const CurvatureMidplateJets jets = curvature_midplate_jets(m, grid, p - 2);
        CHECK(riem_identity_check(f, jets) <= 1e-6);
        for (const Mat2& r : riem_rhs(f)) CHECK((r + 2.0 * Mat2::Identity()).norm() <= 1e-12);
    }
}

TEST_CASE("curvature identity and residuals on a non-conformal metric") {
    const MetricField m = testsupport::bent_pullback_metric();
    const MidplateGrid grid(Rect{}, 33, 33);
    ClassifierOptions copts;
    copts.max_order = 3;
    const CurvatureMidplateJets jets = curvature_midplate_jets(m, grid, 3);
    const ScalingClass cls = classify_scaling(jets, copts);
    REQUIRE(cls.kind == ScalingKind::Exponent);
    REQUIRE(cls.n == 2);
    const ExpansionFields f = build_expansion(m, grid, 2);
    CHECK(f.column_defect <= 1e-6);
    for (int mm = 0; mm <= 2; ++mm) CHECK(interior_max_norm(grid, expansion_residual(f, mm)) <= 1e-6);
    CHECK(interior_max_norm(grid, expansion_residual(f, 3)) >= 1e-2);
    CHECK(riem_identity_check(f, jets) <= 1e-6);
}

TEST_CASE("gauge covariance of the expansion") {
    const MetricField m = testsupport::bent_pullback_metric();
    const MidplateGrid grid(Rect{}, 17, 17);
    const ExpansionFields f = build_expansion(m, grid, 2);
    const Mat3 q = Eigen::AngleAxisd(0.7, Vec3(1, -2, 0.5).normalized()).toRotationMatrix();
    TransportOptions opts;
    opts.base_frame = q * f.base_frame;
    const ExpansionFields g = build_expansion(m, grid, 2, opts);
    std::vector<Vec3> qy(grid.size());
    for (int k = 0; k <= 4; ++k) {
        for (std::size_t n = 0; n < grid.size(); ++n) qy[n] = q * f.b[k][n];
        CHECK(max_field_error(qy, g.b[k]) <= 1e-12);
    }
    for (int mm = 0; mm <= 3; ++mm) {
        const std::vector<Mat3> a = expansion_residual(f, mm), b = expansion_residual(g, mm);
        double d = 0.0;
        for (std::size_t n = 0; n < a.size(); ++n) d = std::max(d, (a[n] - b[n]).cwiseAbs().maxCoeff());
        CHECK(d <= 1e-12);
    }
}
