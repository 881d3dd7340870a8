#include "shellscale/metric.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "shellscale/errors.hpp"

namespace shellscale {

namespace {

constexpr int kUpperIndex[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};

std::array<double, 3> as_array(const Vec3& x) { return {x[0], x[1], x[2]}; }

void require_spd(const Mat3& g, const Vec3& x, double floor) {
    const double lo = min_eigenvalue(g);
    if (!(lo > floor)) throw NotPositiveDefinite(lo, as_array(x));
}

}  // namespace

MidplateGrid::MidplateGrid(Rect domain, int nx, int ny) : domain_(domain), nx_(nx), ny_(ny) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("midplate grid needs at least 2 nodes per axis");
    if (!(domain.x1_max > domain.x1_min) || !(domain.x2_max > domain.x2_min))
        throw std::invalid_argument("midplate rectangle must have positive extent");
    dx_ = (domain.x1_max - domain.x1_min) / (nx - 1);
    dy_ = (domain.x2_max - domain.x2_min) / (ny - 1);
}

std::size_t MidplateGrid::centroid_node() const {
    const double cx = 0.5 * (domain_.x1_min + domain_.x1_max);
    const double cy = 0.5 * (domain_.x2_min + domain_.x2_max);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < size(); ++k) {
        const Vec2 p = point(k);
        const double d = (p[0] - cx) * (p[0] - cx) + (p[1] - cy) * (p[1] - cy);
        if (d < best_d - 1e-14 * (dx_ * dx_ + dy_ * dy_)) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

bool MidplateGrid::is_interior(std::size_t node) const {
    const int i = i_of(node), j = j_of(node);
    return i >= 2 && i <= nx_ - 3 && j >= 2 && j <= ny_ - 3;
}

MetricField MetricField::general(const std::array<Expression, 6>& upper, Rect domain, double spd_floor) {
    MetricField m;
    m.family_ = MetricFamily::General;
    m.upper_ = upper;
    m.domain_ = domain;
    m.spd_floor_ = spd_floor;
    return m;
}

MetricField MetricField::conformal(const Expression& phi, Rect domain, double spd_floor) {
    if (phi.depends_on(0) || phi.depends_on(1))
        throw std::invalid_argument("conformal factor phi must depend on x3 only");
    MetricField m;
    m.family_ = MetricFamily::Conformal;
    m.phi_ = phi;
    const Expression diag = Expression::unary(UnaryOp::Exp, Expression::constant(2.0) * phi);
    const Expression zero = Expression::constant(0.0);
    m.upper_ = {diag, zero, zero, diag, zero, diag};
    m.domain_ = domain;
    m.spd_floor_ = spd_floor;
    return m;
}

MetricField MetricField::constant(const Mat3& g, Rect domain, double spd_floor) {
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 0.0) throw std::invalid_argument("constant metric must be symmetric");
    MetricField m;
    m.family_ = MetricFamily::Constant;
    for (int r = 0; r < 3; ++r)
        for (int c = r; c < 3; ++c) m.upper_[kUpperIndex[r][c]] = Expression::constant(g(r, c));
    m.domain_ = domain;
    m.spd_floor_ = spd_floor;
    return m;
}

Expression MetricField::entry(int r, int c) const { return upper_[kUpperIndex[r][c]]; }

Mat3 MetricField::evaluate_unchecked(const Vec3& x) const {
    const auto p = as_array(x);
    Mat3 g;
    if (family_ == MetricFamily::Conformal) {
        g = std::exp(2.0 * shellscale::evaluate(phi_, p)) * Mat3::Identity();
    } else {
        for (int r = 0; r < 3; ++r)
            for (int c = r; c < 3; ++c) g(r, c) = g(c, r) = shellscale::evaluate(upper_[kUpperIndex[r][c]], p);
    }
    return g;
}

Mat3 MetricField::evaluate(const Vec3& x) const {
    const Mat3 g = evaluate_unchecked(x);
    require_spd(g, x, spd_floor_);
    return g;
}

Mat3 MetricField::inverse(const Vec3& x) const { return evaluate(x).inverse(); }

Mat3 MetricField::inverse_sqrt(const Vec3& x) const { return sym_inv_sqrt(evaluate(x)); }

JetMat3 MetricField::jet(const Vec3& x, int order, int planar_order) const {
    const auto p = as_array(x);
    JetMat3 g(order, planar_order);
    if (family_ == MetricFamily::Conformal) {
        const Jet d = exp(2.0 * eval_jet(phi_, p, order, planar_order));
        for (int i = 0; i < 3; ++i) g(i, i) = d;
    } else {
        for (int r = 0; r < 3; ++r) {
            for (int c = r; c < 3; ++c) {
                g(r, c) = eval_jet(upper_[kUpperIndex[r][c]], p, order, planar_order);
                if (c != r) g(c, r) = g(r, c);
            }
        }
    }
    require_spd(g.value(), x, spd_floor_);
    return g;
}

MetricField MetricField::scaled(double c) const {
    if (!(c > 0.0)) throw std::invalid_argument("metric scale factor must be positive");
    MetricField m = *this;
    if (family_ == MetricFamily::Conformal) {
        // exp(2*(phi + log(c)/2)) = c*exp(2*phi)
        m.phi_ = phi_ + Expression::constant(0.5 * std::log(c));
        const Expression diag = Expression::unary(UnaryOp::Exp, Expression::constant(2.0) * m.phi_);
        const Expression zero = Expression::constant(0.0);
        m.upper_ = {diag, zero, zero, diag, zero, diag};
    } else {
        for (auto& e : m.upper_) e = Expression::constant(c) * e;
    }
    return m;
}

bool operator==(const MetricField& a, const MetricField& b) {
    if (a.family_ != b.family_ || !(a.domain_ == b.domain_) || a.spd_floor_ != b.spd_floor_) return false;
    if (a.family_ == MetricFamily::Conformal) return a.phi_ == b.phi_;
    return a.upper_ == b.upper_;
}

SpdReport check_spd(const MetricField& metric, const MidplateGrid& grid, int layers) {
    if (layers < 1) throw std::invalid_argument("check_spd needs at least one layer");
    SpdReport report;
    report.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (int l = 0; l < layers; ++l) {
        const double x3 = layers == 1 ? 0.0 : -0.5 + static_cast<double>(l) / (layers - 1);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const Vec2 xp = grid.point(k);
            const Vec3 x(xp[0], xp[1], x3);
            double lo;
            try {
                lo = min_eigenvalue(metric.evaluate_unchecked(x));
            } catch (const DomainError&) {
                lo = -std::numeric_limits<double>::infinity();
            }
            if (lo < report.min_eigenvalue || std::isnan(lo)) {
                report.min_eigenvalue = lo;
                report.witness = x;
            }
        }
    }
    report.ok = report.min_eigenvalue > metric.spd_floor();
    return report;
}

}  // namespace shellscale
