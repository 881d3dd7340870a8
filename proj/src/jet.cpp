#include "shellscale/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "shellscale/errors.hpp"

namespace shellscale {

namespace {

int normalize_planar(int order, int planar) { return planar < 0 ? order : std::min(planar, order); }

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

double index_factorial(const MultiIndex& a) { return factorial(a[0]) * factorial(a[1]) * factorial(a[2]); }

// Evaluate sum_j c[j] * g^j where g has zero constant term (so g^(K+1) = 0).
Jet compose(const Jet& f, const std::vector<double>& c) {
    Jet g = f;
    g.coefficients()[0] = 0.0;
    Jet result = Jet::constant(c.back(), f.order(), f.planar_order());
    for (int j = static_cast<int>(c.size()) - 2; j >= 0; --j) {
        result = result * g;
        result += c[j];
    }
    return result;
}

}  // namespace

JetLayout::JetLayout(int order, int planar_order) : order_(order), planar_(normalize_planar(order, planar_order)) {
    if (order < 0) throw std::invalid_argument("jet order must be non-negative");
    const int n = order + 1;
    lookup_.assign(static_cast<std::size_t>(n) * n * n, -1);
    for (int deg = 0; deg <= order; ++deg) {
        for (int a = deg; a >= 0; --a) {
            for (int b = deg - a; b >= 0; --b) {
                const int c = deg - a - b;
                if (a + b > planar_) continue;
                lookup_[(a * n + b) * n + c] = static_cast<int>(indices_.size());
                indices_.push_back({a, b, c});
            }
        }
    }
    pair_offsets_.reserve(indices_.size() + 1);
    pair_offsets_.push_back(0);
    for (const auto& g : indices_) {
        for (int a = 0; a <= g[0]; ++a) {
            for (int b = 0; b <= g[1]; ++b) {
                for (int c = 0; c <= g[2]; ++c) {
                    const int lhs = find({a, b, c});
                    const int rhs = find({g[0] - a, g[1] - b, g[2] - c});
                    pairs_.push_back({static_cast<std::uint32_t>(lhs), static_cast<std::uint32_t>(rhs)});
                }
            }
        }
        pair_offsets_.push_back(pairs_.size());
    }
}

int JetLayout::find(const MultiIndex& a) const noexcept {
    if (a[0] < 0 || a[1] < 0 || a[2] < 0) return -1;
    if (a[0] + a[1] + a[2] > order_ || a[0] + a[1] > planar_) return -1;
    const int n = order_ + 1;
    return lookup_[(a[0] * n + a[1]) * n + a[2]];
}

std::shared_ptr<const JetLayout> JetLayout::get(int order, int planar_order) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
    const int planar = normalize_planar(order, planar_order);
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[{order, planar}];
    if (!slot) slot = std::make_shared<const JetLayout>(order, planar);
    return slot;
}

Jet::Jet() : Jet(0.0, 0, 0) {}

Jet::Jet(double value, int order, int planar_order)
    : layout_(JetLayout::get(order, planar_order)), coeffs_(layout_->size(), 0.0) {
    coeffs_[0] = value;
}

Jet Jet::constant(double value, int order, int planar_order) { return Jet(value, order, planar_order); }

Jet Jet::variable(int axis, double value, int order, int planar_order) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("jet variable axis must be 0, 1 or 2");
    Jet j(value, order, planar_order);
    MultiIndex e{0, 0, 0};
    e[axis] = 1;
    const int pos = j.layout_->find(e);
    if (pos >= 0) j.coeffs_[pos] = 1.0;
    return j;
}

double Jet::taylor(const MultiIndex& a) const {
    const int pos = layout_->find(a);
    if (pos < 0) throw InsufficientJetOrder("requested multi-index exceeds the jet order");
    return coeffs_[pos];
}

double Jet::derivative(const MultiIndex& a) const { return taylor(a) * index_factorial(a); }

Jet Jet::partial(int axis) const {
    if (order() < 1) throw InsufficientJetOrder("cannot differentiate a jet of order 0");
    const int new_planar = axis < 2 ? planar_order() - 1 : planar_order();
    if (new_planar < 0) throw InsufficientJetOrder("cannot differentiate in-plane beyond the in-plane order");
    Jet out(0.0, order() - 1, std::min(new_planar, order() - 1));
    for (std::size_t i = 0; i < out.layout_->size(); ++i) {
        MultiIndex a = out.layout_->index(i);
        a[axis] += 1;
        out.coeffs_[i] = a[axis] * coeffs_[layout_->find(a)];
    }
    return out;
}

Jet Jet::truncated(int order, int planar_order) const { return restrict_to(*this, order, planar_order); }

Jet restrict_to(const Jet& j, int order, int planar_order) {
    const int planar = normalize_planar(order, planar_order);
    if (order == j.order() && planar == j.planar_order()) return j;
    if (order > j.order() || planar > j.planar_order())
        throw InsufficientJetOrder("cannot extend a jet beyond its computed order");
    Jet out(0.0, order, planar);
    const auto& lay = out.layout();
    for (std::size_t i = 0; i < lay.size(); ++i) out.coefficients()[i] = j.coefficients()[j.layout().find(lay.index(i))];
    return out;
}

namespace {

void align(Jet& a, Jet& b) {
    if (&a.layout() == &b.layout()) return;
    const int order = std::min(a.order(), b.order());
    const int planar = std::min(a.planar_order(), b.planar_order());
    a = restrict_to(a, order, planar);
    b = restrict_to(b, order, planar);
}

}  // namespace

Jet& Jet::operator+=(const Jet& o) {
    if (&layout() != &o.layout()) {
        Jet other = o;
        align(*this, other);
        return *this += other;
    }
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    if (&layout() != &o.layout()) {
        Jet other = o;
        align(*this, other);
        return *this -= other;
    }
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
}

Jet& Jet::operator*=(const Jet& o) { return *this = *this * o; }

Jet& Jet::operator+=(double c) {
    coeffs_[0] += c;
    return *this;
}

Jet& Jet::operator*=(double c) {
    for (double& v : coeffs_) v *= c;
    return *this;
}

Jet Jet::operator-() const {
    Jet out = *this;
    for (double& v : out.coeffs_) v = -v;
    return out;
}

Jet operator*(const Jet& a_in, const Jet& b_in) {
    if (&a_in.layout() != &b_in.layout()) {
        Jet a = a_in;
        Jet b = b_in;
        align(a, b);
        return a * b;
    }
    const JetLayout& lay = a_in.layout();
    Jet out(0.0, lay.order(), lay.planar_order());
    const double* pa = a_in.coeffs_.data();
    const double* pb = b_in.coeffs_.data();
    for (std::size_t i = 0; i < lay.size(); ++i) {
        double s = 0.0;
        for (const auto* p = lay.pairs_begin(i); p != lay.pairs_end(i); ++p) s += pa[p->lhs] * pb[p->rhs];
        out.coeffs_[i] = s;
    }
    return out;
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

Jet reciprocal(const Jet& f) {
    const double f0 = f.value();
    if (f0 == 0.0) throw DomainError("division by zero", "<jet>");
    std::vector<double> c(f.order() + 1);
    double p = 1.0 / f0;
    for (int j = 0; j <= f.order(); ++j) {
        c[j] = (j % 2 == 0 ? 1.0 : -1.0) * p;
        p /= f0;
    }
    return compose(f, c);
}

Jet exp(const Jet& f) {
    const double e = std::exp(f.value());
    std::vector<double> c(f.order() + 1);
    for (int j = 0; j <= f.order(); ++j) c[j] = e / factorial(j);
    return compose(f, c);
}

Jet log(const Jet& f) {
    const double f0 = f.value();
    if (!(f0 > 0.0)) throw DomainError("log of a non-positive value", "<jet>");
    std::vector<double> c(f.order() + 1);
    c[0] = std::log(f0);
    double p = 1.0;
    for (int j = 1; j <= f.order(); ++j) {
        p /= f0;
        c[j] = (j % 2 == 1 ? 1.0 : -1.0) * p / j;
    }
    return compose(f, c);
}

Jet sin(const Jet& f) {
    const double s = std::sin(f.value());
    const double co = std::cos(f.value());
    const double cycle[4] = {s, co, -s, -co};
    std::vector<double> c(f.order() + 1);
    for (int j = 0; j <= f.order(); ++j) c[j] = cycle[j % 4] / factorial(j);
    return compose(f, c);
}

Jet cos(const Jet& f) {
    const double s = std::sin(f.value());
    const double co = std::cos(f.value());
    const double cycle[4] = {co, -s, -co, s};
    std::vector<double> c(f.order() + 1);
    for (int j = 0; j <= f.order(); ++j) c[j] = cycle[j % 4] / factorial(j);
    return compose(f, c);
}

Jet sqrt(const Jet& f) {
    const double f0 = f.value();
    if (f0 < 0.0 || (f0 == 0.0 && f.order() > 0)) throw DomainError("sqrt of a non-positive value", "<jet>");
    std::vector<double> c(f.order() + 1);
    // Generalized binomial coefficients of (f0 + g)^(1/2).
    double binom = 1.0;
    double power = std::sqrt(f0);
    for (int j = 0; j <= f.order(); ++j) {
        c[j] = binom * power;
        binom *= (0.5 - j) / (j + 1);
        power /= f0;
    }
    return compose(f, c);
}

Jet pow(const Jet& f, int p) {
    if (p < 0) {
        if (f.value() == 0.0) throw DomainError("negative power of zero", "<jet>");
        return reciprocal(pow(f, -p));
    }
    Jet result = Jet::constant(1.0, f.order(), f.planar_order());
    Jet base = f;
    while (p > 0) {
        if (p & 1) result = result * base;
        p >>= 1;
        if (p > 0) base = base * base;
    }
    return result;
}

JetMat3::JetMat3() : JetMat3(0, 0) {}

JetMat3::JetMat3(int order, int planar_order) {
    for (auto& e : e_) e = Jet(0.0, order, planar_order);
}

JetMat3 JetMat3::identity(int order, int planar_order) {
    JetMat3 m(order, planar_order);
    for (int i = 0; i < 3; ++i) m(i, i) = Jet(1.0, order, planar_order);
    return m;
}

Eigen::Matrix3d JetMat3::value() const {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = (*this)(r, c).value();
    return m;
}

Eigen::Matrix3d JetMat3::derivative(const MultiIndex& a) const {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = (*this)(r, c).derivative(a);
    return m;
}

JetMat3 JetMat3::partial(int axis) const {
    JetMat3 out;
    for (int i = 0; i < 9; ++i) out.e_[i] = e_[i].partial(axis);
    return out;
}

JetMat3 JetMat3::transpose() const {
    JetMat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out(r, c) = (*this)(c, r);
    return out;
}

JetMat3 JetMat3::truncated(int order, int planar_order) const {
    JetMat3 out;
    for (int i = 0; i < 9; ++i) out.e_[i] = e_[i].truncated(order, planar_order);
    return out;
}

JetMat3 operator+(const JetMat3& a, const JetMat3& b) {
    JetMat3 out;
    for (int i = 0; i < 9; ++i) out.e_[i] = a.e_[i] + b.e_[i];
    return out;
}

JetMat3 operator-(const JetMat3& a, const JetMat3& b) {
    JetMat3 out;
    for (int i = 0; i < 9; ++i) out.e_[i] = a.e_[i] - b.e_[i];
    return out;
}

JetMat3 operator*(const JetMat3& a, const JetMat3& b) {
    JetMat3 out;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            Jet s = a(r, 0) * b(0, c);
            s += a(r, 1) * b(1, c);
            s += a(r, 2) * b(2, c);
            out(r, c) = std::move(s);
        }
    }
    return out;
}

JetMat3 operator*(double c, const JetMat3& a) {
    JetMat3 out;
    for (int i = 0; i < 9; ++i) out.e_[i] = a.e_[i] * c;
    return out;
}

JetMat3 inverse(const JetMat3& m) {
    JetMat3 adj;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            const int r1 = (c + 1) % 3, r2 = (c + 2) % 3;
            const int c1 = (r + 1) % 3, c2 = (r + 2) % 3;
            adj(r, c) = m(r1, c1) * m(r2, c2) - m(r1, c2) * m(r2, c1);
        }
    }
    Jet det = m(0, 0) * adj(0, 0) + m(0, 1) * adj(1, 0) + m(0, 2) * adj(2, 0);
    if (det.value() == 0.0) throw DomainError("singular matrix", "<jet matrix>");
    const Jet inv_det = reciprocal(det);
    JetMat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out(r, c) = adj(r, c) * inv_det;
    return out;
}

}  // namespace shellscale
