#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace shellscale {

using MultiIndex = std::array<int, 3>;

// Set of multi-indices kept by a jet: total degree <= order and in-plane
// degree (first two variables) <= planar_order. The set is closed under
// taking smaller indices, so products and derivatives stay inside it.
class JetLayout {
public:
    static std::shared_ptr<const JetLayout> get(int order, int planar_order);

    int order() const noexcept { return order_; }
    int planar_order() const noexcept { return planar_; }
    std::size_t size() const noexcept { return indices_.size(); }
    const MultiIndex& index(std::size_t i) const { return indices_[i]; }

    // Position of a multi-index, or -1 when it is not part of the layout.
    int find(const MultiIndex& a) const noexcept;

    struct Pair {
        std::uint32_t lhs;
        std::uint32_t rhs;
    };
    // All (lhs, rhs) index pairs whose multi-indices sum to index(i).
    const Pair* pairs_begin(std::size_t i) const { return pairs_.data() + pair_offsets_[i]; }
    const Pair* pairs_end(std::size_t i) const { return pairs_.data() + pair_offsets_[i + 1]; }

    JetLayout(int order, int planar_order);

private:
    int order_;
    int planar_;
    std::vector<MultiIndex> indices_;
    std::vector<int> lookup_;
    std::vector<Pair> pairs_;
    std::vector<std::size_t> pair_offsets_;
};

// Truncated Taylor expansion of a smooth scalar function of (x1, x2, x3)
// about a fixed point. Coefficients are stored in normalized form
// (derivative divided by the multi-index factorial); `derivative` returns
// raw partial derivatives.
class Jet {
public:
    Jet();
    Jet(double value, int order, int planar_order = -1);

    static Jet constant(double value, int order, int planar_order = -1);
    // The coordinate function x_{axis}, expanded about `value`.
    static Jet variable(int axis, double value, int order, int planar_order = -1);

    int order() const noexcept { return layout_->order(); }
    int planar_order() const noexcept { return layout_->planar_order(); }
    const JetLayout& layout() const noexcept { return *layout_; }

    double value() const noexcept { return coeffs_[0]; }
    double taylor(const MultiIndex& a) const;
    double derivative(const MultiIndex& a) const;
    double derivative(int k1, int k2, int k3) const { return derivative(MultiIndex{k1, k2, k3}); }
    // Raw x3-derivative of order k (in-plane orders zero).
    double d3(int k) const { return derivative(MultiIndex{0, 0, k}); }

    const std::vector<double>& coefficients() const noexcept { return coeffs_; }
    std::vector<double>& coefficients() noexcept { return coeffs_; }

    // Jet of the partial derivative along `axis`; the order drops by one.
    Jet partial(int axis) const;
    Jet truncated(int order, int planar_order) const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(const Jet& o);
    Jet& operator+=(double c);
    Jet& operator*=(double c);

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator/(const Jet& a, const Jet& b);
    friend Jet operator+(Jet a, double c) { return a += c; }
    friend Jet operator+(double c, Jet a) { return a += c; }
    friend Jet operator-(Jet a, double c) { return a += -c; }
    friend Jet operator-(double c, const Jet& a) { return -a + c; }
    friend Jet operator*(Jet a, double c) { return a *= c; }
    friend Jet operator*(double c, Jet a) { return a *= c; }
    friend Jet operator/(Jet a, double c) { return a *= 1.0 / c; }
    Jet operator-() const;

private:
    std::shared_ptr<const JetLayout> layout_;
    std::vector<double> coeffs_;
};

// Common layout of two jets: the smaller order and the smaller in-plane order.
Jet restrict_to(const Jet& j, int order, int planar_order);

Jet reciprocal(const Jet& f);
Jet exp(const Jet& f);
Jet log(const Jet& f);
Jet sin(const Jet& f);
Jet cos(const Jet& f);
Jet sqrt(const Jet& f);
Jet pow(const Jet& f, int p);

// 3x3 matrix of jets sharing a layout.
class JetMat3 {
public:
    JetMat3();
    JetMat3(int order, int planar_order);

    static JetMat3 identity(int order, int planar_order);

    Jet& operator()(int r, int c) { return e_[3 * r + c]; }
    const Jet& operator()(int r, int c) const { return e_[3 * r + c]; }

    int order() const { return e_[0].order(); }
    int planar_order() const { return e_[0].planar_order(); }

    Eigen::Matrix3d value() const;
    Eigen::Matrix3d derivative(const MultiIndex& a) const;
    Eigen::Matrix3d d3(int k) const { return derivative(MultiIndex{0, 0, k}); }

    JetMat3 partial(int axis) const;
    JetMat3 transpose() const;
    JetMat3 truncated(int order, int planar_order) const;

    friend JetMat3 operator+(const JetMat3& a, const JetMat3& b);
    friend JetMat3 operator-(const JetMat3& a, const JetMat3& b);
    friend JetMat3 operator*(const JetMat3& a, const JetMat3& b);
    friend JetMat3 operator*(double c, const JetMat3& a);

private:
    std::array<Jet, 9> e_;
};

// Inverse of a symmetric or general jet matrix via the adjugate.
JetMat3 inverse(const JetMat3& m);

}  // namespace shellscale
