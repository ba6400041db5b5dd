#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gpelab/grid.hpp"

namespace gpelab {

/// Scalar, vector or tensor samples on a TorusGrid. Storage is complex and component-major;
/// a field flagged real keeps its imaginary part at zero after spectral round trips.
class TorusField {
public:
    TorusField() = default;

    explicit TorusField(const TorusGrid& grid, int components = 1, bool real = true)
        : grid_(grid), components_(components), real_(real),
          values_(grid.points() * static_cast<std::size_t>(components)) {
        if (components < 1) throw InvalidArgument("field needs at least one component");
    }

    /// Real scalar field sampled from f(x, y); y is 0 in 1D.
    static TorusField sample(const TorusGrid& grid, const std::function<double(double, double)>& f) {
        TorusField out(grid, 1, true);
        for (std::size_t i = 0; i < grid.points(); ++i) {
            auto x = grid.coordinates(i);
            out.values_[i] = f(x[0], x[1]);
        }
        return out;
    }

    static TorusField sample_complex(const TorusGrid& grid,
                                     const std::function<cplx(double, double)>& f) {
        TorusField out(grid, 1, false);
        for (std::size_t i = 0; i < grid.points(); ++i) {
            auto x = grid.coordinates(i);
            out.values_[i] = f(x[0], x[1]);
        }
        return out;
    }

    static TorusField constant(const TorusGrid& grid, double value, int components = 1) {
        TorusField out(grid, components, true);
        std::fill(out.values_.begin(), out.values_.end(), cplx(value, 0.0));
        return out;
    }

    const TorusGrid& grid() const noexcept { return grid_; }
    int components() const noexcept { return components_; }
    std::size_t points() const noexcept { return grid_.points(); }
    bool is_real() const noexcept { return real_; }
    void set_real(bool real) noexcept { real_ = real; }

    std::span<cplx> component(int c) {
        return {values_.data() + static_cast<std::size_t>(c) * points(), points()};
    }
    std::span<const cplx> component(int c) const {
        return {values_.data() + static_cast<std::size_t>(c) * points(), points()};
    }

    cplx& at(int c, std::size_t i) { return values_[static_cast<std::size_t>(c) * points() + i]; }
    const cplx& at(int c, std::size_t i) const {
        return values_[static_cast<std::size_t>(c) * points() + i];
    }
    double re(int c, std::size_t i) const { return at(c, i).real(); }

    std::vector<cplx>& values() noexcept { return values_; }
    const std::vector<cplx>& values() const noexcept { return values_; }

    TorusField component_field(int c) const {
        TorusField out(grid_, 1, real_);
        std::copy_n(component(c).begin(), points(), out.values_.begin());
        return out;
    }

    void set_component(int c, const TorusField& scalar) {
        if (scalar.components() != 1 || !(scalar.grid() == grid_))
            throw ShapeMismatch("set_component expects a scalar field on the same grid");
        std::copy_n(scalar.values_.begin(), points(), component(c).begin());
        real_ = real_ && scalar.real_;
    }

    /// Drops the imaginary part; used to symmetrize real fields.
    void make_real() {
        for (auto& v : values_) v = cplx(v.real(), 0.0);
        real_ = true;
    }

    double max_abs_imag() const {
        double m = 0.0;
        for (const auto& v : values_) m = std::max(m, std::abs(v.imag()));
        return m;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    double min_real() const {
        double m = values_.empty() ? 0.0 : values_.front().real();
        for (const auto& v : values_) m = std::min(m, v.real());
        return m;
    }

    TorusField& operator+=(const TorusField& o) {
        require_same_shape(o, "+=");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        real_ = real_ && o.real_;
        return *this;
    }

    TorusField& operator-=(const TorusField& o) {
        require_same_shape(o, "-=");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        real_ = real_ && o.real_;
        return *this;
    }

    TorusField& operator*=(double s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

    TorusField& operator*=(cplx s) {
        for (auto& v : values_) v *= s;
        real_ = real_ && s.imag() == 0.0;
        return *this;
    }

    /// out += s * o
    TorusField& axpy(double s, const TorusField& o) {
        require_same_shape(o, "axpy");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * o.values_[i];
        real_ = real_ && o.real_;
        return *this;
    }

    friend TorusField operator+(TorusField a, const TorusField& b) { return a += b; }
    friend TorusField operator-(TorusField a, const TorusField& b) { return a -= b; }
    friend TorusField operator*(TorusField a, double s) { return a *= s; }
    friend TorusField operator*(double s, TorusField a) { return a *= s; }

    void require_same_shape(const TorusField& o, const char* op) const {
        if (!(o.grid_ == grid_) || o.components_ != components_)
            throw ShapeMismatch(std::string("field shape mismatch in ") + op);
    }

private:
    TorusGrid grid_;
    int components_ = 1;
    bool real_ = true;
    std::vector<cplx> values_;
};

inline void require_components(const TorusField& f, int expected, const char* what) {
    if (f.components() != expected)
        throw ShapeMismatch(std::string(what) + ": expected " + std::to_string(expected) +
                            " component(s), got " + std::to_string(f.components()));
}

inline void require_same_grid(const TorusField& a, const TorusField& b, const char* what) {
    if (!(a.grid() == b.grid())) throw ShapeMismatch(std::string(what) + ": grids differ");
}

/// Every sample's real part strictly positive, imaginary part ignored.
inline void require_positive(const TorusField& f, const char* what) {
    for (std::size_t i = 0; i < f.values().size(); ++i) {
        double v = f.values()[i].real();
        if (!(v > 0.0))
            throw PositivityViolation(std::string(what) + ": nonpositive sample " + std::to_string(v) +
                                      " at node " + std::to_string(i % f.points()));
    }
}

/// Pointwise map of each sample for real fields.
template <class Fn>
TorusField map_real(const TorusField& f, Fn&& fn) {
    TorusField out(f.grid(), f.components(), true);
    for (std::size_t i = 0; i < f.values().size(); ++i) out.values()[i] = fn(f.values()[i].real());
    return out;
}

/// scalar(x) * f(x) for every component of f.
inline TorusField scale_pointwise(const TorusField& scalar, const TorusField& f) {
    require_components(scalar, 1, "scale_pointwise");
    require_same_grid(scalar, f, "scale_pointwise");
    TorusField out(f.grid(), f.components(), f.is_real() && scalar.is_real());
    for (int c = 0; c < f.components(); ++c)
        for (std::size_t i = 0; i < f.points(); ++i) out.at(c, i) = scalar.at(0, i) * f.at(c, i);
    return out;
}

/// f(x) / scalar(x) for every component of f.
inline TorusField divide_pointwise(const TorusField& f, const TorusField& scalar) {
    require_components(scalar, 1, "divide_pointwise");
    require_same_grid(scalar, f, "divide_pointwise");
    TorusField out(f.grid(), f.components(), f.is_real() && scalar.is_real());
    for (int c = 0; c < f.components(); ++c)
        for (std::size_t i = 0; i < f.points(); ++i) out.at(c, i) = f.at(c, i) / scalar.at(0, i);
    return out;
}

/// Bilinear (no conjugation) pointwise dot product of two fields with equal component count.
inline TorusField dot_pointwise(const TorusField& a, const TorusField& b) {
    a.require_same_shape(b, "dot_pointwise");
    TorusField out(a.grid(), 1, a.is_real() && b.is_real());
    for (int c = 0; c < a.components(); ++c)
        for (std::size_t i = 0; i < a.points(); ++i) out.at(0, i) += a.at(c, i) * b.at(c, i);
    return out;
}

/// Pointwise Euclidean magnitude squared, sum_c |f_c|^2.
inline TorusField magnitude_sq(const TorusField& f) {
    TorusField out(f.grid(), 1, true);
    for (int c = 0; c < f.components(); ++c)
        for (std::size_t i = 0; i < f.points(); ++i) out.at(0, i) += std::norm(f.at(c, i));
    return out;
}

/// Real symmetric or general tensor a (x) b with entry (i, j) stored at component i * dim + j.
inline TorusField outer_pointwise(const TorusField& a, const TorusField& b) {
    require_same_grid(a, b, "outer_pointwise");
    int n = a.components(), m = b.components();
    TorusField out(a.grid(), n * m, a.is_real() && b.is_real());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            for (std::size_t p = 0; p < a.points(); ++p) out.at(i * m + j, p) = a.at(i, p) * b.at(j, p);
    return out;
}

}  // namespace gpelab
