#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>

#include "gpelab/error.hpp"

namespace gpelab {

using cplx = std::complex<double>;

/// Integer wavevector on the torus lattice; the second entry is unused in 1D.
using Lattice = std::array<int, 2>;

/// Uniform periodic grid on T^n, n = 1 or 2, with the same resolution along every axis.
class TorusGrid {
public:
    TorusGrid() = default;

    TorusGrid(int dim, int points_per_dim, double period = 2.0 * std::numbers::pi)
        : dim_(dim), n_(points_per_dim), period_(period) {
        if (dim != 1 && dim != 2)
            throw InvalidArgument("grid dimension must be 1 or 2, got " + std::to_string(dim));
        if (points_per_dim < 8 || (points_per_dim & (points_per_dim - 1)) != 0)
            throw InvalidArgument("points per dimension must be a power of two >= 8, got " +
                                  std::to_string(points_per_dim));
        if (!(period > 0.0) || !std::isfinite(period))
            throw InvalidArgument("grid period must be positive and finite");
    }

    int dim() const noexcept { return dim_; }
    int n() const noexcept { return n_; }
    double period() const noexcept { return period_; }

    std::size_t points() const noexcept {
        return dim_ == 1 ? static_cast<std::size_t>(n_) : static_cast<std::size_t>(n_) * n_;
    }

    double spacing() const noexcept { return period_ / n_; }
    double cell_volume() const noexcept { return dim_ == 1 ? spacing() : spacing() * spacing(); }
    double measure() const noexcept { return dim_ == 1 ? period_ : period_ * period_; }

    /// 2π / period: physical wavenumber of the integer lattice unit.
    double base_wavenumber() const noexcept { return 2.0 * std::numbers::pi / period_; }

    /// Signed integer mode of an FFT index; the Nyquist index maps to -n/2.
    int signed_mode(int index) const noexcept { return index < n_ / 2 ? index : index - n_; }
    bool is_nyquist(int index) const noexcept { return index == n_ / 2; }

    std::array<int, 2> axis_indices(std::size_t flat) const noexcept {
        if (dim_ == 1) return {static_cast<int>(flat), 0};
        return {static_cast<int>(flat / n_), static_cast<int>(flat % n_)};
    }

    Lattice lattice(std::size_t flat) const noexcept {
        auto idx = axis_indices(flat);
        return {signed_mode(idx[0]), dim_ == 2 ? signed_mode(idx[1]) : 0};
    }

    /// Flat FFT index holding the integer wavevector k (taken modulo n).
    std::size_t flat_index(const Lattice& k) const noexcept {
        auto wrap = [this](int m) { return static_cast<std::size_t>(((m % n_) + n_) % n_); };
        return dim_ == 1 ? wrap(k[0]) : wrap(k[0]) * n_ + wrap(k[1]);
    }

    /// Physical wavenumber used by spectral derivatives along `axis`; zero on the Nyquist index
    /// so that the discrete derivative stays skew-adjoint.
    double derivative_wavenumber(std::size_t flat, int axis) const noexcept {
        int idx = axis_indices(flat)[axis];
        return is_nyquist(idx) ? 0.0 : base_wavenumber() * signed_mode(idx);
    }

    /// |k|^2 with the Nyquist entry kept, for the kinetic propagator.
    double wavenumber_sq(std::size_t flat) const noexcept {
        auto k = lattice(flat);
        double kb = base_wavenumber();
        return kb * kb * (static_cast<double>(k[0]) * k[0] + static_cast<double>(k[1]) * k[1]);
    }

    double max_wavenumber_sq() const noexcept {
        double kmax = base_wavenumber() * (n_ / 2);
        return dim_ * kmax * kmax;
    }

    std::array<double, 2> coordinates(std::size_t flat) const noexcept {
        auto idx = axis_indices(flat);
        return {idx[0] * spacing(), dim_ == 2 ? idx[1] * spacing() : 0.0};
    }

    friend bool operator==(const TorusGrid& a, const TorusGrid& b) noexcept {
        return a.dim_ == b.dim_ && a.n_ == b.n_ && a.period_ == b.period_;
    }

private:
    int dim_ = 1;
    int n_ = 64;
    double period_ = 2.0 * std::numbers::pi;
};

}  // namespace gpelab
