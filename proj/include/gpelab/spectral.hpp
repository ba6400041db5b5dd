#pragma once

#include <cmath>
#include <vector>

#include "gpelab/fft.hpp"
#include "gpelab/field.hpp"

namespace gpelab {

/// Fourier coefficients of a field, normalized so that f(x) = sum_k c_k exp(i k.x).
struct Spectrum {
    TorusGrid grid;
    int components = 1;
    std::vector<cplx> coefficients;

    std::span<cplx> component(int c) {
        return {coefficients.data() + static_cast<std::size_t>(c) * grid.points(), grid.points()};
    }
    std::span<const cplx> component(int c) const {
        return {coefficients.data() + static_cast<std::size_t>(c) * grid.points(), grid.points()};
    }
    cplx& at(int c, std::size_t k) { return coefficients[c * grid.points() + k]; }
    const cplx& at(int c, std::size_t k) const { return coefficients[c * grid.points() + k]; }

    /// |T^n| sum_k |c_k|^2, equal to the L2 norm squared of the field by Parseval.
    double norm_sq() const {
        double s = 0.0;
        for (const auto& c : coefficients) s += std::norm(c);
        return s * grid.measure();
    }
};

inline Spectrum transform_forward(const TorusField& f) {
    Spectrum s{f.grid(), f.components(), std::vector<cplx>(f.values().size())};
    const double scale = 1.0 / static_cast<double>(f.points());
    for (int c = 0; c < f.components(); ++c) {
        detail::dft(f.grid(), f.component(c).data(), s.component(c).data(), FFTW_FORWARD);
        for (auto& v : s.component(c)) v *= scale;
    }
    return s;
}

/// Inverse transform; when `real` is set the result is symmetrized onto the real axis.
inline TorusField transform_inverse(const Spectrum& s, bool real) {
    TorusField f(s.grid, s.components, real);
    for (int c = 0; c < s.components; ++c)
        detail::dft(s.grid, s.component(c).data(), f.component(c).data(), FFTW_BACKWARD);
    if (real) f.make_real();
    return f;
}

namespace detail {

/// Applies a per-wavevector multiplier to a single spectral block and returns the grid field.
template <class Multiplier>
TorusField apply_multiplier(const Spectrum& s, int comp, bool real, Multiplier&& m) {
    Spectrum out{s.grid, 1, std::vector<cplx>(s.grid.points())};
    for (std::size_t k = 0; k < s.grid.points(); ++k) out.at(0, k) = m(k) * s.at(comp, k);
    return transform_inverse(out, real);
}

}  // namespace detail

/// Spectral gradient of a scalar field.
inline TorusField gradient(const TorusField& f) {
    require_components(f, 1, "gradient");
    const auto& g = f.grid();
    auto s = transform_forward(f);
    TorusField out(g, g.dim(), f.is_real());
    for (int a = 0; a < g.dim(); ++a) {
        auto da = detail::apply_multiplier(s, 0, f.is_real(), [&](std::size_t k) {
            return cplx(0.0, g.derivative_wavenumber(k, a));
        });
        out.set_component(a, da);
    }
    out.set_real(f.is_real());
    return out;
}

/// Spectral divergence of a vector field (dim components).
inline TorusField divergence(const TorusField& v) {
    const auto& g = v.grid();
    require_components(v, g.dim(), "divergence");
    Spectrum acc{g, 1, std::vector<cplx>(g.points())};
    for (int a = 0; a < g.dim(); ++a) {
        auto s = transform_forward(v.component_field(a));
        for (std::size_t k = 0; k < g.points(); ++k)
            acc.at(0, k) += cplx(0.0, g.derivative_wavenumber(k, a)) * s.at(0, k);
    }
    return transform_inverse(acc, v.is_real());
}

/// Divergence of a rank-2 tensor field: (div T)_i = sum_j d_j T_ij, entry (i, j) at i * dim + j.
inline TorusField divergence_tensor(const TorusField& t) {
    const auto& g = t.grid();
    const int d = g.dim();
    require_components(t, d * d, "divergence_tensor");
    TorusField out(g, d, t.is_real());
    for (int i = 0; i < d; ++i) {
        TorusField row(g, d, t.is_real());
        for (int j = 0; j < d; ++j) row.set_component(j, t.component_field(i * d + j));
        row.set_real(t.is_real());
        out.set_component(i, divergence(row));
    }
    out.set_real(t.is_real());
    return out;
}

/// Componentwise spectral Laplacian.
inline TorusField laplacian(const TorusField& f) {
    const auto& g = f.grid();
    TorusField out(g, f.components(), f.is_real());
    auto s = transform_forward(f);
    for (int c = 0; c < f.components(); ++c) {
        auto lc = detail::apply_multiplier(s, c, f.is_real(), [&](std::size_t k) {
            double ksq = 0.0;
            for (int a = 0; a < g.dim(); ++a) {
                double ka = g.derivative_wavenumber(k, a);
                ksq += ka * ka;
            }
            return cplx(-ksq, 0.0);
        });
        out.set_component(c, lc);
    }
    out.set_real(f.is_real());
    return out;
}

/// Hessian of a scalar field, entry (i, j) at component i * dim + j.
inline TorusField hessian(const TorusField& f) {
    require_components(f, 1, "hessian");
    const auto& g = f.grid();
    const int d = g.dim();
    auto s = transform_forward(f);
    TorusField out(g, d * d, f.is_real());
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            auto hij = detail::apply_multiplier(s, 0, f.is_real(), [&](std::size_t k) {
                return cplx(-g.derivative_wavenumber(k, i) * g.derivative_wavenumber(k, j), 0.0);
            });
            out.set_component(i * d + j, hij);
        }
    out.set_real(f.is_real());
    return out;
}

/// Zero-mean solution of Laplace(u) = f, ignoring the mean of f.
inline TorusField inverse_laplacian(const TorusField& f) {
    const auto& g = f.grid();
    TorusField out(g, f.components(), f.is_real());
    auto s = transform_forward(f);
    for (int c = 0; c < f.components(); ++c) {
        auto uc = detail::apply_multiplier(s, c, f.is_real(), [&](std::size_t k) {
            double ksq = 0.0;
            for (int a = 0; a < g.dim(); ++a) {
                double ka = g.derivative_wavenumber(k, a);
                ksq += ka * ka;
            }
            return ksq > 0.0 ? cplx(-1.0 / ksq, 0.0) : cplx(0.0, 0.0);
        });
        out.set_component(c, uc);
    }
    out.set_real(f.is_real());
    return out;
}

/// True when integer mode k survives the two-thirds truncation on a grid of n points.
inline bool inside_two_thirds(const TorusGrid& g, std::size_t flat) {
    auto k = g.lattice(flat);
    for (int a = 0; a < g.dim(); ++a)
        if (3 * std::abs(k[a]) >= g.n()) return false;
    return true;
}

/// Removes every Fourier mode outside the two-thirds band.
inline TorusField dealias(const TorusField& f) {
    auto s = transform_forward(f);
    for (int c = 0; c < f.components(); ++c)
        for (std::size_t k = 0; k < f.points(); ++k)
            if (!inside_two_thirds(f.grid(), k)) s.at(c, k) = 0.0;
    return transform_inverse(s, f.is_real());
}

/// Pointwise product followed by two-thirds truncation; `a` must be scalar or match `b`.
inline TorusField dealiased_product(const TorusField& a, const TorusField& b) {
    if (a.components() == 1) return dealias(scale_pointwise(a, b));
    return dealias(dot_pointwise(a, b));
}

/// Two-thirds truncated tensor a (x) b.
inline TorusField dealiased_outer(const TorusField& a, const TorusField& b) {
    return dealias(outer_pointwise(a, b));
}

/// Rectangle-rule integral of each component summed: sum_c sum_i f_c(x_i) dV.
inline cplx integral(const TorusField& f) {
    cplx s = 0.0;
    for (const auto& v : f.values()) s += v;
    return s * f.grid().cell_volume();
}

inline double mean(const TorusField& f) { return integral(f).real() / f.grid().measure(); }

/// <f, g> = integral of conj(f) . g.
inline cplx inner_product(const TorusField& f, const TorusField& g) {
    f.require_same_shape(g, "inner_product");
    cplx s = 0.0;
    for (std::size_t i = 0; i < f.values().size(); ++i) s += std::conj(f.values()[i]) * g.values()[i];
    return s * f.grid().cell_volume();
}

/// <f, g>_sigma = integral of conj(f) . g / rho0, sigma = 1 / rho0.
inline cplx weighted_inner_product(const TorusField& f, const TorusField& g, const TorusField& rho0) {
    f.require_same_shape(g, "weighted_inner_product");
    require_components(rho0, 1, "weighted_inner_product");
    require_same_grid(f, rho0, "weighted_inner_product");
    require_positive(rho0, "weighted_inner_product: rho0");
    cplx s = 0.0;
    for (int c = 0; c < f.components(); ++c)
        for (std::size_t i = 0; i < f.points(); ++i)
            s += std::conj(f.at(c, i)) * g.at(c, i) / rho0.at(0, i).real();
    return s * f.grid().cell_volume();
}

inline double l2_norm_sq(const TorusField& f) { return inner_product(f, f).real(); }
inline double l2_norm(const TorusField& f) { return std::sqrt(l2_norm_sq(f)); }

/// (integral |f|^p)^(1/p) with |f| the pointwise Euclidean magnitude.
inline double lp_norm(const TorusField& f, double p) {
    auto m = magnitude_sq(f);
    double s = 0.0;
    for (const auto& v : m.values()) s += std::pow(v.real(), 0.5 * p);
    return std::pow(s * f.grid().cell_volume(), 1.0 / p);
}

/// max_i |f(x_i)| over all components.
inline double max_norm(const TorusField& f) { return f.max_abs(); }

}  // namespace gpelab
