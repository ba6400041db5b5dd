#pragma once

// Shared helpers and independent oracles for the test suites.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "gpelab/gpelab.hpp"

namespace gpelab::testing {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Smooth real trigonometric polynomial with random coefficients on modes |k_a| <= kmax.
inline TorusField random_smooth(const TorusGrid& g, std::mt19937_64& rng, int kmax = 4, double amp = 1.0,
                                bool zero_mean = false) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Spectrum s{g, 1, std::vector<cplx>(g.points())};
    const int k2 = g.dim() == 2 ? kmax : 0;
    for (int a = -kmax; a <= kmax; ++a)
        for (int b = -k2; b <= k2; ++b) {
            if (zero_mean && a == 0 && b == 0) continue;
            double decay = amp / (1.0 + a * a + b * b);
            s.at(0, g.flat_index({a, b})) = decay * cplx(nd(rng), nd(rng));
        }
    // Taking the real part symmetrizes the spectrum.
    return transform_inverse(s, true);
}

inline TorusField random_vector(const TorusGrid& g, std::mt19937_64& rng, int kmax = 4, double amp = 1.0) {
    TorusField v(g, g.dim(), true);
    for (int c = 0; c < g.dim(); ++c) v.set_component(c, random_smooth(g, rng, kmax, amp));
    return v;
}

/// Positive background with max / min equal to `contrast`.
inline TorusField random_background(const TorusGrid& g, std::mt19937_64& rng, double contrast, int kmax = 3) {
    auto f = random_smooth(g, rng, kmax, 1.0, true);
    double lo = f.min_real(), hi = -f.min_real();
    for (const auto& v : f.values()) hi = std::max(hi, v.real());
    // exp(c (f - lo)), scaled so that exp(c (hi - lo)) = contrast
    const double c = std::log(contrast) / (hi - lo);
    return map_real(f, [&](double x) { return std::exp(c * (x - lo)); });
}

/// Random conjugate-symmetric eigencoordinates with decaying amplitudes.
inline EigenCoordinates random_coords(int m, std::mt19937_64& rng, double amp = 1.0, int active = -1) {
    std::normal_distribution<double> nd(0.0, 1.0);
    EigenCoordinates a(m);
    for (int j = 0; j < m; ++j) {
        if (active >= 0 && j >= active) break;
        cplx z = amp * cplx(nd(rng), nd(rng)) / (1.0 + 0.1 * j);
        a.plus[j] = z;
        a.minus[j] = std::conj(z);
    }
    return a;
}

/// Dense spectral differentiation matrix along `axis`, built column by column from unit vectors.
inline Eigen::MatrixXd differentiation_matrix(const TorusGrid& g, int axis) {
    const auto n = static_cast<Eigen::Index>(g.points());
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        TorusField e(g, 1, true);
        e.at(0, static_cast<std::size_t>(c)) = 1.0;
        auto de = gradient(e);
        for (Eigen::Index r = 0; r < n; ++r) d(r, c) = de.re(axis, static_cast<std::size_t>(r));
    }
    return d;
}

/// Minimum-norm dense solution of sum_a D_a diag(rho0) D_a psi = sum_a D_a f_a.
inline TorusField dense_weighted_poisson(const TorusField& f, const TorusField& rho0) {
    const auto& g = f.grid();
    const auto n = static_cast<Eigen::Index>(g.points());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = rho0.re(0, static_cast<std::size_t>(i));
    for (int ax = 0; ax < g.dim(); ++ax) {
        auto d = differentiation_matrix(g, ax);
        a += d * r.asDiagonal() * d;
        Eigen::VectorXd fa(n);
        for (Eigen::Index i = 0; i < n; ++i) fa(i) = f.re(ax, static_cast<std::size_t>(i));
        b += d * fa;
    }
    Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(b);
    TorusField out(g, 1, true);
    for (Eigen::Index i = 0; i < n; ++i) out.at(0, static_cast<std::size_t>(i)) = x(i);
    return out;
}

/// Incompressible Euler on T^2 in Fourier space with the Leray multiplier, RK4 and a final
/// projection per step; 2/3-truncated products.
class LerayEuler {
public:
    explicit LerayEuler(const TorusGrid& g) : g_(g) {}

    TorusField project(const TorusField& v) const {
        auto s = transform_forward(v);
        for (std::size_t k = 0; k < g_.points(); ++k) {
            const double kx = g_.derivative_wavenumber(k, 0), ky = g_.derivative_wavenumber(k, 1);
            const double k2 = kx * kx + ky * ky;
            if (k2 == 0.0) continue;
            cplx dot = kx * s.at(0, k) + ky * s.at(1, k);
            s.at(0, k) -= kx * dot / k2;
            s.at(1, k) -= ky * dot / k2;
        }
        return transform_inverse(s, true);
    }

    TorusField rhs(const TorusField& v) const {
        TorusField flux(g_, 2, true);
        for (int i = 0; i < 2; ++i) {
            Spectrum acc{g_, 1, std::vector<cplx>(g_.points())};
            for (int j = 0; j < 2; ++j) {
                TorusField prod(g_, 1, true);
                for (std::size_t p = 0; p < g_.points(); ++p) prod.at(0, p) = v.re(i, p) * v.re(j, p);
                auto ps = transform_forward(prod);
                for (std::size_t k = 0; k < g_.points(); ++k) {
                    auto lk = g_.lattice(k);
                    bool keep = 3 * std::abs(lk[0]) < g_.n() && 3 * std::abs(lk[1]) < g_.n();
                    if (keep) acc.at(0, k) += cplx(0.0, g_.derivative_wavenumber(k, j)) * ps.at(0, k);
                }
            }
            flux.set_component(i, transform_inverse(acc, true));
        }
        auto out = project(flux);
        out *= -1.0;
        return out;
    }

    TorusField step(const TorusField& v, double dt) const {
        auto k1 = rhs(v);
        auto k2 = rhs(TorusField(v).axpy(0.5 * dt, k1));
        auto k3 = rhs(TorusField(v).axpy(0.5 * dt, k2));
        auto k4 = rhs(TorusField(v).axpy(dt, k3));
        auto out = v;
        out.axpy(dt / 6.0, k1).axpy(dt / 3.0, k2).axpy(dt / 3.0, k3).axpy(dt / 6.0, k4);
        return project(out);
    }

private:
    TorusGrid g_;
};

/// Plain rectangle-rule integral of a function over [0, period)^dim with `n` points per axis.
inline double fine_quadrature(int dim, int n, const std::function<double(double, double)>& f,
                              double period = two_pi) {
    const double h = period / n;
    double s = 0.0;
    if (dim == 1) {
        for (int i = 0; i < n; ++i) s += f(i * h, 0.0);
        return s * h;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += f(i * h, j * h);
    return s * h * h;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline double max_abs_diff(const TorusField& a, const TorusField& b) { return (a - b).max_abs(); }

}  // namespace gpelab::testing
