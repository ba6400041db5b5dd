#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "gpelab/spectral.hpp"

namespace gpelab {

struct PoissonOptions {
    /// Relative residual target ||div(rho0 grad Psi) - div f|| <= tol * ||div f||.
    double tol = 1e-10;
    int max_iterations = 500;
};

struct PoissonSolution {
    TorusField potential;  ///< zero-mean Psi
    double residual = 0.0; ///< final relative residual
    int iterations = 0;
};

/// H_{rho0} f = f - rho0 grad Psi and H^perp_{rho0} f = rho0 grad Psi, orthogonal in <.,.>_sigma.
struct WeightedDecomposition {
    TorusField solenoidal;
    TorusField gradient_part;
    TorusField potential;
    double residual = 0.0;
    int iterations = 0;
};

namespace detail {

/// A Psi = -div(rho0 grad Psi) with spectral derivatives; symmetric positive semidefinite in the
/// grid inner product, kernel = constants and Nyquist modes.
inline TorusField weighted_operator(const TorusField& psi, const TorusField& rho0) {
    auto flux = scale_pointwise(rho0, gradient(psi));
    auto out = divergence(flux);
    out *= -1.0;
    return out;
}

/// Constant-coefficient inverse of -rho_bar Laplace on the zero-mean, non-Nyquist subspace.
inline TorusField laplace_preconditioner(const TorusField& r, double rho_bar) {
    const auto& g = r.grid();
    auto s = transform_forward(r);
    for (std::size_t k = 0; k < g.points(); ++k) {
        double ksq = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            double ka = g.derivative_wavenumber(k, a);
            ksq += ka * ka;
        }
        s.at(0, k) = ksq > 0.0 ? s.at(0, k) / (rho_bar * ksq) : cplx(0.0);
    }
    return transform_inverse(s, true);
}

inline double grid_dot(const TorusField& a, const TorusField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.points(); ++i) s += a.at(0, i).real() * b.at(0, i).real();
    return s * a.grid().cell_volume();
}

/// Largest/smallest Ritz values of the Lanczos tridiagonal implied by the CG coefficients.
inline double lanczos_condition(const std::vector<double>& alphas, const std::vector<double>& betas) {
    const int m = static_cast<int>(alphas.size());
    if (m == 0) return 1.0;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        t(i, i) = 1.0 / alphas[i] + (i > 0 ? betas[i - 1] / alphas[i - 1] : 0.0);
        if (i + 1 < m) {
            double off = std::sqrt(betas[i]) / alphas[i];
            t(i, i + 1) = off;
            t(i + 1, i) = off;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return ev(m - 1) / std::max(ev(0), 1e-300);
}

}  // namespace detail

/// Solves div(rho0 grad Psi) = div f with zero mean by preconditioned conjugate gradients
/// restricted to the nonzero Fourier modes.
inline PoissonSolution solve_weighted_poisson(const TorusField& f, const TorusField& rho0,
                                              const PoissonOptions& opt = {}) {
    const auto& g = f.grid();
    require_components(f, g.dim(), "solve_weighted_poisson");
    require_components(rho0, 1, "solve_weighted_poisson: rho0");
    require_same_grid(f, rho0, "solve_weighted_poisson");
    require_positive(rho0, "solve_weighted_poisson: rho0");
    if (!(opt.tol > 0.0)) throw InvalidArgument("poisson tolerance must be positive");

    const double rho_bar = mean(rho0);
    auto b = divergence(f);
    b *= -1.0;
    b.make_real();

    PoissonSolution sol{TorusField(g, 1, true), 0.0, 0};
    const double bnorm = std::sqrt(detail::grid_dot(b, b));
    if (bnorm == 0.0) return sol;

    auto& x = sol.potential;
    TorusField r = b;
    TorusField z = detail::laplace_preconditioner(r, rho_bar);
    TorusField p = z;
    double rz = detail::grid_dot(r, z);
    std::vector<double> alphas, betas;

    double rel = 1.0;
    int it = 0;
    while (it < opt.max_iterations) {
        auto ap = detail::weighted_operator(p, rho0);
        double pap = detail::grid_dot(p, ap);
        double alpha = rz / pap;
        x.axpy(alpha, p);
        r.axpy(-alpha, ap);
        ++it;
        alphas.push_back(alpha);
        rel = std::sqrt(detail::grid_dot(r, r)) / bnorm;
        if (rel <= opt.tol) break;
        z = detail::laplace_preconditioner(r, rho_bar);
        double rz_new = detail::grid_dot(r, z);
        double beta = rz_new / rz;
        betas.push_back(beta);
        rz = rz_new;
        p *= beta;
        p += z;
    }

    double shift = mean(x);
    for (auto& v : x.values()) v = cplx(v.real() - shift, 0.0);
    auto true_r = detail::weighted_operator(x, rho0) - b;
    sol.residual = std::sqrt(detail::grid_dot(true_r, true_r)) / bnorm;
    sol.iterations = it;
    if (rel > opt.tol && sol.residual > opt.tol) {
        throw ConvergenceFailure("weighted Poisson CG exceeded " + std::to_string(opt.max_iterations) +
                                     " iterations (relative residual " + std::to_string(sol.residual) +
                                     ")",
                                 detail::lanczos_condition(alphas, betas));
    }
    return sol;
}

/// Weighted Helmholtz decomposition of a real vector field.
inline WeightedDecomposition project(const TorusField& f, const TorusField& rho0,
                                     const PoissonOptions& opt = {}) {
    auto sol = solve_weighted_poisson(f, rho0, opt);
    WeightedDecomposition d;
    d.gradient_part = scale_pointwise(rho0, gradient(sol.potential));
    d.gradient_part.make_real();
    d.solenoidal = f - d.gradient_part;
    d.solenoidal.set_real(f.is_real());
    d.potential = std::move(sol.potential);
    d.residual = sol.residual;
    d.iterations = sol.iterations;
    return d;
}

/// Classical Leray projector, multiplier I - k k^T / |k|^2 (mean mode kept).
inline TorusField leray_project(const TorusField& f) {
    const auto& g = f.grid();
    const int d = g.dim();
    require_components(f, d, "leray_project");
    auto s = transform_forward(f);
    Spectrum out = s;
    for (std::size_t k = 0; k < g.points(); ++k) {
        double kv[2] = {g.derivative_wavenumber(k, 0), d == 2 ? g.derivative_wavenumber(k, 1) : 0.0};
        double ksq = kv[0] * kv[0] + kv[1] * kv[1];
        if (ksq == 0.0) continue;
        cplx kdotf = 0.0;
        for (int a = 0; a < d; ++a) kdotf += kv[a] * s.at(a, k);
        for (int a = 0; a < d; ++a) out.at(a, k) = s.at(a, k) - kv[a] * kdotf / ksq;
    }
    return transform_inverse(out, f.is_real());
}

}  // namespace gpelab
