#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "gpelab/gpe.hpp"
#include "gpelab/helmholtz.hpp"

namespace gpelab {

struct HydroState {
    TorusField rho;  ///< |psi|^2
    TorusField J;    ///< eps^alpha Im(conj(psi) grad psi)
    TorusField e;    ///< energy density
    TorusField phi;  ///< (rho - rho0) / eps
    double time = 0.0;
    double eps = 1.0;
    double alpha = 1.0;
};

inline HydroState observables(const WaveState& s) {
    const auto& g = s.psi.grid();
    const double ea = std::pow(s.eps, s.alpha);
    HydroState h{TorusField(g, 1, true), TorusField(g, g.dim(), true), TorusField(g, 1, true),
                 TorusField(g, 1, true), s.time, s.eps, s.alpha};
    auto grad = gradient(s.psi);
    for (std::size_t i = 0; i < g.points(); ++i) {
        const cplx z = s.psi.at(0, i);
        const double r = std::norm(z);
        const double dr = r - s.rho0.re(0, i);
        double grad_sq = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            h.J.at(a, i) = ea * (std::conj(z) * grad.at(a, i)).imag();
            grad_sq += std::norm(grad.at(a, i));
        }
        h.rho.at(0, i) = r;
        h.e.at(0, i) = 0.5 * ea * ea * grad_sq + 0.5 * dr * dr / (s.eps * s.eps);
        h.phi.at(0, i) = dr / s.eps;
    }
    return h;
}

/// The three equivalent forms of the dispersive term:
/// (1/4) div(rho Hess log rho), (1/2) rho grad(Lap sqrt(rho) / sqrt(rho)),
/// (1/4) Lap grad rho - div(grad sqrt(rho) (x) grad sqrt(rho)).
struct DispersiveForms {
    TorusField log_form;
    TorusField bohm_form;
    TorusField stress_form;
};

inline DispersiveForms dispersive_term(const TorusField& rho) {
    require_components(rho, 1, "dispersive_term");
    require_positive(rho, "dispersive_term: rho");
    DispersiveForms d;
    auto log_rho = map_real(rho, [](double r) { return std::log(r); });
    d.log_form = divergence_tensor(scale_pointwise(rho, hessian(log_rho)));
    d.log_form *= 0.25;

    auto sqrt_rho = map_real(rho, [](double r) { return std::sqrt(r); });
    auto q = divide_pointwise(laplacian(sqrt_rho), sqrt_rho);
    d.bohm_form = scale_pointwise(rho, gradient(q));
    d.bohm_form *= 0.5;

    auto gs = gradient(sqrt_rho);
    d.stress_form = gradient(laplacian(rho));
    d.stress_form *= 0.25;
    d.stress_form -= divergence_tensor(outer_pointwise(gs, gs));
    return d;
}

/// Scalar weak test modes: constant, then cos and sin of k x (1D, k = 1..4) or of the wavevectors
/// (1,0), (0,1), (1,1), (1,-1) (2D).
inline constexpr int test_mode_count = 9;

inline TorusField test_mode(const TorusGrid& g, int index) {
    if (index < 0 || index >= test_mode_count) throw InvalidArgument("test mode index out of range");
    if (index == 0) return TorusField::constant(g, 1.0);
    const int pair = (index - 1) / 2;
    const bool use_sin = (index - 1) % 2 == 1;
    std::array<double, 2> k{0.0, 0.0};
    if (g.dim() == 1) {
        k[0] = pair + 1;
    } else {
        static constexpr std::array<std::array<double, 2>, 4> dirs{{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};
        k = dirs[pair];
    }
    const double kb = g.base_wavenumber();
    return TorusField::sample(g, [&](double x, double y) {
        double arg = kb * (k[0] * x + k[1] * y);
        return use_sin ? std::sin(arg) : std::cos(arg);
    });
}

/// Pairing of a scalar or vector field with one scalar test mode; vectors give the Euclidean norm
/// of the componentwise pairings.
inline double weak_pairing(const TorusField& f, const TorusField& mode) {
    double s = 0.0;
    for (int c = 0; c < f.components(); ++c) {
        double p = inner_product(mode, f.component_field(c)).real();
        s += p * p;
    }
    return std::sqrt(s);
}

struct ConservationSample {
    double time = 0.0;
    ConservedQuantities conserved;
    double residual_mass = 0.0;      ///< max over test modes
    double residual_momentum = 0.0;  ///< max over test modes
    std::array<double, test_mode_count> mass_modes{};
    std::array<double, test_mode_count> momentum_modes{};
};

/// Momentum flux in wavefunction form, eps^{2 alpha} Re(grad conj(psi) (x) grad psi) - (eps^{2 alpha} / 4) Lap rho I,
/// which equals J (x) J / rho - (eps^{2 alpha} / 4) rho Hess log rho wherever rho > 0.
inline TorusField momentum_flux_divergence(const WaveState& s, const TorusField& rho) {
    const auto& g = s.psi.grid();
    const int d = g.dim();
    const double e2a = std::pow(s.eps, 2.0 * s.alpha);
    auto grad = gradient(s.psi);
    TorusField stress(g, d * d, true);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (std::size_t p = 0; p < g.points(); ++p)
                stress.at(i * d + j, p) = e2a * (std::conj(grad.at(i, p)) * grad.at(j, p)).real();
    auto out = divergence_tensor(stress);
    auto lap_grad = gradient(laplacian(rho));
    out.axpy(-0.25 * e2a, lap_grad);
    return out;
}

/// Weak residuals of the mass and momentum laws at interior snapshots by centered differences.
inline std::vector<ConservationSample> conservation_residuals(const std::vector<WaveState>& traj) {
    if (traj.size() < 3) throw InvalidArgument("conservation_residuals needs at least 3 snapshots");
    const auto& g = traj.front().psi.grid();
    std::vector<TorusField> modes;
    for (int m = 0; m < test_mode_count; ++m) modes.push_back(test_mode(g, m));
    std::vector<HydroState> hydro;
    hydro.reserve(traj.size());
    for (const auto& s : traj) hydro.push_back(observables(s));

    std::vector<ConservationSample> out;
    for (std::size_t n = 1; n + 1 < traj.size(); ++n) {
        const auto& s = traj[n];
        const double span = traj[n + 1].time - traj[n - 1].time;
        if (!(span > 0.0)) throw InvalidArgument("conservation_residuals: snapshot times must increase");
        const auto& h = hydro[n];
        auto drho = hydro[n + 1].rho - hydro[n - 1].rho;
        drho *= 1.0 / span;
        auto mass = drho + divergence(h.J);

        auto dJ = hydro[n + 1].J - hydro[n - 1].J;
        dJ *= 1.0 / span;
        auto pressure = scale_pointwise(h.rho, gradient(h.rho - s.rho0));
        pressure *= 1.0 / (s.eps * s.eps);
        auto mom = dJ + momentum_flux_divergence(s, h.rho) + pressure;

        ConservationSample cs;
        cs.time = s.time;
        cs.conserved = conserved_quantities(s);
        for (int m = 0; m < test_mode_count; ++m) {
            cs.mass_modes[m] = weak_pairing(mass, modes[m]);
            cs.momentum_modes[m] = weak_pairing(mom, modes[m]);
            cs.residual_mass = std::max(cs.residual_mass, cs.mass_modes[m]);
            cs.residual_momentum = std::max(cs.residual_momentum, cs.momentum_modes[m]);
        }
        out.push_back(cs);
    }
    return out;
}

/// Projected forcing of the fast-wave system, assembled from its three terms.
struct FastwaveForcing {
    TorusField stress_term;       ///< -(eps^{2a}/2) H^perp div(grad psi (x) grad conj psi + c.c.)
    TorusField fluctuation_term;  ///< -(1/2) H^perp grad phi^2
    TorusField dispersion_term;   ///< (eps^{2a}/4) H^perp grad Lap rho
    TorusField total;
};

inline FastwaveForcing fastwave_forcing(const WaveState& s, const PoissonOptions& opt = {}) {
    const auto& g = s.psi.grid();
    const int d = g.dim();
    const double e2a = std::pow(s.eps, 2.0 * s.alpha);
    auto h = observables(s);
    auto grad = gradient(s.psi);
    TorusField stress(g, d * d, true);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (std::size_t p = 0; p < g.points(); ++p)
                stress.at(i * d + j, p) = 2.0 * (grad.at(i, p) * std::conj(grad.at(j, p))).real();

    auto dstress = dealias(divergence_tensor(stress));
    dstress *= -0.5 * e2a;
    auto dphi = gradient(dealiased_product(h.phi, h.phi));
    dphi *= -0.5;
    auto ddisp = gradient(laplacian(h.rho));
    ddisp *= 0.25 * e2a;

    FastwaveForcing f;
    f.stress_term = project(dstress, s.rho0, opt).gradient_part;
    f.fluctuation_term = project(dphi, s.rho0, opt).gradient_part;
    f.dispersion_term = project(ddisp, s.rho0, opt).gradient_part;
    f.total = f.stress_term + f.fluctuation_term + f.dispersion_term;
    return f;
}

}  // namespace gpelab
