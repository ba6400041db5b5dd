#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "gpelab/spectral.hpp"

namespace gpelab {

/// Wavefunction of the scaled equation together with its parameters.
struct WaveState {
    TorusField psi;   ///< complex scalar
    double eps = 1.0;
    double alpha = 1.0;
    TorusField rho0;  ///< real positive background
    double time = 0.0;
};

/// WKB-plus-winding initial data: psi0 = sqrt(rho0 + eps phi0) exp(i (S0 + m.x) / eps^alpha).
struct InitialDataSpec {
    TorusField rho0;
    TorusField phi0;
    TorusField S0;
    std::array<double, 2> winding{0.0, 0.0};
    /// Replaces the WKB construction when set; must be a complex scalar field on the rho0 grid.
    std::optional<TorusField> psi;
};

/// Integer winding count m / eps^alpha per axis; rejects non-integer values.
inline std::array<long, 2> phase_winding(const InitialDataSpec& spec, double eps, double alpha) {
    std::array<long, 2> w{0, 0};
    const double scale = std::pow(eps, alpha);
    const double kb = spec.rho0.grid().base_wavenumber();
    for (int a = 0; a < spec.rho0.grid().dim(); ++a) {
        double q = spec.winding[a] / (scale * kb);
        double r = std::round(q);
        if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q)))
            throw InvalidArgument("winding " + std::to_string(spec.winding[a]) + " gives phase winding " +
                                  std::to_string(q) + " per period at eps = " + std::to_string(eps) +
                                  "; it must be an integer for a single-valued wavefunction");
        w[a] = static_cast<long>(r);
    }
    return w;
}

inline WaveState build_initial_state(const InitialDataSpec& spec, double eps, double alpha) {
    if (!(eps > 0.0) || !(alpha > 0.0)) throw InvalidArgument("eps and alpha must be positive");
    const auto& g = spec.rho0.grid();
    require_components(spec.rho0, 1, "build_initial_state: rho0");
    require_positive(spec.rho0, "build_initial_state: rho0");
    WaveState st{TorusField(g, 1, false), eps, alpha, spec.rho0, 0.0};
    if (spec.psi) {
        require_components(*spec.psi, 1, "build_initial_state: psi");
        require_same_grid(*spec.psi, spec.rho0, "build_initial_state: psi");
        st.psi = *spec.psi;
        st.psi.set_real(false);
        return st;
    }
    require_same_grid(spec.phi0, spec.rho0, "build_initial_state: phi0");
    require_same_grid(spec.S0, spec.rho0, "build_initial_state: S0");
    auto rho = spec.rho0;
    rho.axpy(eps, spec.phi0);
    require_positive(rho, "build_initial_state: rho0 + eps phi0");
    auto w = phase_winding(spec, eps, alpha);
    const double scale = std::pow(eps, alpha);
    for (std::size_t i = 0; i < g.points(); ++i) {
        auto idx = g.axis_indices(i);
        // Winding phase in exact lattice arithmetic so that it closes across the period.
        long turns = w[0] * idx[0] + (g.dim() == 2 ? w[1] * idx[1] : 0);
        double lattice_phase = 2.0 * std::numbers::pi * static_cast<double>(turns % g.n()) / g.n();
        double phase = spec.S0.re(0, i) / scale + lattice_phase;
        st.psi.at(0, i) = std::sqrt(rho.re(0, i)) * std::polar(1.0, phase);
    }
    return st;
}

struct StepControl {
    double c1 = 1.0 / 16.0;
    double c2 = 0.25;
};

/// dt0 = min(c1 eps^2, c2 / (eps^alpha kmax^2)).
inline double default_time_step(const TorusGrid& g, double eps, double alpha, const StepControl& c = {}) {
    return std::min(c.c1 * eps * eps, c.c2 / (std::pow(eps, alpha) * g.max_wavenumber_sq()));
}

namespace detail {

inline void kinetic_substep(TorusField& psi, double eps_alpha, double h) {
    const auto& g = psi.grid();
    auto s = transform_forward(psi);
    for (std::size_t k = 0; k < g.points(); ++k)
        s.at(0, k) *= std::polar(1.0, -0.5 * eps_alpha * g.wavenumber_sq(k) * h);
    psi = transform_inverse(s, false);
}

inline void potential_substep(TorusField& psi, const TorusField& rho0, double rate, double h) {
    for (std::size_t i = 0; i < psi.points(); ++i) {
        cplx& z = psi.at(0, i);
        z *= std::polar(1.0, -(std::norm(z) - rho0.re(0, i)) * rate * h);
    }
}

}  // namespace detail

/// Strang step for i psi_t = -(eps^alpha / 2) Lap psi + eps^-(2+alpha) (|psi|^2 - rho0) psi.
/// Negative dt integrates backwards.
inline WaveState strang_step(const WaveState& state, double dt) {
    if (!std::isfinite(dt) || dt == 0.0) throw InvalidArgument("strang_step: dt must be finite and nonzero");
    WaveState out = state;
    const double ea = std::pow(state.eps, state.alpha);
    const double rate = std::pow(state.eps, -(2.0 + state.alpha));
    detail::kinetic_substep(out.psi, ea, 0.5 * dt);
    detail::potential_substep(out.psi, state.rho0, rate, dt);
    detail::kinetic_substep(out.psi, ea, 0.5 * dt);
    out.time = state.time + dt;
    return out;
}

struct EvolveOptions {
    double dt = 0.0;         ///< fixed step; 0 selects default_time_step
    StepControl control{};
    long max_steps = 50'000'000;
    /// Step-doubling error control when positive (relative L2 error per step).
    double tolerance = 0.0;
};

struct EvolveStats {
    long steps = 0;
    long rejected = 0;
    double last_dt = 0.0;
};

/// Advances to each requested output time in turn; the last step before an output is shortened
/// to land on it exactly. Times must be nondecreasing and not before state.time.
inline std::vector<WaveState> evolve(WaveState state, const std::vector<double>& output_times,
                                     const EvolveOptions& opt = {}, EvolveStats* stats = nullptr) {
    EvolveStats local;
    EvolveStats& st = stats ? *stats : local;
    double dt = opt.dt > 0.0 ? opt.dt : default_time_step(state.psi.grid(), state.eps, state.alpha, opt.control);
    std::vector<WaveState> out;
    out.reserve(output_times.size());
    double prev = state.time;
    for (double target : output_times) {
        if (target < prev - 1e-14 * (1.0 + std::abs(prev)))
            throw InvalidArgument("evolve: output times must be nondecreasing and after the initial time");
        prev = target;
        while (target - state.time > 1e-13 * (1.0 + std::abs(target))) {
            if (st.steps >= opt.max_steps)
                throw ConvergenceFailure("evolve: step budget of " + std::to_string(opt.max_steps) +
                                             " exhausted at t = " + std::to_string(state.time),
                                         dt);
            double h = std::min(dt, target - state.time);
            if (opt.tolerance > 0.0) {
                auto coarse = strang_step(state, h);
                auto fine = strang_step(strang_step(state, 0.5 * h), 0.5 * h);
                double err = l2_norm(fine.psi - coarse.psi) / std::max(l2_norm(fine.psi), 1e-300);
                double factor = err > 0.0 ? 0.9 * std::cbrt(opt.tolerance / err) : 2.0;
                factor = std::clamp(factor, 0.25, 2.0);
                ++st.steps;
                if (err > opt.tolerance) {
                    ++st.rejected;
                    dt = h * factor;
                    continue;
                }
                state = std::move(fine);
                if (h == dt) dt = h * factor;
            } else {
                state = strang_step(state, h);
                ++st.steps;
            }
            st.last_dt = h;
        }
        state.time = target;
        out.push_back(state);
    }
    return out;
}

/// (C1, C2, C3): Hamiltonian, total current and mass. C2 = integral of J with
/// J = eps^alpha Im(conj(psi) grad psi), so a plane wave e^{ikx} gives C2 = +eps^alpha k |T|.
struct ConservedQuantities {
    double hamiltonian = 0.0;
    std::array<double, 2> current{0.0, 0.0};
    double mass = 0.0;
};

inline ConservedQuantities conserved_quantities(const WaveState& state) {
    const auto& g = state.psi.grid();
    const double ea = std::pow(state.eps, state.alpha);
    ConservedQuantities q;
    // Kinetic part by Parseval with the same |k|^2 as the propagator, Nyquist included.
    auto s = transform_forward(state.psi);
    double kin = 0.0;
    for (std::size_t k = 0; k < g.points(); ++k) kin += g.wavenumber_sq(k) * std::norm(s.at(0, k));
    kin *= g.measure();
    double pot = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < g.points(); ++i) {
        double r = std::norm(state.psi.at(0, i));
        pot += (r - state.rho0.re(0, i)) * (r - state.rho0.re(0, i));
        mass += r;
    }
    pot *= g.cell_volume();
    mass *= g.cell_volume();
    q.hamiltonian = 0.5 * (ea * ea * kin + pot / (state.eps * state.eps));
    q.mass = mass;
    auto grad = gradient(state.psi);
    for (int a = 0; a < g.dim(); ++a) {
        double c = 0.0;
        for (std::size_t i = 0; i < g.points(); ++i) c += (std::conj(state.psi.at(0, i)) * grad.at(a, i)).imag();
        q.current[a] = ea * c * g.cell_volume();
    }
    return q;
}

}  // namespace gpelab
