#pragma once

#include <cmath>
#include <vector>

#include "gpelab/fastwave.hpp"
#include "gpelab/helmholtz.hpp"

namespace gpelab {

/// Anelastic velocity with div(rho0 v) = 0 and its zero-mean pressure.
struct AnelasticState {
    TorusField v;
    TorusField pi;
    double time = 0.0;
};

struct AnelasticOptions {
    double cfl = 0.5;  ///< dt <= cfl dx / max|v|
    PoissonOptions poisson{};
};

namespace detail {

struct AnelasticForce {
    TorusField rate;      ///< d(rho0 v)/dt = -H div(rho0 v (x) v)
    TorusField pressure;  ///< rho0 grad pi = -H^perp div(rho0 v (x) v)
};

inline AnelasticForce anelastic_force(const TorusField& m, const TorusField& rho0, const PoissonOptions& po) {
    auto v = divide_pointwise(m, rho0);
    auto flux = divergence_tensor(dealias(outer_pointwise(m, v)));
    flux.make_real();
    auto d = project(flux, rho0, po);
    d.solenoidal *= -1.0;
    d.potential *= -1.0;
    return {std::move(d.solenoidal), std::move(d.potential)};
}

}  // namespace detail

inline TorusField anelastic_pressure(const TorusField& v, const TorusField& rho0, const PoissonOptions& po = {}) {
    return detail::anelastic_force(scale_pointwise(rho0, v), rho0, po).pressure;
}

/// Projects rho0 v0 onto the weighted-solenoidal fields and attaches the pressure.
inline AnelasticState make_anelastic_state(const TorusField& v0, const TorusField& rho0, double time = 0.0,
                                           const PoissonOptions& po = {}) {
    require_components(v0, rho0.grid().dim(), "make_anelastic_state");
    auto m = project(scale_pointwise(rho0, v0), rho0, po).solenoidal;
    m.make_real();
    AnelasticState s;
    s.v = divide_pointwise(m, rho0);
    s.pi = anelastic_pressure(s.v, rho0, po);
    s.time = time;
    return s;
}

inline double weighted_divergence_norm(const AnelasticState& s, const TorusField& rho0) {
    return l2_norm(divergence(scale_pointwise(rho0, s.v)));
}

inline double anelastic_kinetic_energy(const AnelasticState& s, const TorusField& rho0) {
    return 0.5 * weighted_inner_product(scale_pointwise(rho0, s.v), scale_pointwise(rho0, s.v), rho0).real();
}

inline void check_cfl(const TorusField& v, double dt, const AnelasticOptions& opt) {
    double vmax = 0.0;
    for (std::size_t i = 0; i < v.points(); ++i) {
        double s = 0.0;
        for (int c = 0; c < v.components(); ++c) s += v.re(c, i) * v.re(c, i);
        vmax = std::max(vmax, std::sqrt(s));
    }
    if (vmax > 0.0 && std::abs(dt) > opt.cfl * v.grid().spacing() / vmax)
        throw CflViolation("dt = " + std::to_string(dt) + " exceeds the CFL bound " +
                           std::to_string(opt.cfl * v.grid().spacing() / vmax));
}

/// Classical RK4 on rho0 v followed by one weighted projection of the result.
inline AnelasticState anelastic_step(const AnelasticState& s, const TorusField& rho0, double dt,
                                     const AnelasticOptions& opt = {}) {
    check_cfl(s.v, dt, opt);
    const auto& po = opt.poisson;
    auto m0 = scale_pointwise(rho0, s.v);
    auto k1 = detail::anelastic_force(m0, rho0, po).rate;
    auto k2 = detail::anelastic_force(TorusField(m0).axpy(0.5 * dt, k1), rho0, po).rate;
    auto k3 = detail::anelastic_force(TorusField(m0).axpy(0.5 * dt, k2), rho0, po).rate;
    auto k4 = detail::anelastic_force(TorusField(m0).axpy(dt, k3), rho0, po).rate;
    auto m = m0;
    m.axpy(dt / 6.0, k1).axpy(dt / 3.0, k2).axpy(dt / 3.0, k3).axpy(dt / 6.0, k4);
    m = project(m, rho0, po).solenoidal;
    m.make_real();
    AnelasticState out;
    out.v = divide_pointwise(m, rho0);
    out.pi = anelastic_pressure(out.v, rho0, po);
    out.time = s.time + dt;
    return out;
}

/// Oscillating amplitudes of V0 in the retained eigenbasis.
struct OscillatingState {
    EigenCoordinates b;
    double time = 0.0;
};

/// dV0/dt = -Q1(v, V0) - Q2(V0, V0).
inline EigenCoordinates oscillating_rhs(const EigenCoordinates& b, const TorusField& v, const EigenSystem& e,
                                        const ResonanceSet& rs) {
    if (b.size() != e.size()) throw ShapeMismatch("oscillating_rhs: coordinates do not match the eigensystem");
    auto out = q1(v, b, e);
    out += q2(b, b, e, rs);
    out *= -1.0;
    return out;
}

inline EigenCoordinates oscillating_rhs(const OscillatingState& s, const AnelasticState& a, const EigenSystem& e,
                                        const ResonanceSet& rs) {
    return oscillating_rhs(s.b, a.v, e, rs);
}

struct CoupledOptions {
    double dt = 0.01;
    AnelasticOptions anelastic{};
};

struct CoupledSample {
    AnelasticState flow;
    OscillatingState wave;
    double kinetic_energy = 0.0;   ///< (1/2) int rho0 |v|^2
    double wave_energy = 0.0;      ///< (1/2) ||V0||^2
    double divergence_norm = 0.0;  ///< ||div(rho0 v)||
};

/// Joint RK4 on (rho0 v, V0) with a projection of rho0 v after every full step. Steps shorten to land
/// on each output time.
inline std::vector<CoupledSample> coupled_evolve(AnelasticState a, OscillatingState o, const TorusField& rho0,
                                                 const EigenSystem& e, const ResonanceSet& rs,
                                                 const std::vector<double>& output_times,
                                                 const CoupledOptions& opt = {}) {
    if (!(opt.dt > 0.0)) throw InvalidArgument("coupled_evolve: dt must be positive");
    const auto& po = opt.anelastic.poisson;
    auto sample = [&](const AnelasticState& fa, const OscillatingState& fo) {
        return CoupledSample{fa, fo, anelastic_kinetic_energy(fa, rho0), 0.5 * norm_sq(fo.b),
                             weighted_divergence_norm(fa, rho0)};
    };
    std::vector<CoupledSample> out;
    for (double target : output_times) {
        if (target < a.time - 1e-13 * (1.0 + std::abs(target)))
            throw InvalidArgument("coupled_evolve: output times must be nondecreasing");
        while (target - a.time > 1e-13 * (1.0 + std::abs(target))) {
            double h = std::min(opt.dt, target - a.time);
            check_cfl(a.v, h, opt.anelastic);
            auto m0 = scale_pointwise(rho0, a.v);
            auto stage = [&](const TorusField& m, const EigenCoordinates& b) {
                auto f = detail::anelastic_force(m, rho0, po).rate;
                auto g = oscillating_rhs(b, divide_pointwise(m, rho0), e, rs);
                return std::make_pair(std::move(f), std::move(g));
            };
            auto [f1, g1] = stage(m0, o.b);
            auto [f2, g2] = stage(TorusField(m0).axpy(0.5 * h, f1), EigenCoordinates(o.b).axpy(0.5 * h, g1));
            auto [f3, g3] = stage(TorusField(m0).axpy(0.5 * h, f2), EigenCoordinates(o.b).axpy(0.5 * h, g2));
            auto [f4, g4] = stage(TorusField(m0).axpy(h, f3), EigenCoordinates(o.b).axpy(h, g3));
            auto m = m0;
            m.axpy(h / 6.0, f1).axpy(h / 3.0, f2).axpy(h / 3.0, f3).axpy(h / 6.0, f4);
            m = project(m, rho0, po).solenoidal;
            m.make_real();
            o.b.axpy(h / 6.0, g1).axpy(h / 3.0, g2).axpy(h / 3.0, g3).axpy(h / 6.0, g4);
            a.v = divide_pointwise(m, rho0);
            a.time += h;
            o.time = a.time;
        }
        a.time = target;
        o.time = target;
        a.pi = anelastic_pressure(a.v, rho0, po);
        out.push_back(sample(a, o));
    }
    return out;
}

}  // namespace gpelab
