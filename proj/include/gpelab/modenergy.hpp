#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "gpelab/fastwave.hpp"
#include "gpelab/gpe.hpp"
#include "gpelab/hydro.hpp"
#include "gpelab/limits.hpp"

namespace gpelab {

struct ModulatedEnergyReport {
    double time = 0.0;
    double H = 0.0;
    double kinetic = 0.0;      ///< (1/2) int |(eps^a grad - i varpi) psi|^2
    double fluctuation = 0.0;  ///< (1/2) int |phi - L1 V0|^2
    double quantum = 0.0;      ///< (eps^{2a}/2) int |grad sqrt(rho)|^2
    double current = 0.0;      ///< (1/2) int |J - rho varpi|^2 / rho
    double regrouped = 0.0;    ///< quantum + current + fluctuation
    double W = 0.0;
    double S = 0.0;
    double density_error = 0.0;  ///< ||rho - rho0||
    /// int (J - rho0 v) . mode_k per component, signed.
    std::array<std::array<double, 2>, test_mode_count> current_pairings{};
    double l43_defect = 0.0;  ///< ||J - rho0 v - sqrt(rho0) L2 V0||_{4/3}
    double l43_bound = 0.0;   ///< Hoelder bound of l43_defect
};

/// H^eps and its corrections at the common time of the three inputs.
inline ModulatedEnergyReport modulated_energy(const WaveState& wave, const AnelasticState& flow,
                                              const OscillatingState& osc, const EigenSystem& e) {
    const double t = wave.time;
    const double tol = 1e-9 * (1.0 + std::abs(t));
    if (std::abs(flow.time - t) > tol || std::abs(osc.time - t) > tol)
        throw InvalidArgument("modulated_energy: inputs are at different times (" + std::to_string(t) + ", " +
                              std::to_string(flow.time) + ", " + std::to_string(osc.time) + ")");
    const auto& g = wave.psi.grid();
    const int d = g.dim();
    const double ea = std::pow(wave.eps, wave.alpha);
    const auto& rho0 = wave.rho0;

    auto lv = reconstruct(wave_group(osc.b, e, t / wave.eps), e);
    auto varpi = flow.v + divide_pointwise(lv.vector, e.sqrt_rho0);
    auto grad = gradient(wave.psi);
    auto h = observables(wave);

    ModulatedEnergyReport r;
    r.time = t;
    double kin = 0.0, fluc = 0.0, quant = 0.0, cur = 0.0, w = 0.0, s = 0.0, derr = 0.0;
    TorusField defect(g, d, true), modulated(g, d, true);
    for (std::size_t i = 0; i < g.points(); ++i) {
        const cplx z = wave.psi.at(0, i);
        const double rho = h.rho.re(0, i);
        const double dr = rho - rho0.re(0, i);
        double varpi_sq = 0.0, grad_rho_sq = 0.0, cur_sq = 0.0, v_sq = 0.0;
        for (int a = 0; a < d; ++a) {
            const double va = varpi.re(a, i);
            kin += std::norm(ea * grad.at(a, i) - cplx(0.0, va) * z);
            const double grho = 2.0 * (std::conj(z) * grad.at(a, i)).real();
            grad_rho_sq += grho * grho;
            const double c = h.J.re(a, i) - rho * va;
            cur_sq += c * c;
            varpi_sq += va * va;
            v_sq += flow.v.re(a, i) * flow.v.re(a, i);
            defect.at(a, i) = h.J.re(a, i) - rho0.re(0, i) * flow.v.re(a, i);
            modulated.at(a, i) = h.J.re(a, i) - rho0.re(0, i) * va;
        }
        if (!(rho > 0.0))
            throw PositivityViolation("modulated_energy: density vanishes at node " + std::to_string(i));
        quant += ea * ea * grad_rho_sq / (4.0 * rho);
        cur += cur_sq / rho;
        const double f = h.phi.re(0, i) - lv.scalar.re(0, i);
        fluc += f * f;
        w += dr * varpi_sq;
        s += (0.5 * v_sq - flow.pi.re(0, i)) * dr;
        derr += dr * dr;
    }
    const double dv = g.cell_volume();
    r.kinetic = 0.5 * kin * dv;
    r.fluctuation = 0.5 * fluc * dv;
    r.quantum = 0.5 * quant * dv;
    r.current = 0.5 * cur * dv;
    r.H = r.kinetic + r.fluctuation;
    r.regrouped = r.quantum + r.current + r.fluctuation;
    r.W = -0.5 * w * dv;
    r.S = -s * dv;
    r.density_error = std::sqrt(derr * dv);

    for (int m = 0; m < test_mode_count; ++m) {
        auto mode = test_mode(g, m);
        for (int a = 0; a < d; ++a) r.current_pairings[m][a] = inner_product(mode, defect.component_field(a)).real();
    }
    r.l43_defect = lp_norm(modulated, 4.0 / 3.0);
    auto sqrt_rho = map_real(h.rho, [](double x) { return std::sqrt(x); });
    r.l43_bound = lp_norm(sqrt_rho, 4.0) * std::sqrt(2.0 * r.current) + r.density_error * lp_norm(varpi, 4.0);
    return r;
}

/// Aggregates of a report time series per ε.
struct ConvergenceSummary {
    double sup_density_error = 0.0;
    std::array<double, test_mode_count> weak_defect{};  ///< max_t |int_0^t int (J - rho0 v) . mode|
    double max_weak_defect = 0.0;
    double H0 = 0.0;
    double max_H = 0.0;
    double max_W = 0.0;  ///< max_t |W|
    double max_S = 0.0;  ///< max_t |S|
    double max_l43_defect = 0.0;
    std::vector<std::array<double, test_mode_count>> defect_series;  ///< |int_0^t int (J - rho0 v) . mode| per snapshot
};

/// Sup over snapshots and trapezoidal time integrals of the weak current defect.
inline ConvergenceSummary convergence_functionals(const std::vector<ModulatedEnergyReport>& reports) {
    if (reports.empty()) throw InvalidArgument("convergence_functionals: empty report series");
    ConvergenceSummary c;
    c.H0 = reports.front().H;
    std::array<std::array<double, 2>, test_mode_count> acc{};
    for (std::size_t n = 0; n < reports.size(); ++n) {
        const auto& r = reports[n];
        if (n > 0 && !(r.time > reports[n - 1].time))
            throw InvalidArgument("convergence_functionals: snapshot times must increase");
        c.sup_density_error = std::max(c.sup_density_error, r.density_error);
        c.max_H = std::max(c.max_H, r.H);
        c.max_W = std::max(c.max_W, std::abs(r.W));
        c.max_S = std::max(c.max_S, std::abs(r.S));
        c.max_l43_defect = std::max(c.max_l43_defect, r.l43_defect);
        if (n == 0) {
            c.defect_series.push_back({});
            continue;
        }
        const double dt = r.time - reports[n - 1].time;
        std::array<double, test_mode_count> now{};
        for (int m = 0; m < test_mode_count; ++m) {
            double sq = 0.0;
            for (int a = 0; a < 2; ++a) {
                acc[m][a] += 0.5 * dt * (r.current_pairings[m][a] + reports[n - 1].current_pairings[m][a]);
                sq += acc[m][a] * acc[m][a];
            }
            c.weak_defect[m] = std::max(c.weak_defect[m], std::sqrt(sq));
            now[m] = std::sqrt(sq);
        }
        c.defect_series.push_back(now);
    }
    for (double v : c.weak_defect) c.max_weak_defect = std::max(c.max_weak_defect, v);
    return c;
}

}  // namespace gpelab
