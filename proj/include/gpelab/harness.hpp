#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "gpelab/config.hpp"
#include "gpelab/fastwave.hpp"
#include "gpelab/gpe.hpp"
#include "gpelab/helmholtz.hpp"
#include "gpelab/hydro.hpp"
#include "gpelab/io.hpp"
#include "gpelab/limits.hpp"
#include "gpelab/modenergy.hpp"

namespace gpelab {

/// Everything the sweep shares across eps: the limit systems do not depend on eps.
struct ScenarioSetup {
    ScenarioConfig config;
    TorusGrid grid;
    TorusField rho0;
    InitialDataSpec spec;
    TorusField j0;  ///< eps -> 0 limit of the initial current
    PoissonOptions poisson;
    EigenSystem eig;
    ResonanceSet resonances;
    AnelasticState flow0;
    OscillatingState wave0;
};

/// rho0 v = rot(g) = (d_y g, -d_x g); divergence free for any g.
inline TorusField stream_momentum(const TorusField& g) {
    auto grad = gradient(g);
    TorusField m(g.grid(), 2, true);
    m.set_component(0, grad.component_field(1));
    m.set_component(1, -1.0 * grad.component_field(0));
    return m;
}

inline ScenarioSetup prepare_scenario(const ScenarioConfig& c) {
    ScenarioSetup s;
    s.config = c;
    s.grid = make_grid(c);
    const auto& g = s.grid;
    s.rho0 = background_density(c, g);
    s.poisson.tol = c.poisson_tol;
    auto [phi, phase] = perturbed_series(c);
    s.spec.rho0 = s.rho0;
    s.spec.phi0 = evaluate_series(phi, g);
    s.spec.winding = c.winding;
    TorusField m(g, g.dim(), true);
    for (std::size_t i = 0; i < g.points(); ++i)
        for (int a = 0; a < g.dim(); ++a) m.at(a, i) = c.winding[a];
    if (c.phase_kind == PhaseKind::wellprepared) {
        // rho0 (m + grad S0) weighted solenoidal: S0 = -Psi of the decomposition of rho0 m
        auto d = project(scale_pointwise(s.rho0, m), s.rho0, s.poisson);
        s.spec.S0 = -1.0 * d.potential;
        s.spec.S0.make_real();
    } else {
        s.spec.S0 = evaluate_series(phase, g);
    }

    TorusField phi_limit = s.spec.phi0;
    if (!c.psi_file.empty()) {
        auto snap = read_snapshot(c.base_dir / c.psi_file);
        if (snap.psi.grid().dim() != g.dim() || snap.psi.grid().n() != g.n())
            throw ConfigError("psi_file grid does not match [grid]");
        s.spec.psi = snap.psi;
        auto h = observables(snap);
        s.j0 = h.J;
        phi_limit = h.phi;
    } else if (c.stream) {
        s.j0 = stream_momentum(evaluate_series(*c.stream, g));
    } else {
        s.j0 = scale_pointwise(s.rho0, gradient(s.spec.S0) + m);
    }

    EigenOptions eo;
    eo.modes = c.modes;
    eo.cluster_scale = c.cluster_scale;
    s.eig = eigendecompose(assemble_operator(s.rho0, c.effective_cutoff()), eo);
    s.resonances = find_resonances(s.eig, {c.resonance_scale, c.gap_tol});
    s.flow0 = make_anelastic_state(divide_pointwise(s.j0, s.rho0), s.rho0, 0.0, s.poisson);
    s.wave0 = {expand(fastwave_vector(phi_limit, s.j0, s.rho0, s.poisson), s.eig).coords, 0.0};
    return s;
}

inline CoupledOptions coupled_options(const ScenarioConfig& c) {
    CoupledOptions o;
    o.dt = c.limit_dt;
    o.anelastic.cfl = c.cfl;
    o.anelastic.poisson.tol = c.poisson_tol;
    return o;
}

inline std::vector<CoupledSample> limit_trajectory(const ScenarioSetup& s) {
    return coupled_evolve(s.flow0, s.wave0, s.rho0, s.eig, s.resonances, s.config.output_times(),
                          coupled_options(s.config));
}

inline EvolveOptions evolve_options(const ScenarioConfig& c) {
    EvolveOptions o;
    o.dt = c.gpe_dt;
    o.control = c.control;
    o.max_steps = c.max_steps;
    return o;
}

struct EpsRow {
    double eps = 0.0;
    ConvergenceSummary summary;
    std::string status = "ok";
    double runtime = 0.0;  ///< wall seconds; kept out of table.csv so reruns compare byte for byte
    long steps = 0;
    double mass_drift = 0.0;         ///< max relative
    double hamiltonian_drift = 0.0;  ///< max relative
    std::vector<ModulatedEnergyReport> reports;
};

struct ConvergenceTable {
    std::vector<EpsRow> rows;
    std::vector<CoupledSample> limit;
};

struct RunOptions {
    int jobs = 1;
    bool quiet = false;
    bool keep_reports = true;
};

namespace detail {

inline std::string eps_dir_name(double eps) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "eps_%g", eps);
    return buf;
}

inline std::vector<std::string> modenergy_header() {
    std::vector<std::string> h{"eps", "time", "H", "kineticPart", "fluctuationPart", "quantumPart", "W", "S",
                               "densityError"};
    for (int m = 1; m <= test_mode_count; ++m) h.push_back("defect_mode_" + std::to_string(m));
    return h;
}

inline void write_modenergy_rows(CsvWriter& w, double eps, const std::vector<ModulatedEnergyReport>& rs,
                                 const ConvergenceSummary& c) {
    for (std::size_t n = 0; n < rs.size(); ++n) {
        const auto& r = rs[n];
        std::vector<double> v{eps, r.time, r.H, r.kinetic, r.fluctuation, r.quantum, r.W, r.S, r.density_error};
        for (double d : c.defect_series[n]) v.push_back(d);
        w.row(v);
    }
}

inline void write_conservation(const std::filesystem::path& path, const std::vector<WaveState>& traj) {
    const int d = traj.front().psi.grid().dim();
    // C1 Hamiltonian, C2 current, C3 mass
    std::vector<std::string> h{"time", "C1", "C2_x"};
    if (d == 2) h.push_back("C2_y");
    h.push_back("C3");
    h.push_back("residual_mass");
    h.push_back("residual_momentum");
    CsvWriter w(path, h);
    std::vector<ConservationSample> res;
    if (traj.size() >= 3) res = conservation_residuals(traj);
    for (std::size_t n = 0; n < traj.size(); ++n) {
        auto q = conserved_quantities(traj[n]);
        std::vector<double> v{traj[n].time, q.hamiltonian, q.current[0]};
        if (d == 2) v.push_back(q.current[1]);
        v.push_back(q.mass);
        const bool interior = n > 0 && n + 1 < traj.size() && !res.empty();
        v.push_back(interior ? res[n - 1].residual_mass : std::nan(""));
        v.push_back(interior ? res[n - 1].residual_momentum : std::nan(""));
        w.row(v);
    }
}

}  // namespace detail

/// One eps of the sweep: GPE trajectory against the shared limit trajectory. Writes into dir when set.
inline EpsRow run_eps(const ScenarioSetup& s, const std::vector<CoupledSample>& limit, double eps,
                      const std::filesystem::path& dir = {}) {
    const auto& c = s.config;
    EpsRow row;
    row.eps = eps;
    auto start = std::chrono::steady_clock::now();
    auto wave = build_initial_state(s.spec, eps, c.alpha);
    EvolveStats stats;
    auto traj = evolve(wave, c.output_times(), evolve_options(c), &stats);
    row.steps = stats.steps;
    auto q0 = conserved_quantities(traj.front());
    for (const auto& st : traj) {
        auto q = conserved_quantities(st);
        row.mass_drift = std::max(row.mass_drift, std::abs(q.mass - q0.mass) / std::abs(q0.mass));
        row.hamiltonian_drift =
            std::max(row.hamiltonian_drift, std::abs(q.hamiltonian - q0.hamiltonian) / std::max(std::abs(q0.hamiltonian), 1e-300));
    }
    std::vector<ModulatedEnergyReport> reports;
    reports.reserve(traj.size());
    for (std::size_t n = 0; n < traj.size(); ++n)
        reports.push_back(modulated_energy(traj[n], limit[n].flow, limit[n].wave, s.eig));
    row.summary = convergence_functionals(reports);
    if (!dir.empty()) {
        std::filesystem::create_directories(dir);
        detail::write_conservation(dir / "timeseries.csv", traj);
        CsvWriter w(dir / "modenergy.csv", detail::modenergy_header());
        detail::write_modenergy_rows(w, eps, reports, row.summary);
        write_snapshot(dir / "final.snapshot", traj.back());
    }
    row.reports = std::move(reports);
    row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

inline void write_limit_csv(const std::filesystem::path& path, const std::vector<CoupledSample>& limit) {
    CsvWriter w(path, {"time", "kinetic_energy", "divergence_norm", "wave_norm_sq"});
    for (const auto& s : limit) w.row({s.flow.time, s.kinetic_energy, s.divergence_norm, 2.0 * s.wave_energy});
}

inline void write_table(const std::filesystem::path& path, const ConvergenceTable& t) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "eps,sup_density_error,max_weak_defect,H0,max_H,max_W,max_S,status\n";
    for (const auto& r : t.rows) {
        const auto& s = r.summary;
        const bool ok = r.status == "ok";
        const double nan = std::nan("");
        std::string line = CsvWriter::format(r.eps);
        for (double v : {s.sup_density_error, s.max_weak_defect, s.H0, s.max_H, s.max_W, s.max_S})
            line += "," + CsvWriter::format(ok ? v : nan);
        // status may hold an error message; keep it one CSV cell
        std::string status = r.status;
        for (char& ch : status)
            if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
        out << line << "," << status << "\n";
    }
}

/// The eps sweep. Rows run on up to opts.jobs threads; a failing row records its error and the rest go on.
inline ConvergenceTable run_scenario(const ScenarioConfig& c, const std::filesystem::path& out,
                                     const RunOptions& opts = {}) {
    if (c.stream) throw ConfigError("converge: stream-function data has no wavefunction; use anelastic or oscillate");
    if (!c.psi_file.empty() && c.eps.size() > 1)
        throw ConfigError("converge: psi_file fixes a single eps, the sweep lists " + std::to_string(c.eps.size()));
    std::filesystem::create_directories(out);
    std::ofstream(out / "config.echo") << echo_config(c);
    auto setup = prepare_scenario(c);
    ConvergenceTable table;
    table.limit = limit_trajectory(setup);
    write_limit_csv(out / "limits.csv", table.limit);

    table.rows.resize(c.eps.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < c.eps.size(); i = next++) {
            const double eps = c.eps[i];
            auto dir = out / "per-eps" / detail::eps_dir_name(eps);
            auto start = std::chrono::steady_clock::now();
            try {
                table.rows[i] = run_eps(setup, table.limit, eps, dir);
            } catch (const std::exception& e) {
                table.rows[i] = EpsRow{};
                table.rows[i].eps = eps;
                table.rows[i].status = std::string("error: ") + e.what();
                table.rows[i].runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
            if (!opts.keep_reports) table.rows[i].reports.clear();
            if (!opts.quiet) {
                std::lock_guard lock(log_mutex);
                std::cerr << "eps " << eps << ": " << table.rows[i].status << " (" << table.rows[i].runtime << " s)\n";
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(c.eps.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    write_table(out / "table.csv", table);
    CsvWriter timing(out / "timing.csv", {"eps", "runtime_s", "gpe_steps", "mass_drift", "hamiltonian_drift"});
    for (const auto& r : table.rows)
        timing.row({r.eps, r.runtime, static_cast<double>(r.steps), r.mass_drift, r.hamiltonian_drift});
    return table;
}

}  // namespace gpelab
