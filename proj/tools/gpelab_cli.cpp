// gpelab: scenario runner. Exit codes: 0 ok, 1 runtime failure, 2 usage or config error, 3 a sweep row failed.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "gpelab/harness.hpp"

namespace fs = std::filesystem;
using namespace gpelab;

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::vector<double> eps;
    int resolution = 0;
    bool quiet = false;
    int jobs = 1;
};

fs::path scenario_dir() {
    if (const char* d = std::getenv("GPELAB_SCENARIO_DIR")) return d;
#ifdef GPELAB_SCENARIO_DIR
    return GPELAB_SCENARIO_DIR;
#else
    return "scenarios";
#endif
}

/// A file path wins. Otherwise the last path component names a bundled scenario, exactly or by a
/// unique prefix, so "examples/cosine-rho0" finds cosine-rho0-1d.ini.
fs::path resolve_config(const std::string& arg) {
    fs::path p(arg);
    if (fs::is_regular_file(p)) return p;
    if (fs::is_regular_file(p.string() + ".ini")) return p.string() + ".ini";
    const auto dir = scenario_dir();
    std::string stem = p.filename().string();
    if (p.extension() == ".ini") stem = p.stem().string();
    if (!stem.empty() && fs::is_directory(dir)) {
        if (fs::is_regular_file(dir / (stem + ".ini"))) return dir / (stem + ".ini");
        std::vector<fs::path> hits;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().extension() == ".ini" && e.path().stem().string().rfind(stem, 0) == 0) hits.push_back(e.path());
        if (hits.size() == 1) return hits.front();
        if (hits.size() > 1) throw ConfigError("scenario '" + arg + "' is ambiguous in " + dir.string());
    }
    throw ConfigError("cannot open config '" + arg + "' (no such file or bundled scenario)");
}

ScenarioConfig load(const Flags& f) {
    return with_overrides(load_config(resolve_config(f.config)), f.eps, f.resolution);
}

fs::path out_dir(const Flags& f, const ScenarioConfig& c) {
    fs::path d = f.out.empty() ? fs::path("runs") / c.name : fs::path(f.out);
    fs::create_directories(d);
    return d;
}

void note(const Flags& f, const std::string& msg) {
    if (!f.quiet) std::cerr << msg << '\n';
}

int simulate(const Flags& f) {
    auto c = load(f);
    if (c.stream) throw ConfigError("simulate: stream-function data has no wavefunction");
    auto s = prepare_scenario(c);
    auto out = out_dir(f, c);
    std::ofstream(out / "config.echo") << echo_config(c);
    for (double eps : c.eps) {
        auto dir = out / "per-eps" / detail::eps_dir_name(eps);
        fs::create_directories(dir);
        EvolveStats stats;
        auto traj = evolve(build_initial_state(s.spec, eps, c.alpha), c.output_times(), evolve_options(c), &stats);
        detail::write_conservation(dir / "timeseries.csv", traj);
        write_snapshot(dir / "final.snapshot", traj.back());
        note(f, detail::eps_dir_name(eps) + ": " + std::to_string(stats.steps) + " steps");
    }
    return 0;
}

int spectrum(const Flags& f) {
    auto c = load(f);
    auto g = make_grid(c);
    auto rho0 = background_density(c, g);
    auto op = assemble_operator(rho0, c.effective_cutoff());
    EigenOptions eo;
    eo.modes = c.modes;
    eo.cluster_scale = c.cluster_scale;
    auto e = eigendecompose(op, eo);
    auto out = out_dir(f, c);
    CsvWriter w(out / "spectrum.csv", {"index", "kappa", "omega", "cluster", "matrix_residual", "grid_residual"});
    for (int j = 0; j < e.size(); ++j)
        w.row({double(j), e.kappas[j], e.omega(j), double(e.cluster_id[j]), matrix_residual(op, e, j),
               grid_residual(e, j)});
    // Fourier coefficients of each chi_j on the retained lattice
    std::vector<std::string> h{"index", "k_x"};
    if (c.dim == 2) h.push_back("k_y");
    h.push_back("re");
    h.push_back("im");
    CsvWriter m(out / "eigenmodes.csv", h);
    for (int j = 0; j < e.size(); ++j)
        for (std::size_t p = 0; p < e.basis.size(); ++p) {
            std::vector<double> v{double(j), double(e.basis[p][0])};
            if (c.dim == 2) v.push_back(e.basis[p][1]);
            v.push_back(e.coefficients[j][p].real());
            v.push_back(e.coefficients[j][p].imag());
            m.row(v);
        }
    note(f, std::to_string(e.size()) + " modes, " + std::to_string(e.clusters.size()) + " clusters");
    return 0;
}

int resonances(const Flags& f) {
    auto c = load(f);
    auto g = make_grid(c);
    EigenOptions eo;
    eo.modes = c.modes;
    eo.cluster_scale = c.cluster_scale;
    auto e = eigendecompose(assemble_operator(background_density(c, g), c.effective_cutoff()), eo);
    auto rs = find_resonances(e, {c.resonance_scale, c.gap_tol});
    auto out = out_dir(f, c);
    CsvWriter w(out / "resonances.csv", {"kind", "j", "l", "m", "sj", "sl", "sm", "defect", "coupling"});
    auto emit = [&](const std::string& kind, const std::vector<ResonantTerm>& ts) {
        for (const auto& t : ts) {
            std::vector<double> v{double(t.j), double(t.l), double(t.m), double(t.sj), double(t.sl), double(t.sm),
                                  t.defect, kind == "exact" ? t.coupling : std::nan("")};
            w.row(kind, v);
        }
    };
    emit("exact", rs.exact);
    emit("near", rs.near);
    note(f, std::to_string(rs.exact.size()) + " exact, " + std::to_string(rs.near.size()) + " near");
    return 0;
}

/// Weighted Helmholtz split of the initial limit current rho0 (grad S0 + m), or of rot(stream).
int project_cmd(const Flags& f) {
    auto c = load(f);
    auto s = prepare_scenario(c);
    auto d = project(s.j0, s.rho0, s.poisson);
    auto out = out_dir(f, c);
    std::vector<std::string> h{"x"};
    if (c.dim == 2) h.push_back("y");
    const char* axes[] = {"x", "y"};
    for (const char* part : {"field", "solenoidal", "gradient"})
        for (int a = 0; a < c.dim; ++a) h.push_back(std::string(part) + "_" + axes[a]);
    h.push_back("potential");
    CsvWriter w(out / "projection.csv", h);
    for (std::size_t i = 0; i < s.grid.points(); ++i) {
        auto x = s.grid.coordinates(i);
        std::vector<double> v{x[0]};
        if (c.dim == 2) v.push_back(x[1]);
        for (const TorusField* part : {&s.j0, &d.solenoidal, &d.gradient_part})
            for (int a = 0; a < c.dim; ++a) v.push_back(part->re(a, i));
        v.push_back(d.potential.re(0, i));
        w.row(v);
    }
    note(f, "poisson residual " + CsvWriter::format(d.residual) + " after " + std::to_string(d.iterations) + " iterations");
    return 0;
}

int limits_cmd(const Flags& f, bool with_wave) {
    auto c = load(f);
    auto s = prepare_scenario(c);
    auto traj = limit_trajectory(s);
    auto out = out_dir(f, c);
    std::ofstream(out / "config.echo") << echo_config(c);
    if (with_wave) {
        write_limit_csv(out / "oscillate.csv", traj);
    } else {
        CsvWriter w(out / "anelastic.csv", {"time", "kinetic_energy", "divergence_norm"});
        for (const auto& p : traj) w.row({p.flow.time, p.kinetic_energy, p.divergence_norm});
    }
    return 0;
}

int sweep(const Flags& f, bool combined) {
    auto c = load(f);
    auto out = out_dir(f, c);
    RunOptions ro;
    ro.jobs = f.jobs;
    ro.quiet = f.quiet;
    ro.keep_reports = combined;
    auto t = run_scenario(c, out, ro);
    if (combined) {
        CsvWriter w(out / "modenergy.csv", detail::modenergy_header());
        for (const auto& r : t.rows)
            if (r.status == "ok") detail::write_modenergy_rows(w, r.eps, r.reports, r.summary);
    }
    bool failed = false;
    for (const auto& r : t.rows)
        if (r.status != "ok") {
            failed = true;
            std::cerr << "eps " << r.eps << ": " << r.status << '\n';
        }
    return failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gross-Pitaevskii low Mach number experiments"};
    app.require_subcommand(1);
    Flags flags;
    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"simulate", "evolve the GPE for each eps; timeseries.csv and final.snapshot"},
        {"spectrum", "eigenpairs of -div(rho0 grad); spectrum.csv and eigenmodes.csv"},
        {"resonances", "exact and near resonant triples; resonances.csv"},
        {"project", "weighted Helmholtz split of the initial limit current; projection.csv"},
        {"anelastic", "anelastic Euler trajectory; anelastic.csv"},
        {"oscillate", "coupled oscillating system; oscillate.csv"},
        {"converge", "eps sweep against the limits; table.csv and per-eps/"},
        {"modenergy", "eps sweep with every modulated energy sample in one modenergy.csv"},
    };
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name, s.help);
        sc->add_option("--config", flags.config, "scenario file, or a bundled scenario name")->required();
        sc->add_option("--out", flags.out, "output directory (default runs/<name>)");
        sc->add_option("--eps", flags.eps, "replace the eps list")->delimiter(',');
        sc->add_option("--resolution", flags.resolution, "replace grid points per axis")->check(CLI::PositiveNumber);
        sc->add_flag("--quiet", flags.quiet, "no progress on stderr");
        sc->add_option("--jobs", flags.jobs, "sweep rows run concurrently")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (cmd == "simulate") return simulate(flags);
        if (cmd == "spectrum") return spectrum(flags);
        if (cmd == "resonances") return resonances(flags);
        if (cmd == "project") return project_cmd(flags);
        if (cmd == "anelastic") return limits_cmd(flags, false);
        if (cmd == "oscillate") return limits_cmd(flags, true);
        if (cmd == "converge") return sweep(flags, false);
        if (cmd == "modenergy") return sweep(flags, true);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
