// Acceptance gate: one PASS/FAIL line per criterion; exit status counts the failures.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "gpelab/harness.hpp"
#include "support.hpp"

using namespace gpelab;
using namespace gpelab::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
    if (!ok) ++failures;
    std::printf("%s criterion %d: %s | %s\n", ok ? "PASS" : "FAIL", n, what.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ScenarioConfig scenario(const std::string& name) { return load_config(fs::path(GPELAB_SCENARIO_DIR) / (name + ".ini")); }

fs::path workdir(const std::string& name) {
    auto d = fs::temp_directory_path() / "gpelab_acceptance" / name;
    fs::remove_all(d);
    return d;
}

EigenSystem eigensystem(const TorusField& rho0, int cutoff, int modes) {
    EigenOptions o;
    o.modes = modes;
    return eigendecompose(assemble_operator(rho0, cutoff), o);
}

double coord_norm(const EigenCoordinates& a) { return std::sqrt(norm_sq(a)); }

double coord_diff(const EigenCoordinates& a, const EigenCoordinates& b) {
    auto d = a;
    d.axpy(-1.0, b);
    return coord_norm(d);
}

double grid_norm(const FastWaveGrid& v) { return std::sqrt(l2_norm_sq(v.scalar) + l2_norm_sq(v.vector)); }

TorusField cosine_rho0(const TorusGrid& g) {
    return TorusField::sample(g, [](double x, double) { return 1.0 + 0.3 * std::cos(x); });
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void conservation() {
    auto t0 = Clock::now();
    auto c = scenario("cosine-rho0-1d");
    auto t = run_scenario(c, workdir("c1"), {1, true, false});
    const auto& r = t.rows.front();
    const double rt = seconds_since(t0);
    const bool ok = c.points == 128 && c.eps == std::vector<double>{0.1} && c.alpha == 1.0 && c.t_final == 0.5 &&
                    r.status == "ok" && r.mass_drift < 1e-10 && r.hamiltonian_drift < 1e-6 && rt < 60.0;
    report(1, ok, "conservation on cosine-rho0-1d",
           fmt("mass drift %.3g (< 1e-10), Hamiltonian drift %.3g (< 1e-6), %.1f s (< 60)", r.mass_drift,
               r.hamiltonian_drift, rt));
}

void splitting_order() {
    auto t0 = Clock::now();
    TorusGrid g(1, 64);
    InitialDataSpec spec{TorusField::sample(g, [](double x, double) { return 1.0 + 0.2 * std::cos(x); }),
                         TorusField::sample(g, [](double x, double) { return 0.5 * std::sin(x); }),
                         TorusField::sample(g, [](double x, double) { return 0.2 * std::cos(x); }),
                         {0.0, 0.0},
                         {}};
    const double eps = 0.5, alpha = 1.0, t = 0.2;
    auto s0 = build_initial_state(spec, eps, alpha);
    const double dt0 = default_time_step(g, eps, alpha);
    auto run = [&](double dt) {
        EvolveOptions o;
        o.dt = dt;
        return evolve(s0, {t}, o).back().psi;
    };
    auto ref = run(dt0 / 64);
    const double e1 = l2_norm(run(dt0) - ref), e2 = l2_norm(run(dt0 / 2) - ref), e3 = l2_norm(run(dt0 / 4) - ref);
    const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
    const double rt = seconds_since(t0);
    const bool ok = p1 >= 1.9 && p1 <= 2.1 && p2 >= 1.9 && p2 <= 2.1 && rt < 120.0;
    report(2, ok, "Strang order over dt0, dt0/2, dt0/4", fmt("orders %.4f, %.4f (in [1.9, 2.1]), %.1f s (< 120)", p1, p2, rt));
}

void projection() {
    std::mt19937_64 rng(1001);
    TorusGrid g(2, 32);
    double idem = 0.0, orth = 0.0, pyth = 0.0, sum = 0.0;
    for (int n = 0; n < 50; ++n) {
        auto rho0 = random_background(g, rng, 4.0);
        auto f = random_vector(g, rng, 5);
        auto d = project(f, rho0);
        const double ff = weighted_inner_product(f, f, rho0).real();
        const double fn = l2_norm(f);
        auto again = project(d.solenoidal, rho0);
        idem = std::max({idem, l2_norm(again.solenoidal - d.solenoidal) / fn,
                         l2_norm(project(d.gradient_part, rho0).gradient_part - d.gradient_part) / fn});
        orth = std::max(orth, std::abs(weighted_inner_product(d.solenoidal, d.gradient_part, rho0).real()) / ff);
        const double hs = weighted_inner_product(d.solenoidal, d.solenoidal, rho0).real();
        const double hp = weighted_inner_product(d.gradient_part, d.gradient_part, rho0).real();
        pyth = std::max(pyth, std::abs(hs + hp - ff) / ff);
        sum = std::max(sum, max_abs_diff(d.solenoidal + d.gradient_part, f));
    }
    double leray = 0.0;
    LerayEuler oracle(g);
    for (double c : {1.0, 2.5}) {
        auto f = random_vector(g, rng, 6);
        leray = std::max(leray, max_abs_diff(project(f, TorusField::constant(g, c)).solenoidal, oracle.project(f)));
    }
    const bool ok = idem <= 1e-9 && orth <= 1e-9 && pyth <= 1e-9 && sum <= 1e-9 && leray < 1e-10;
    report(3, ok, "weighted Helmholtz suite, 50 fields, contrast 4",
           fmt("idempotence %.2g, sigma-orthogonality %.2g, Pythagoras %.2g (each <= 1e-9); Leray %.2g (< 1e-10)", idem,
               orth, pyth, leray));
}

void spectral() {
    TorusGrid g(1, 128);
    auto flat = eigensystem(TorusField::constant(g, 1.0), 31, 40);
    double sq = 0.0;
    bool pairs = flat.clusters.size() == 20;
    for (int j = 0; j < flat.size(); ++j) sq = std::max(sq, std::abs(flat.kappas[j] - std::pow(j / 2 + 1, 2)));
    for (const auto& c : flat.clusters) pairs = pairs && c.size() == 2;

    auto rho0 = cosine_rho0(g);
    auto op = assemble_operator(rho0, 31);
    EigenOptions eo;
    eo.modes = 40;
    auto e = eigendecompose(op, eo);
    double res = 0.0;
    for (int j = 0; j < e.size(); ++j) res = std::max(res, matrix_residual(op, e, j) / (1.0 + e.kappas[j]));

    std::mt19937_64 rng(1003);
    std::uniform_real_distribution<double> ud(-20.0, 20.0);
    double iso = 0.0, group = 0.0;
    for (int n = 0; n < 100; ++n) {
        auto a = random_coords(e.size(), rng);
        const double t1 = ud(rng), t2 = ud(rng);
        const double v = grid_norm(reconstruct(a, e));
        iso = std::max(iso, std::abs(grid_norm(reconstruct(wave_group(a, e, t1), e)) - v) / v);
        group = std::max(group, coord_diff(wave_group(wave_group(a, e, t1), e, t2), wave_group(a, e, t1 + t2)) /
                                    coord_norm(a));
    }
    const bool ok = sq <= 1e-9 && pairs && res <= 1e-9 && iso <= 1e-10 && group <= 1e-10;
    report(4, ok, "spectral suite",
           fmt("|kappa - j^2| %.2g (<= 1e-9, pairs %s); cosine residual / (1 + kappa) %.2g (<= 1e-9); "
               "isometry %.2g, group law %.2g (<= 1e-10, 100 cases)",
               sq, pairs ? "yes" : "no", res, iso, group));
}

void cancellations() {
    std::mt19937_64 rng(1005);
    TorusGrid g(1, 128);
    auto rho0 = cosine_rho0(g);
    auto ec = eigensystem(rho0, 31, 40);
    std::normal_distribution<double> nd;
    double q1e = 0.0, q1a = 0.0;
    for (int n = 0; n < 50; ++n) {
        auto u = map_real(rho0, [c = nd(rng)](double r) { return c / r; });  // div(rho0 u) = 0 in 1D
        auto v1 = random_coords(ec.size(), rng), v2 = random_coords(ec.size(), rng);
        auto a = q1(u, v1, ec), b = q1(u, v2, ec);
        q1e = std::max(q1e, std::abs(pairing(a, v1)) / (coord_norm(a) * coord_norm(v1)));
        q1a = std::max(q1a, std::abs(pairing(a, v2) + pairing(b, v1)) /
                                (coord_norm(a) * coord_norm(v2) + coord_norm(b) * coord_norm(v1)));
    }

    auto ef = eigensystem(TorusField::constant(g, 1.0), 31, 40);
    auto rs = find_resonances(ef);
    double q2e = 0.0, tri = 0.0;
    for (int n = 0; n < 50; ++n) {
        auto v1 = random_coords(ef.size(), rng), v2 = random_coords(ef.size(), rng);
        auto a = q2(v1, v1, ef, rs), b = q2(v1, v2, ef, rs);
        q2e = std::max(q2e, std::abs(pairing(a, v1)) / (coord_norm(a) * coord_norm(v1)));
        tri = std::max(tri, std::abs(pairing(a, v2) + 2.0 * pairing(b, v1)) /
                                (coord_norm(a) * coord_norm(v2) + 2.0 * coord_norm(b) * coord_norm(v1)));
    }

    AverageOptions ao;
    ao.samples = 256;
    double oracle = 0.0;
    for (int n = 0; n < 3; ++n) {
        auto v1 = random_coords(ef.size(), rng), v2 = random_coords(ef.size(), rng);
        auto exact = q2(v1, v2, ef, rs);
        auto avg = time_average_q2(v1, v2, ef, ao).coords;
        avg.axpy(1.0, time_average_q2(v2, v1, ef, ao).coords);
        avg *= 0.5;
        oracle = std::max(oracle, coord_diff(avg, exact) / std::max(1.0, coord_norm(exact)));
    }
    const bool ok = q1e <= 1e-8 && q1a <= 1e-8 && q2e <= 1e-8 && tri <= 1e-8 && oracle <= 1e-6 && !rs.exact.empty();
    report(5, ok, "cancellation identities, M = 40",
           fmt("Q1 energy %.2g, Q1 antisymmetry %.2g, Q2 energy %.2g, trilinear %.2g (each <= 1e-8 scaled); "
               "Q2 vs time average %.2g (<= 1e-6)",
               q1e, q1a, q2e, tri, oracle));
}

void oscillating_energy() {
    auto s = prepare_scenario(scenario("illprep-1d"));
    auto traj = limit_trajectory(s);
    const double n0 = std::sqrt(2.0 * traj.front().wave_energy);
    double rate = 0.0;
    for (const auto& p : traj)
        if (p.flow.time > 0.0)
            rate = std::max(rate, std::abs(std::sqrt(2.0 * p.wave_energy) - n0) / (n0 * p.flow.time));
    report(6, n0 > 0.0 && rate <= 1e-7, "oscillating energy equality on illprep-1d",
           fmt("||V0(0)|| = %.6g, max relative change per unit time %.2g (<= 1e-7)", n0, rate));
}

void constant_density_reduction() {
    auto c = scenario("const-rho0-2d-euler");
    auto s = prepare_scenario(c);
    auto traj = limit_trajectory(s);
    LerayEuler oracle(s.grid);
    auto w = oracle.project(s.flow0.v);
    const int steps = static_cast<int>(std::lround(c.t_final / c.limit_dt));
    for (int n = 0; n < steps; ++n) w = oracle.step(w, c.limit_dt);
    const auto& last = traj.back().flow;
    const double gap = max_abs_diff(last.v, w);
    const double moved = max_abs_diff(last.v, s.flow0.v);
    const bool ok = c.points == 64 && std::abs(last.time - 1.0) < 1e-12 && gap < 1e-6 && moved > 1e-2;
    report(7, ok, "constant-rho0 anelastic equals Leray Euler on const-rho0-2d-euler",
           fmt("max |v - v_Leray| at t = %.3g: %.2g (< 1e-6); flow moved %.3g", last.time, gap, moved));
}

void desk_sweep() {
    auto t0 = Clock::now();
    auto c = scenario("illprep-1d");
    auto t = run_scenario(c, workdir("c8"), {1, true, false});
    const double rt = seconds_since(t0);
    bool ok = c.points == 256 && c.eps == std::vector<double>{0.2, 0.1, 0.05} && rt < 1800.0;
    std::string why;
    for (const auto& r : t.rows)
        if (r.status != "ok") {
            ok = false;
            why += " row " + CsvWriter::format(r.eps) + " " + r.status;
        }
    auto drop = [&](const char* name, auto get) {
        for (std::size_t i = 1; i < t.rows.size(); ++i)
            if (!(get(t.rows[i].summary) < get(t.rows[i - 1].summary))) {
                ok = false;
                why += std::string(" ") + name + " not decreasing;";
                return;
            }
    };
    drop("density error", [](const ConvergenceSummary& s) { return s.sup_density_error; });
    drop("H(0)", [](const ConvergenceSummary& s) { return s.H0; });
    drop("max W", [](const ConvergenceSummary& s) { return s.max_W; });
    drop("max S", [](const ConvergenceSummary& s) { return s.max_S; });
    for (int m = 0; m < test_mode_count; ++m) {
        const std::string name = "weak defect mode " + std::to_string(m + 1);
        drop(name.c_str(), [m](const ConvergenceSummary& s) { return s.weak_defect[m]; });
    }
    // o(1) defect delta = max W + max S; each eps is bounded with the previous (larger) eps's delta
    std::string bounds;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& s = t.rows[i].summary;
        const auto& prev = t.rows[i == 0 ? 0 : i - 1].summary;
        const double bound = 5.0 * (s.H0 + prev.max_W + prev.max_S);
        bounds += fmt(" %.3g<=%.3g", s.max_H, bound);
        if (!(s.max_H <= bound)) {
            ok = false;
            why += " Gronwall bound fails at eps " + CsvWriter::format(t.rows[i].eps) + ";";
        }
    }
    std::string rates;
    for (std::size_t i = 1; i < t.rows.size(); ++i)
        rates += fmt(" %.2f", std::log(t.rows[i - 1].summary.sup_density_error / t.rows[i].summary.sup_density_error) /
                                  std::log(t.rows[i - 1].eps / t.rows[i].eps));
    report(8, ok, "desk-scale sweep on illprep-1d",
           fmt("max_H vs bound%s; density error rates%s (recorded); %.1f s (< 1800)", bounds.c_str(), rates.c_str(), rt) +
               (why.empty() ? "" : ";" + why));
}

void determinism() {
    auto c = scenario("illprep-1d");
    auto a = workdir("c9a"), b = workdir("c9b");
    run_scenario(c, a, {1, true, false});
    run_scenario(c, b, {1, true, false});
    const auto ta = slurp(a / "table.csv"), tb = slurp(b / "table.csv");
    report(9, !ta.empty() && ta == tb, "byte-identical table.csv across two runs of illprep-1d",
           fmt("%zu and %zu bytes, %s", ta.size(), tb.size(), ta == tb ? "identical" : "different"));
}

}  // namespace

int main() {
    const std::pair<int, void (*)()> criteria[] = {{1, conservation},       {2, splitting_order},
                                                   {3, projection},         {4, spectral},
                                                   {5, cancellations},      {6, oscillating_energy},
                                                   {7, constant_density_reduction}, {8, desk_sweep},
                                                   {9, determinism}};
    for (const auto& [n, run] : criteria) {
        try {
            run();
        } catch (const std::exception& e) {
            report(n, false, "raised", e.what());
        }
    }
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
