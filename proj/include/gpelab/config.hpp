#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gpelab/error.hpp"
#include "gpelab/field.hpp"
#include "gpelab/gpe.hpp"

// Scenario files are INI text:
//
//   [section]
//   key = value        ; '#' or ';' in the first column starts a comment line
//
// Field-valued keys take a trig series, terms separated by ';':
//
//   term := amp | amp cos k1 [k2] | amp sin k1 [k2]
//
// so "1; 0.3 cos 1" is 1 + 0.3 cos(x) and "0.5 sin 1 2" is 0.5 sin(x + 2y). Wavenumbers are integer
// multiples of the base wavenumber 2 pi / period. Lists are comma separated.

namespace gpelab {

struct SeriesTerm {
    enum class Kind { constant, cosine, sine };
    double amplitude = 0.0;
    Kind kind = Kind::constant;
    std::array<int, 2> k{0, 0};
};

using TrigSeries = std::vector<SeriesTerm>;

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

inline std::optional<double> to_double(const std::string& s) {
    if (s == "2pi") return 2.0 * std::numbers::pi;
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

inline std::optional<long> to_long(const std::string& s) {
    try {
        std::size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

/// Round-trip decimal text of a double.
inline std::string repr(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline TrigSeries parse_series(const std::string& text, int dim, long line = 0) {
    TrigSeries out;
    if (detail::trim(text).empty()) return out;
    for (const auto& term : detail::split(text, ';')) {
        std::istringstream in(term);
        std::vector<std::string> tok;
        for (std::string w; in >> w;) tok.push_back(w);
        if (tok.empty()) throw ConfigError("empty term in series '" + text + "'", line);
        SeriesTerm t;
        auto amp = detail::to_double(tok[0]);
        if (!amp) throw ConfigError("bad amplitude '" + tok[0] + "' in series '" + text + "'", line);
        t.amplitude = *amp;
        if (tok.size() > 1) {
            if (tok[1] == "cos")
                t.kind = SeriesTerm::Kind::cosine;
            else if (tok[1] == "sin")
                t.kind = SeriesTerm::Kind::sine;
            else
                throw ConfigError("expected cos or sin, got '" + tok[1] + "'", line);
            const std::size_t nk = tok.size() - 2;
            if (nk < 1 || nk > static_cast<std::size_t>(dim))
                throw ConfigError("term '" + term + "' needs 1 to " + std::to_string(dim) + " wavenumbers", line);
            for (std::size_t a = 0; a < nk; ++a) {
                auto k = detail::to_long(tok[2 + a]);
                if (!k) throw ConfigError("wavenumber '" + tok[2 + a] + "' is not an integer", line);
                t.k[a] = static_cast<int>(*k);
            }
        }
        out.push_back(t);
    }
    return out;
}

inline std::string format_series(const TrigSeries& s) {
    std::string out;
    for (const auto& t : s) {
        if (!out.empty()) out += "; ";
        out += detail::repr(t.amplitude);
        if (t.kind == SeriesTerm::Kind::constant) continue;
        out += t.kind == SeriesTerm::Kind::cosine ? " cos " : " sin ";
        out += std::to_string(t.k[0]);
        if (t.k[1] != 0) out += " " + std::to_string(t.k[1]);
    }
    return out;
}

inline TorusField evaluate_series(const TrigSeries& s, const TorusGrid& g) {
    const double kb = g.base_wavenumber();
    return TorusField::sample(g, [&](double x, double y) {
        double v = 0.0;
        for (const auto& t : s) {
            const double arg = kb * (t.k[0] * x + t.k[1] * y);
            switch (t.kind) {
                case SeriesTerm::Kind::constant: v += t.amplitude; break;
                case SeriesTerm::Kind::cosine: v += t.amplitude * std::cos(arg); break;
                case SeriesTerm::Kind::sine: v += t.amplitude * std::sin(arg); break;
            }
        }
        return v;
    });
}

enum class PhaseKind { given, wellprepared };

struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t seed = 1;

    int dim = 1;
    int points = 64;
    double period = 2.0 * std::numbers::pi;

    TrigSeries rho0{{1.0, SeriesTerm::Kind::constant, {0, 0}}};
    std::string rho0_table;  ///< grid samples, one per line, overrides the series

    TrigSeries phi0;
    TrigSeries phase;
    PhaseKind phase_kind = PhaseKind::given;
    std::array<double, 2> winding{0.0, 0.0};
    std::string psi_file;          ///< snapshot replacing the WKB data
    std::optional<TrigSeries> stream;  ///< rho0 v0 = rot(stream); limit-only scenarios
    int random_modes = 0;          ///< seeded extra terms in phi0 and phase
    double random_amplitude = 0.0;

    std::vector<double> eps{0.1};
    double alpha = 1.0;
    double t_final = 1.0;
    int outputs = 21;  ///< evenly spaced snapshots on [0, t_final], both ends included

    StepControl control{};
    double gpe_dt = 0.0;  ///< 0 selects the stability-derived step
    long max_steps = 50'000'000;

    double poisson_tol = 1e-10;
    double resonance_scale = 1e-8;
    double gap_tol = 1e-3;
    double cluster_scale = 1e-8;

    int cutoff = 0;  ///< 0 picks the largest K with 4K < N, capped at 31
    int modes = 40;

    double limit_dt = 0.01;
    double cfl = 0.5;

    std::filesystem::path base_dir;  ///< relative file keys resolve here

    int effective_cutoff() const { return cutoff > 0 ? cutoff : std::min(31, (points - 1) / 4); }

    std::vector<double> output_times() const {
        std::vector<double> t(outputs);
        for (int i = 0; i < outputs; ++i) t[i] = t_final * i / (outputs - 1);
        return t;
    }
};

namespace detail {

struct KeyLines {
    std::map<std::string, long> lines;
    long of(const std::string& path) const {
        auto it = lines.find(path);
        return it == lines.end() ? 0 : it->second;
    }
};

inline KeyLines scan_key_lines(const std::string& text) {
    KeyLines k;
    std::istringstream in(text);
    std::string raw, section;
    long n = 0;
    while (std::getline(in, raw)) {
        ++n;
        auto line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        k.lines[section + "." + trim(line.substr(0, eq))] = n;
    }
    return k;
}

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> k{
        {"scenario", {"name", "seed"}},
        {"grid", {"dim", "points", "period"}},
        {"rho0", {"series", "table"}},
        {"initial", {"phi0", "phase", "phase_kind", "winding", "psi_file", "stream", "random_modes",
                     "random_amplitude"}},
        {"sweep", {"eps", "alpha", "t_final", "outputs"}},
        {"solver", {"dt_c1", "dt_c2", "dt", "max_steps"}},
        {"tolerance", {"poisson", "resonance", "gap", "cluster"}},
        {"fastwave", {"cutoff", "modes"}},
        {"limits", {"dt", "cfl"}},
    };
    return k;
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Parses scenario text; every diagnostic carries the offending line when one exists.
inline ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    {
        std::istringstream in(text);
        try {
            pt::ini_parser::read_ini(in, tree);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError(e.message(), static_cast<long>(e.line()));
        }
    }
    auto lines = detail::scan_key_lines(text);
    const auto& known = detail::known_keys();
    for (const auto& [section, body] : tree) {
        auto it = known.find(section);
        if (body.empty() || it == known.end()) {
            const long ln = lines.of(section + "." + (body.empty() ? section : body.front().first));
            throw ConfigError(body.empty() ? "key '" + section + "' outside any section"
                                           : "unknown section [" + section + "]",
                              ln);
        }
        for (const auto& [key, v] : body)
            if (!it->second.count(key))
                throw ConfigError("unknown key '" + key + "' in [" + section + "]", lines.of(section + "." + key));
    }

    ScenarioConfig c;
    c.base_dir = base_dir;
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'));
        if (!v) return std::nullopt;
        return *v;
    };
    auto fail = [&](const std::string& path, const std::string& why) -> ConfigError {
        return ConfigError(path + ": " + why, lines.of(path));
    };
    auto real = [&](const std::string& path, double& out) {
        if (auto s = get(path)) {
            auto v = detail::to_double(*s);
            if (!v) throw fail(path, "'" + *s + "' is not a number");
            out = *v;
        }
    };
    auto integer = [&](const std::string& path, auto& out) {
        if (auto s = get(path)) {
            auto v = detail::to_long(*s);
            if (!v) throw fail(path, "'" + *s + "' is not an integer");
            out = static_cast<std::remove_reference_t<decltype(out)>>(*v);
        }
    };
    auto positive = [&](const std::string& path, double v) {
        if (!(v > 0.0)) throw fail(path, "must be positive");
    };
    auto reals = [&](const std::string& path) {
        std::vector<double> out;
        for (const auto& t : detail::split(*get(path), ',')) {
            auto v = detail::to_double(t);
            if (!v) throw fail(path, "'" + t + "' is not a number");
            out.push_back(*v);
        }
        return out;
    };

    if (auto s = get("scenario.name")) c.name = *s;
    if (auto s = get("scenario.seed")) {
        try {
            std::size_t pos = 0;
            c.seed = std::stoull(*s, &pos);
            if (pos != s->size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw fail("scenario.seed", "'" + *s + "' is not a nonnegative integer");
        }
    }

    integer("grid.dim", c.dim);
    if (c.dim != 1 && c.dim != 2) throw fail("grid.dim", "must be 1 or 2");
    integer("grid.points", c.points);
    if (c.points < 8 || (c.points & (c.points - 1)) != 0) throw fail("grid.points", "must be a power of two >= 8");
    real("grid.period", c.period);
    positive("grid.period", c.period);

    auto series = [&](const std::string& path) { return parse_series(*get(path), c.dim, lines.of(path)); };
    if (get("rho0.series")) c.rho0 = series("rho0.series");
    if (auto s = get("rho0.table")) c.rho0_table = *s;

    if (get("initial.phi0")) c.phi0 = series("initial.phi0");
    if (get("initial.phase")) c.phase = series("initial.phase");
    if (auto s = get("initial.phase_kind")) {
        if (*s == "given")
            c.phase_kind = PhaseKind::given;
        else if (*s == "wellprepared")
            c.phase_kind = PhaseKind::wellprepared;
        else
            throw fail("initial.phase_kind", "expected given or wellprepared, got '" + *s + "'");
        if (c.phase_kind == PhaseKind::wellprepared && get("initial.phase"))
            throw fail("initial.phase", "conflicts with phase_kind = wellprepared");
    }
    if (get("initial.winding")) {
        auto w = reals("initial.winding");
        if (w.empty() || w.size() > static_cast<std::size_t>(c.dim))
            throw fail("initial.winding", "needs 1 to " + std::to_string(c.dim) + " components");
        for (std::size_t a = 0; a < w.size(); ++a) c.winding[a] = w[a];
    }
    if (auto s = get("initial.psi_file")) c.psi_file = *s;
    if (get("initial.stream")) c.stream = series("initial.stream");
    if (c.stream && c.dim != 2) throw fail("initial.stream", "needs a 2D grid");
    integer("initial.random_modes", c.random_modes);
    if (c.random_modes < 0) throw fail("initial.random_modes", "must be nonnegative");
    real("initial.random_amplitude", c.random_amplitude);

    if (get("sweep.eps")) c.eps = reals("sweep.eps");
    if (c.eps.empty()) throw fail("sweep.eps", "needs at least one value");
    for (std::size_t i = 0; i < c.eps.size(); ++i) {
        if (!(c.eps[i] > 0.0)) throw fail("sweep.eps", "values must be positive");
        if (i > 0 && !(c.eps[i] < c.eps[i - 1])) throw fail("sweep.eps", "values must be strictly decreasing");
    }
    real("sweep.alpha", c.alpha);
    positive("sweep.alpha", c.alpha);
    real("sweep.t_final", c.t_final);
    positive("sweep.t_final", c.t_final);
    integer("sweep.outputs", c.outputs);
    if (c.outputs < 3) throw fail("sweep.outputs", "needs at least 3 snapshots");

    real("solver.dt_c1", c.control.c1);
    positive("solver.dt_c1", c.control.c1);
    real("solver.dt_c2", c.control.c2);
    positive("solver.dt_c2", c.control.c2);
    real("solver.dt", c.gpe_dt);
    if (get("solver.dt")) positive("solver.dt", c.gpe_dt);
    integer("solver.max_steps", c.max_steps);
    if (c.max_steps < 1) throw fail("solver.max_steps", "must be positive");

    real("tolerance.poisson", c.poisson_tol);
    positive("tolerance.poisson", c.poisson_tol);
    real("tolerance.resonance", c.resonance_scale);
    positive("tolerance.resonance", c.resonance_scale);
    real("tolerance.gap", c.gap_tol);
    positive("tolerance.gap", c.gap_tol);
    real("tolerance.cluster", c.cluster_scale);
    positive("tolerance.cluster", c.cluster_scale);

    integer("fastwave.cutoff", c.cutoff);
    if (c.cutoff < 0 || (c.cutoff > 0 && 4 * c.cutoff >= c.points))
        throw fail("fastwave.cutoff", "needs 0 (automatic) or 4 cutoff < points");
    integer("fastwave.modes", c.modes);
    if (c.modes < 1) throw fail("fastwave.modes", "must be positive");

    real("limits.dt", c.limit_dt);
    positive("limits.dt", c.limit_dt);
    real("limits.cfl", c.cfl);
    positive("limits.cfl", c.cfl);
    return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

/// Canonical INI of every resolved value; parse_config of it reproduces the configuration.
inline std::string echo_config(const ScenarioConfig& c) {
    using detail::repr;
    std::ostringstream o;
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (double x : v) s += (s.empty() ? "" : ", ") + repr(x);
        return s;
    };
    o << "[scenario]\nname = " << c.name << "\nseed = " << c.seed << "\n\n";
    o << "[grid]\ndim = " << c.dim << "\npoints = " << c.points << "\nperiod = " << repr(c.period) << "\n\n";
    o << "[rho0]\nseries = " << format_series(c.rho0) << "\n";
    if (!c.rho0_table.empty()) o << "table = " << c.rho0_table << "\n";
    o << "\n[initial]\n";
    if (!c.phi0.empty()) o << "phi0 = " << format_series(c.phi0) << "\n";
    if (!c.phase.empty()) o << "phase = " << format_series(c.phase) << "\n";
    o << "phase_kind = " << (c.phase_kind == PhaseKind::given ? "given" : "wellprepared") << "\n";
    o << "winding = " << repr(c.winding[0]);
    if (c.dim == 2) o << ", " << repr(c.winding[1]);
    o << "\n";
    if (!c.psi_file.empty()) o << "psi_file = " << c.psi_file << "\n";
    if (c.stream) o << "stream = " << format_series(*c.stream) << "\n";
    o << "random_modes = " << c.random_modes << "\nrandom_amplitude = " << repr(c.random_amplitude) << "\n\n";
    o << "[sweep]\neps = " << list(c.eps) << "\nalpha = " << repr(c.alpha) << "\nt_final = " << repr(c.t_final)
      << "\noutputs = " << c.outputs << "\n\n";
    o << "[solver]\ndt_c1 = " << repr(c.control.c1) << "\ndt_c2 = " << repr(c.control.c2) << "\n";
    if (c.gpe_dt > 0.0) o << "dt = " << repr(c.gpe_dt) << "\n";
    o << "max_steps = " << c.max_steps << "\n\n";
    o << "[tolerance]\npoisson = " << repr(c.poisson_tol) << "\nresonance = " << repr(c.resonance_scale)
      << "\ngap = " << repr(c.gap_tol) << "\ncluster = " << repr(c.cluster_scale) << "\n\n";
    o << "[fastwave]\ncutoff = " << c.cutoff << "\nmodes = " << c.modes << "\n\n";
    o << "[limits]\ndt = " << repr(c.limit_dt) << "\ncfl = " << repr(c.cfl) << "\n";
    return o.str();
}

/// Command-line overrides, revalidated by a round trip through the canonical text.
inline ScenarioConfig with_overrides(ScenarioConfig c, const std::vector<double>& eps, int points) {
    if (!eps.empty()) c.eps = eps;
    if (points > 0) c.points = points;
    auto base = c.base_dir;
    try {
        return parse_config(echo_config(c), base);
    } catch (const ConfigError& e) {
        // line numbers would point into the echo, not the user's file
        std::string why = e.what();
        if (e.line() > 0) why = why.substr(why.find(": ") + 2);
        throw ConfigError("after overrides: " + why);
    }
}

inline TorusGrid make_grid(const ScenarioConfig& c) { return TorusGrid(c.dim, c.points, c.period); }

inline TorusField load_table(const std::filesystem::path& path, const TorusGrid& g) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open table '" + path.string() + "'");
    std::vector<double> vals;
    std::string raw;
    long n = 0;
    while (std::getline(in, raw)) {
        ++n;
        auto line = detail::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto v = detail::to_double(line);
        if (!v) throw ConfigError(path.string() + ": '" + line + "' is not a number", n);
        vals.push_back(*v);
    }
    if (vals.size() != g.points())
        throw ConfigError(path.string() + ": has " + std::to_string(vals.size()) + " samples, grid needs " +
                          std::to_string(g.points()));
    TorusField f(g, 1, true);
    for (std::size_t i = 0; i < vals.size(); ++i) f.at(0, i) = vals[i];
    return f;
}

inline TorusField background_density(const ScenarioConfig& c, const TorusGrid& g) {
    auto rho0 = c.rho0_table.empty() ? evaluate_series(c.rho0, g) : load_table(c.base_dir / c.rho0_table, g);
    for (std::size_t i = 0; i < g.points(); ++i)
        if (!(rho0.re(0, i) > 0.0))
            throw ConfigError("rho0 must be positive; it is " + detail::repr(rho0.re(0, i)) + " at node " +
                              std::to_string(i));
    return rho0;
}

/// phi0 and S0 with the seeded perturbation folded in. The draws depend on the seed alone.
inline std::pair<TrigSeries, TrigSeries> perturbed_series(const ScenarioConfig& c) {
    auto phi = c.phi0, phase = c.phase;
    std::mt19937_64 rng(c.seed);
    for (int m = 0; m < c.random_modes; ++m) {
        for (auto* s : {&phi, &phase}) {
            SeriesTerm t;
            t.kind = detail::unit_draw(rng) < 0.5 ? SeriesTerm::Kind::cosine : SeriesTerm::Kind::sine;
            t.amplitude = c.random_amplitude * (2.0 * detail::unit_draw(rng) - 1.0);
            t.k[0] = 1 + static_cast<int>(3.0 * detail::unit_draw(rng));
            t.k[1] = c.dim == 2 ? static_cast<int>(7.0 * detail::unit_draw(rng)) - 3 : 0;
            s->push_back(t);
        }
    }
    return {phi, phase};
}

}  // namespace gpelab
