#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpelab/error.hpp"
#include "gpelab/gpe.hpp"

namespace gpelab {

/// Comma separated rows, every number at round-trip precision. Columns are fixed by the header.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
        : out_(path), columns_(header.size()) {
        if (!out_) throw Error("cannot write '" + path.string() + "'");
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    void row(std::span<const double> values) {
        if (values.size() != columns_) throw ShapeMismatch("csv row has the wrong number of columns");
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format(values[i]);
        out_ << '\n';
    }
    void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }

    /// Leading text cell then numbers; columns_ counts the text cell.
    void row(const std::string& label, std::span<const double> values) {
        if (values.size() + 1 != columns_) throw ShapeMismatch("csv row has the wrong number of columns");
        out_ << label;
        for (double v : values) out_ << ',' << format(v);
        out_ << '\n';
    }

    static std::string format(double v) {
        if (std::isnan(v)) return "nan";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

private:
    std::ofstream out_;
    std::size_t columns_;
};

/// Header line "# {json}", then x[,y],re,im,rho0 per node.
inline void write_snapshot(const std::filesystem::path& path, const WaveState& s) {
    const auto& g = s.psi.grid();
    nlohmann::json meta{{"eps", s.eps},     {"alpha", s.alpha},   {"time", s.time},
                        {"dim", g.dim()},   {"points", g.n()},    {"period", g.period()}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "# " << meta.dump() << '\n' << (g.dim() == 2 ? "x,y,re,im,rho0\n" : "x,re,im,rho0\n");
    for (std::size_t i = 0; i < g.points(); ++i) {
        auto x = g.coordinates(i);
        out << CsvWriter::format(x[0]);
        if (g.dim() == 2) out << ',' << CsvWriter::format(x[1]);
        out << ',' << CsvWriter::format(s.psi.at(0, i).real()) << ',' << CsvWriter::format(s.psi.at(0, i).imag())
            << ',' << CsvWriter::format(s.rho0.re(0, i)) << '\n';
    }
}

inline WaveState read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read snapshot '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind("# ", 0) != 0) throw Error(path.string() + ": missing '# {json}' header");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(line.substr(2));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": bad header: " + e.what());
    }
    TorusGrid g(meta.at("dim").get<int>(), meta.at("points").get<int>(), meta.at("period").get<double>());
    std::getline(in, line);  // column names
    WaveState s{TorusField(g, 1, false), meta.at("eps").get<double>(), meta.at("alpha").get<double>(),
                TorusField(g, 1, true), meta.at("time").get<double>()};
    const int skip = g.dim();
    std::size_t i = 0;
    for (; i < g.points() && std::getline(in, line); ++i) {
        std::vector<double> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(std::stod(c));
        if (cells.size() != static_cast<std::size_t>(skip + 3))
            throw Error(path.string() + ": row " + std::to_string(i) + " has " + std::to_string(cells.size()) +
                        " cells");
        s.psi.at(0, i) = cplx(cells[skip], cells[skip + 1]);
        s.rho0.at(0, i) = cells[skip + 2];
    }
    if (i != g.points()) throw Error(path.string() + ": expected " + std::to_string(g.points()) + " rows");
    return s;
}

}  // namespace gpelab
