#pragma once
// JSON and CSV persistence for index reports, decay envelopes and SULE bases.
//
// SULE export layout (directory):
//   manifest.json   format tag, geometry, eigenvalues, centres, envelope fits
//   vectors.csv     header "row,col,re,im"; one line per stored entry of the
//                   dim x n column matrix, row-major, %.17g
// Loading rebuilds the envelopes from the vectors.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "indices.hpp"
#include "sule.hpp"

namespace mgidx {

using json = nlohmann::ordered_json;

inline constexpr const char* kSuleFormat = "mgidx-sule-v1";

// Shortest round-trip text for a double; "nan" and "inf" spelled out.
inline std::string format_double(double v, int digits = 17) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    for (int p = std::min(digits, 15); p <= digits; ++p) {
        std::snprintf(buf, sizeof buf, "%.*g", p, v);
        if (p == digits || std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("parse_double: trailing characters in '" + s + "'");
    return v;
}

// JSON has no NaN; non-finite numbers travel as strings.
inline json number_json(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

inline double number_from_json(const json& j) {
    return j.is_string() ? parse_double(j.get<std::string>()) : j.get<double>();
}

// Lower-case spelling used in configs, CLI flags and tables.
inline const char* flavor_key(Flavor f) { return f == Flavor::Z ? "z" : "z2"; }

inline Flavor parse_flavor(const std::string& s) {
    if (s == "z" || s == "Z") return Flavor::Z;
    if (s == "z2" || s == "Z2") return Flavor::Z2;
    throw std::invalid_argument("unknown flavor '" + s + "' (expected z or z2)");
}

inline Boundary parse_boundary(const std::string& s) {
    if (s == "open") return Boundary::open;
    if (s == "periodic") return Boundary::periodic;
    throw std::invalid_argument("unknown boundary '" + s + "' (expected open or periodic)");
}

// ------------------------------------------------------------ IndexReport

inline json to_json(const IndexReport& r) {
    json d = json::object();
    for (const auto& [k, v] : r.diagnostics) d[k] = number_json(v);
    return json{{"flavor", to_string(r.flavor)}, {"value", r.value},     {"raw", number_json(r.raw)},
                {"residual", number_json(r.residual)}, {"method", r.method}, {"reliable", r.reliable},
                {"diagnostics", d}};
}

inline IndexReport index_report_from_json(const json& j) {
    IndexReport r;
    r.flavor = parse_flavor(j.at("flavor").get<std::string>());
    r.value = j.at("value").get<long>();
    r.raw = number_from_json(j.at("raw"));
    r.residual = number_from_json(j.at("residual"));
    r.method = j.at("method").get<std::string>();
    r.reliable = j.at("reliable").get<bool>();
    for (const auto& [k, v] : j.at("diagnostics").items()) r.diagnostics[k] = number_from_json(v);
    return r;
}

// Diagnostics are flattened into one "key=value;..." field so the column set
// does not depend on the method.
inline std::string index_report_csv_header() { return "flavor,value,raw,residual,method,reliable,diagnostics"; }

inline std::string to_csv_row(const IndexReport& r) {
    std::string diag;
    for (const auto& [k, v] : r.diagnostics) {
        if (!diag.empty()) diag += ';';
        diag += k + '=' + format_double(v);
    }
    return std::string(to_string(r.flavor)) + ',' + std::to_string(r.value) + ',' + format_double(r.raw) + ',' +
           format_double(r.residual) + ',' + r.method + ',' + (r.reliable ? "1" : "0") + ',' + diag;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline IndexReport index_report_from_csv_row(const std::string& line) {
    const auto f = split(line, ',');
    if (f.size() != 7) throw std::invalid_argument("index report row: expected 7 fields");
    IndexReport r;
    r.flavor = parse_flavor(f[0]);
    r.value = std::stol(f[1]);
    r.raw = parse_double(f[2]);
    r.residual = parse_double(f[3]);
    r.method = f[4];
    r.reliable = f[5] == "1";
    if (!f[6].empty())
        for (const auto& kv : split(f[6], ';')) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("index report row: bad diagnostic '" + kv + "'");
            r.diagnostics[kv.substr(0, eq)] = parse_double(kv.substr(eq + 1));
        }
    return r;
}

// --------------------------------------------------------- DecayEnvelope

// Plot-ready two-column table; bins with zero norm are dropped.
inline std::string envelope_csv(const DecayEnvelope& e) {
    std::string out = "distance,max_norm\n";
    for (std::size_t i = 0; i < e.distance.size(); ++i) {
        if (e.max_norm[i] == 0.0) continue;
        out += format_double(e.distance[i]) + ',' + format_double(e.max_norm[i]) + '\n';
    }
    return out;
}

inline json envelope_fit_json(const DecayEnvelope& e) {
    return json{{"mode", to_string(e.mode)},
                {"axis", e.axis},
                {"slope", number_json(e.slope)},
                {"nu_hat", number_json(e.nu_hat)},
                {"intercept", number_json(e.intercept)},
                {"residual", number_json(e.residual)},
                {"fit_points", e.fit_points},
                {"bins", e.distance.size()}};
}

// ----------------------------------------------------------- geometry

inline json to_json(const LatticeGeometry& g) {
    return json{{"Lx", g.Lx},          {"Ly", g.Ly},
                {"internal_dim", g.internal_dim}, {"bc_x", to_string(g.bc_x)},
                {"bc_y", to_string(g.bc_y)},      {"origin_x", g.origin_x},
                {"origin_y", g.origin_y}};
}

inline LatticeGeometry geometry_from_json(const json& j) {
    LatticeGeometry g;
    g.Lx = j.at("Lx").get<int>();
    g.Ly = j.at("Ly").get<int>();
    g.internal_dim = j.at("internal_dim").get<int>();
    g.bc_x = parse_boundary(j.at("bc_x").get<std::string>());
    g.bc_y = parse_boundary(j.at("bc_y").get<std::string>());
    g.origin_x = j.at("origin_x").get<int>();
    g.origin_y = j.at("origin_y").get<int>();
    return g;
}

// ------------------------------------------------------------ SULE bases

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

inline json sule_manifest(const SuleBasis& b) {
    json ev = json::array(), centers = json::array(), fits = json::array();
    double max_slope = -std::numeric_limits<double>::infinity();
    for (Index n = 0; n < b.size(); ++n) {
        ev.push_back(b.eigenvalues[n]);
        centers.push_back({b.centers[n].x, b.centers[n].y});
        fits.push_back(envelope_fit_json(b.envelopes[n]));
        if (std::isfinite(b.envelopes[n].slope)) max_slope = std::max(max_slope, b.envelopes[n].slope);
    }
    return json{{"format", kSuleFormat},
                {"geometry", to_json(b.geometry)},
                {"count", b.size()},
                {"dim", b.vectors.rows()},
                {"vectors", "vectors.csv"},
                {"eigenvalues", ev},
                {"centers", centers},
                {"max_envelope_slope", number_json(b.size() ? max_slope : std::nan(""))},
                {"envelopes", fits}};
}

inline std::string sule_vectors_csv(const SuleBasis& b) {
    std::string out = "row,col,re,im\n";
    for (Index i = 0; i < b.vectors.rows(); ++i)
        for (Index n = 0; n < b.vectors.cols(); ++n) {
            const cplx v = b.vectors(i, n);
            out += std::to_string(i) + ',' + std::to_string(n) + ',' + format_double(v.real()) + ',' +
                   format_double(v.imag()) + '\n';
        }
    return out;
}

inline void export_sule(const SuleBasis& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / "manifest.json", sule_manifest(b).dump(2) + "\n");
    write_text(dir / "vectors.csv", sule_vectors_csv(b));
}

inline SuleBasis import_sule(const std::filesystem::path& dir) {
    const json m = json::parse(read_text(dir / "manifest.json"));
    if (m.at("format").get<std::string>() != kSuleFormat)
        throw std::invalid_argument("import_sule: unknown format " + m.at("format").dump());
    SuleBasis b;
    b.geometry = geometry_from_json(m.at("geometry"));
    const Index n = m.at("count").get<Index>();
    const Index dim = m.at("dim").get<Index>();
    if (dim != b.geometry.dim()) throw std::invalid_argument("import_sule: dimension does not match geometry");
    for (const auto& e : m.at("eigenvalues")) b.eigenvalues.push_back(e.get<double>());
    for (const auto& c : m.at("centers")) b.centers.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
    if (Index(b.eigenvalues.size()) != n || Index(b.centers.size()) != n)
        throw std::invalid_argument("import_sule: manifest arrays disagree with count");

    b.vectors = CMat::Zero(dim, n);
    std::istringstream in(read_text(dir / m.at("vectors").get<std::string>()));
    std::string line;
    std::getline(in, line);
    if (line != "row,col,re,im") throw std::invalid_argument("import_sule: bad vectors header");
    Index seen = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 4) throw std::invalid_argument("import_sule: bad vectors row");
        const Index i = std::stol(f[0]), k = std::stol(f[1]);
        if (i < 0 || i >= dim || k < 0 || k >= n) throw std::invalid_argument("import_sule: index out of range");
        b.vectors(i, k) = cplx(parse_double(f[2]), parse_double(f[3]));
        ++seen;
    }
    if (seen != dim * n) throw std::invalid_argument("import_sule: missing vector entries");
    for (Index k = 0; k < n; ++k) b.envelopes.push_back(vector_envelope(b.geometry, b.vectors.col(k), b.centers[k]));
    return b;
}

}  // namespace mgidx
