#pragma once
// Scenario configuration, drivers and deterministic persistence.
//
// Config files are flat "key = value" text; '#' starts a comment. Keys:
//   scenario          phase-diagram | fermi-sweep | bec | kitaev-check |
//                     locality | sule | homotopy-check
//   model.a           comma list of mass parameters
//   model.W           disorder strength
//   model.lambda_mix  BHZ spin-mixing strength
//   geometry.L        linear size
//   geometry.bc       open | periodic
//   mu                Fermi energy
//   mu_grid           comma list, or lo:hi:count; empty means {mu}
//   delta.lo/hi       gap interval (edge regulator, SULE window)
//   g.lo/hi           switch ramp (defaults to the gap interval)
//   seeds             comma list of disorder seeds
//   flavor            z | z2

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mgidx.hpp"
#include "serialize.hpp"

namespace mgidx {

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"phase-diagram", "fermi-sweep", "bec",          "kitaev-check",
                                                "locality",      "sule",        "homotopy-check"};
    return names;
}

struct ScenarioConfig {
    std::string scenario = "phase-diagram";
    std::vector<double> a{1.0};
    double W = 0.0;
    double lambda_mix = 0.3;
    int L = 12;
    Boundary bc = Boundary::open;
    double mu = 0.0;
    std::vector<double> mu_grid;
    double delta_lo = -0.5;
    double delta_hi = 0.5;
    std::optional<double> g_lo;
    std::optional<double> g_hi;
    std::vector<std::uint64_t> seeds{1};
    Flavor flavor = Flavor::Z;

    double switch_lo() const { return g_lo.value_or(delta_lo); }
    double switch_hi() const { return g_hi.value_or(delta_hi); }
};

// ------------------------------------------------------------- parsing

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split(v, ',')) {
        const std::string t = trim(item);
        if (t.empty()) throw std::invalid_argument("config: empty entry in " + key);
        out.push_back(parse_double(t));
    }
    if (out.empty()) throw std::invalid_argument("config: " + key + " needs at least one value");
    return out;
}

inline std::vector<double> parse_grid(const std::string& key, const std::string& v) {
    if (v.find(':') == std::string::npos) return parse_list(key, v);
    const auto f = split(v, ':');
    if (f.size() != 3) throw std::invalid_argument("config: " + key + " range must be lo:hi:count");
    const double lo = parse_double(trim(f[0])), hi = parse_double(trim(f[1]));
    const int n = std::stoi(trim(f[2]));
    if (n < 1) throw std::invalid_argument("config: " + key + " count must be positive");
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * i / double(n - 1));
    return out;
}

inline int parse_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("config: " + key + " must be an integer");
    return int(x);
}

}  // namespace detail

inline void set_config_value(ScenarioConfig& c, const std::string& key, const std::string& raw) {
    const std::string v = detail::trim(raw);
    try {
        if (key == "scenario") {
            const auto& n = scenario_names();
            if (std::find(n.begin(), n.end(), v) == n.end())
                throw std::invalid_argument("config: unknown scenario '" + v + "'");
            c.scenario = v;
        } else if (key == "model.a") {
            c.a = detail::parse_list(key, v);
        } else if (key == "model.W") {
            c.W = parse_double(v);
            if (c.W < 0.0) throw std::invalid_argument("config: model.W must be non-negative");
        } else if (key == "model.lambda_mix") {
            c.lambda_mix = parse_double(v);
        } else if (key == "geometry.L") {
            c.L = detail::parse_int(key, v);
            if (c.L < 4 || c.L % 2) throw std::invalid_argument("config: geometry.L must be even and >= 4");
        } else if (key == "geometry.bc") {
            c.bc = parse_boundary(v);
        } else if (key == "mu") {
            c.mu = parse_double(v);
        } else if (key == "mu_grid") {
            c.mu_grid = v.empty() ? std::vector<double>{} : detail::parse_grid(key, v);
        } else if (key == "delta.lo") {
            c.delta_lo = parse_double(v);
        } else if (key == "delta.hi") {
            c.delta_hi = parse_double(v);
        } else if (key == "g.lo") {
            c.g_lo = parse_double(v);
        } else if (key == "g.hi") {
            c.g_hi = parse_double(v);
        } else if (key == "seeds") {
            c.seeds.clear();
            for (const auto& item : split(v, ',')) {
                const std::string t = detail::trim(item);
                if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
                    throw std::invalid_argument("config: seeds must be non-negative integers");
                c.seeds.push_back(std::stoull(t));
            }
            if (c.seeds.empty()) throw std::invalid_argument("config: seeds needs at least one value");
        } else if (key == "flavor") {
            c.flavor = parse_flavor(v);
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    } catch (const std::invalid_argument& e) {
        if (std::string(e.what()).rfind("config:", 0) == 0) throw;
        throw std::invalid_argument("config: bad value for " + key + ": '" + v + "'");
    } catch (const std::out_of_range&) {
        throw std::invalid_argument("config: value out of range for " + key + ": '" + v + "'");
    }
}

inline void validate(const ScenarioConfig& c) {
    if (!(c.delta_lo < c.delta_hi)) throw std::invalid_argument("config: need delta.lo < delta.hi");
    if (!(c.switch_lo() < c.switch_hi())) throw std::invalid_argument("config: need g.lo < g.hi");
}

inline ScenarioConfig parse_config(const std::string& text, ScenarioConfig c = {}) {
    std::istringstream in(text);
    std::string line;
    std::set<std::string> seen;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        if (!seen.insert(key).second)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key " + key);
        set_config_value(c, key, line.substr(eq + 1));
    }
    validate(c);
    return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& p, ScenarioConfig c = {}) {
    return parse_config(read_text(p), std::move(c));
}

// Canonical text: every key, sorted, shortest round-trip numbers.
inline std::string canonical_config(const ScenarioConfig& c) {
    auto list = [](const auto& v) {
        std::string s;
        for (const auto& x : v) {
            if (!s.empty()) s += ',';
            if constexpr (std::is_floating_point_v<std::decay_t<decltype(x)>>)
                s += format_double(x);
            else
                s += std::to_string(x);
        }
        return s;
    };
    std::map<std::string, std::string> kv{
        {"scenario", c.scenario},
        {"model.a", list(c.a)},
        {"model.W", format_double(c.W)},
        {"model.lambda_mix", format_double(c.lambda_mix)},
        {"geometry.L", std::to_string(c.L)},
        {"geometry.bc", to_string(c.bc)},
        {"mu", format_double(c.mu)},
        {"mu_grid", list(c.mu_grid)},
        {"delta.lo", format_double(c.delta_lo)},
        {"delta.hi", format_double(c.delta_hi)},
        {"g.lo", format_double(c.switch_lo())},
        {"g.hi", format_double(c.switch_hi())},
        {"seeds", list(c.seeds)},
        {"flavor", flavor_key(c.flavor)}};
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

// 64-bit FNV-1a of the canonical text, as 16 hex digits.
inline std::string config_hash(const ScenarioConfig& c) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : canonical_config(c)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --------------------------------------------------------------- tables

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<bool> reliable;

    void add(std::vector<std::string> cells, bool ok = true) {
        if (cells.size() != columns.size())
            throw std::logic_error("table " + name + ": row has " + std::to_string(cells.size()) + " cells, expected " +
                                   std::to_string(columns.size()));
        rows.push_back(std::move(cells));
        reliable.push_back(ok);
    }

    std::size_t unreliable() const { return std::size_t(std::count(reliable.begin(), reliable.end(), false)); }

    // Every row ends with the config hash and library version.
    std::string csv(const std::string& hash) const {
        std::string out;
        for (const auto& c : columns) out += c + ',';
        out += "config_hash,version\n";
        for (const auto& r : rows) {
            for (const auto& cell : r) out += cell + ',';
            out += hash + ',' + kVersion + '\n';
        }
        return out;
    }
};

struct RunResult {
    std::string scenario;
    std::vector<Table> tables;
    std::map<std::string, std::string> files;  // extra artifacts: relative path -> contents
    json summary = json::object();

    std::size_t unreliable_rows() const {
        std::size_t n = 0;
        for (const auto& t : tables) n += t.unreliable();
        return n;
    }

    const Table& table(const std::string& name) const {
        for (const auto& t : tables)
            if (t.name == name) return t;
        throw std::out_of_range("no table named " + name);
    }
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(long v) { return std::to_string(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(std::uint64_t v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }

inline double diagnostic(const IndexReport& r, const std::string& key) {
    const auto it = r.diagnostics.find(key);
    return it == r.diagnostics.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

// Writes every table as <name>.csv, the extra files, and summary.json.
inline void write_run(const RunResult& r, const ScenarioConfig& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string hash = config_hash(c);
    json tables = json::array();
    for (const auto& t : r.tables) {
        write_text(dir / (t.name + ".csv"), t.csv(hash));
        tables.push_back({{"name", t.name}, {"file", t.name + ".csv"}, {"rows", t.rows.size()},
                          {"unreliable", t.unreliable()}});
    }
    json files = json::array();
    for (const auto& [rel, text] : r.files) {
        const auto p = dir / rel;
        std::filesystem::create_directories(p.parent_path());
        write_text(p, text);
        files.push_back(rel);
    }
    json config = json::object();
    std::istringstream in(canonical_config(c));
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        config[line.substr(0, eq)] = line.substr(eq + 3);
    }
    const json s{{"scenario", r.scenario},   {"version", kVersion},
                 {"config_hash", hash},      {"config", config},
                 {"tables", tables},         {"files", files},
                 {"unreliable_rows", r.unreliable_rows()}, {"results", r.summary}};
    write_text(dir / "summary.json", s.dump(2) + "\n");
}

// --------------------------------------------------------------- models

inline LatticeGeometry model_geometry(const ScenarioConfig& c, int Lx, int Ly, Boundary bx, Boundary by) {
    return LatticeGeometry::bulk(Lx, Ly, c.flavor == Flavor::Z ? 2 : 4, bx, by);
}

inline LatticeGeometry model_geometry(const ScenarioConfig& c) {
    return model_geometry(c, c.L, c.L, c.bc, c.bc);
}

// QWZ for the Z flavor, BHZ for Z2; W = 0 ignores the seed.
inline OperatorMatrix build_model(const ScenarioConfig& c, const LatticeGeometry& g, double a,
                                  std::uint64_t seed, double twist_x = 0.0) {
    const std::uint64_t s = c.W == 0.0 ? 0 : seed;
    if (c.flavor == Flavor::Z) return build_qwz(g, a, c.W, s, twist_x);
    return build_bhz(g, {a, c.W, c.lambda_mix, s}, twist_x);
}

inline long clean_oracle(const ScenarioConfig& c, double a) {
    const long ch = chern_oracle_clean(a);
    return c.flavor == Flavor::Z ? ch : std::labs(ch) % 2;
}

// Runs f(a, seed) for every grid point, reusing the clean result across seeds.
template <class R>
std::vector<std::pair<std::pair<double, std::uint64_t>, R>> sweep(const ScenarioConfig& c,
                                                                 const std::function<R(double, std::uint64_t)>& f) {
    std::vector<std::pair<std::pair<double, std::uint64_t>, R>> out;
    for (double a : c.a) {
        std::optional<R> clean;
        for (std::uint64_t seed : c.seeds) {
            if (c.W == 0.0) {
                if (!clean) clean = f(a, seed);
                out.push_back({{a, seed}, *clean});
            } else {
                out.push_back({{a, seed}, f(a, seed)});
            }
        }
    }
    return out;
}

// ------------------------------------------------------------ scenarios

inline RunResult run_phase_diagram(const ScenarioConfig& c) {
    RunResult r{"phase-diagram", {}, {}, json::object()};
    Table t{"phase_diagram",
            {"a", "W", "seed", "flavor", "L", "bc", "mu", "value", "raw", "residual", "reliable", "method", "gap_ratio",
             "oracle"},
            {},
            {}};
    const auto g = model_geometry(c);
    const TimeReversal th = c.flavor == Flavor::Z2 ? build_tr(g) : TimeReversal{};
    const auto rows = sweep<IndexReport>(c, [&](double a, std::uint64_t seed) {
        return bulk_index(build_model(c, g, a, seed), c.mu, c.flavor == Flavor::Z2 ? &th : nullptr, c.flavor);
    });
    std::size_t agree = 0, clean = 0;
    for (const auto& [key, rep] : rows) {
        const long oracle = clean_oracle(c, key.first);
        if (c.W == 0.0) {
            ++clean;
            agree += rep.value == oracle;
        }
        t.add({cell(key.first), cell(c.W), cell(key.second), flavor_key(c.flavor), cell(c.L), to_string(c.bc),
               cell(c.mu), cell(rep.value), cell(rep.raw), cell(rep.residual), cell(rep.reliable), rep.method,
               cell(diagnostic(rep, "gap_ratio")), cell(oracle)},
              rep.reliable);
    }
    r.summary = {{"rows", rows.size()}, {"clean_rows", clean}, {"clean_rows_matching_oracle", agree}};
    r.tables.push_back(std::move(t));
    return r;
}

inline RunResult run_fermi_sweep(const ScenarioConfig& c) {
    RunResult r{"fermi-sweep", {}, {}, json::object()};
    Table t{"fermi_sweep",
            {"a", "W", "seed", "mu", "value", "raw", "residual", "reliable", "gap_ratio"},
            {},
            {}};
    const std::vector<double> grid = c.mu_grid.empty() ? std::vector<double>{c.mu} : c.mu_grid;
    const auto g = model_geometry(c);
    const TimeReversal th = c.flavor == Flavor::Z2 ? build_tr(g) : TimeReversal{};
    json runs = json::array();
    bool all_constant = true;
    for (double a : c.a)
        for (std::uint64_t seed : c.seeds) {
            const SpectralData spec = eig_hermitian(build_model(c, g, a, seed));
            std::optional<long> first;
            json violation = nullptr;
            for (double mu : grid) {
                const auto rep = bulk_index(spec, mu, c.flavor == Flavor::Z2 ? &th : nullptr, c.flavor);
                t.add({cell(a), cell(c.W), cell(seed), cell(mu), cell(rep.value), cell(rep.raw), cell(rep.residual),
                       cell(rep.reliable), cell(diagnostic(rep, "gap_ratio"))},
                      rep.reliable);
                if (!first) first = rep.value;
                if (rep.value != *first && violation.is_null()) {
                    // locality of P_mu where the index moved
                    const auto env = decay_profile(fermi_projection(spec, mu), DecayMode::offdiag);
                    violation = {{"mu", mu}, {"value", rep.value}, {"decay", envelope_fit_json(env)}};
                }
            }
            const bool constant = violation.is_null();
            all_constant = all_constant && constant;
            runs.push_back({{"a", a}, {"seed", seed}, {"constant", constant}, {"value", *first},
                            {"violation", violation}});
        }
    r.summary = {{"mu_grid", grid}, {"all_constant", all_constant}, {"runs", runs}};
    r.tables.push_back(std::move(t));
    return r;
}

struct BecRow {
    IndexReport bulk;
    IndexReport edge;
};

// Bulk index on the L x L sample; edge index on the half-plane truncation of
// an L x L sample that is open in x and periodic in y (Z), or spectral flow
// on an L x L/2 twisted cylinder (Z2). Disorder is keyed by lattice site so
// every geometry sees the same realization.
inline BecRow bec_point(const ScenarioConfig& c, double a, std::uint64_t seed) {
    BecRow out;
    const auto gb = model_geometry(c);
    if (c.flavor == Flavor::Z) {
        out.bulk = bulk_index(build_model(c, gb, a, seed), c.mu, nullptr, Flavor::Z);
        const auto gk = model_geometry(c, c.L, c.L, Boundary::open, Boundary::periodic);
        const auto K = build_model(c, gk, a, seed);
        out.edge = edge_index(truncate_to_edge(K), K, c.delta_lo, c.delta_hi,
                              make_switch(c.switch_lo(), c.switch_hi()), nullptr, Flavor::Z);
    } else {
        const auto th = build_tr(gb);
        out.bulk = bulk_index(build_model(c, gb, a, seed), c.mu, &th, Flavor::Z2);
        const auto gc = model_geometry(c, c.L, c.L / 2, Boundary::periodic, Boundary::open);
        EdgeIndexOptions o;
        o.mu = c.mu;
        o.edge_filter_depth = c.L >= 20 ? 4 : 3;
        o.twist_builder = [&c, gc, a, seed](double t) { return build_model(c, gc, a, seed, t); };
        out.edge = edge_z2_spectral_flow(o.twist_builder, o.mu, o.edge_filter_depth, o.flow);
    }
    return out;
}

inline RunResult run_bec(const ScenarioConfig& c) {
    RunResult r{"bec", {}, {}, json::object()};
    Table t{"bec",
            {"a", "W", "seed", "flavor", "bulk_value", "bulk_raw", "bulk_reliable", "edge_value", "edge_raw",
             "edge_residual", "edge_reliable", "agree"},
            {},
            {}};
    const auto rows = sweep<BecRow>(c, [&](double a, std::uint64_t seed) { return bec_point(c, a, seed); });
    std::size_t agree = 0;
    for (const auto& [key, row] : rows) {
        const bool same = row.bulk.value == row.edge.value;
        agree += same;
        t.add({cell(key.first), cell(c.W), cell(key.second), flavor_key(c.flavor), cell(row.bulk.value),
               cell(row.bulk.raw), cell(row.bulk.reliable), cell(row.edge.value), cell(row.edge.raw),
               cell(row.edge.residual), cell(row.edge.reliable), cell(same)},
              row.bulk.reliable && row.edge.reliable);
    }
    r.summary = {{"rows", rows.size()}, {"agreeing_rows", agree}};
    r.tables.push_back(std::move(t));
    return r;
}

struct KitaevRow {
    IndexReport flux;
    IndexReport kitaev;
    std::vector<IndexReport> stages;
};

inline RunResult run_kitaev_check(const ScenarioConfig& c, bool with_homotopy = false) {
    RunResult r{"kitaev-check", {}, {}, json::object()};
    Table t{"kitaev_check",
            {"a", "W", "seed", "flavor", "flux_value", "flux_raw", "kitaev_value", "kitaev_raw", "difference", "agree",
             "reliable"},
            {},
            {}};
    Table h{"homotopy_stages", {"a", "W", "seed", "stage", "name", "value", "raw", "residual", "reliable"}, {}, {}};
    if (with_homotopy && c.flavor != Flavor::Z)
        throw std::invalid_argument("kitaev-check: homotopy stages need the z flavor");
    const auto g = model_geometry(c);
    const TimeReversal th = c.flavor == Flavor::Z2 ? build_tr(g) : TimeReversal{};
    const TimeReversal* tp = c.flavor == Flavor::Z2 ? &th : nullptr;
    const auto rows = sweep<KitaevRow>(c, [&](double a, std::uint64_t seed) {
        const SpectralData spec = eig_hermitian(build_model(c, g, a, seed));
        const auto P = fermi_projection(spec, c.mu);
        KitaevRow k{bulk_index(spec, c.mu, tp, c.flavor), kitaev_index(P, tp, c.flavor), {}};
        if (with_homotopy) k.stages = homotopy_path_check(P, {});
        return k;
    });
    double worst = 0.0;
    for (const auto& [key, row] : rows) {
        const double diff = std::abs(row.flux.raw - row.kitaev.raw);
        const bool same = row.flux.value == row.kitaev.value;
        if (c.flavor == Flavor::Z) worst = std::max(worst, diff);
        t.add({cell(key.first), cell(c.W), cell(key.second), flavor_key(c.flavor), cell(row.flux.value),
               cell(row.flux.raw), cell(row.kitaev.value), cell(row.kitaev.raw),
               c.flavor == Flavor::Z ? cell(diff) : std::string("nan"), cell(same),
               cell(row.flux.reliable && row.kitaev.reliable)},
              row.flux.reliable && row.kitaev.reliable);
        for (std::size_t s = 0; s < row.stages.size(); ++s) {
            const auto& st = row.stages[s];
            h.add({cell(key.first), cell(c.W), cell(key.second), cell(int(s)), homotopy_stage_name(int(s)),
                   cell(st.value), cell(st.raw), cell(st.residual), cell(st.reliable)},
                  st.reliable);
        }
    }
    r.summary = {{"rows", rows.size()}};
    if (c.flavor == Flavor::Z) r.summary["max_raw_difference"] = worst;
    r.tables.push_back(std::move(t));
    if (with_homotopy) r.tables.push_back(std::move(h));
    return r;
}

// Decay table of a single operator: nonzero bins only.
inline Table decay_table(const std::string& name, const DecayEnvelope& e) {
    Table t{name, {"distance", "max_norm"}, {}, {}};
    for (std::size_t i = 0; i < e.distance.size(); ++i)
        if (e.max_norm[i] != 0.0) t.add({cell(e.distance[i]), cell(e.max_norm[i])});
    return t;
}

inline std::string point_tag(double a, std::uint64_t seed) { return "a" + format_double(a) + "_seed" + cell(seed); }

inline RunResult run_locality(const ScenarioConfig& c) {
    RunResult r{"locality", {}, {}, json::object()};
    Table t{"locality",
            {"a", "W", "seed", "quantity", "slope", "residual", "fit_points", "summary", "reliable"},
            {},
            {}};
    const auto g = model_geometry(c);
    json points = json::array();
    for (double a : c.a)
        for (std::uint64_t seed : c.seeds) {
            const auto P = fermi_projection(eig_hermitian(build_model(c, g, a, seed)), c.mu);
            const std::string tag = point_tag(a, seed);
            const auto off = decay_profile(P, DecayMode::offdiag);
            CMat A = P.data() * half_space_mask(g, 2).cast<cplx>().asDiagonal() * P.data();
            A = 0.5 * (A + A.adjoint());
            const auto qp = quasi_projection_defect(OperatorMatrix(A, g, true), 2);
            const auto der = decay_profile(nc_derivative(P, 2), DecayMode::confined, 2);
            const CMat U = flux_phase(g).data();
            const double s3 = schatten_norm(OperatorMatrix(CMat(P.data() * U - U * P.data()), g, false), 3.0);
            t.add({cell(a), cell(c.W), cell(seed), "P_offdiag", cell(off.slope), cell(off.residual),
                   cell(off.fit_points), cell(off.max_norm.empty() ? 0.0 : off.max_norm.front()),
                   cell(!(off.slope >= 0.0))},
                  !(off.slope >= 0.0));
            t.add({cell(a), cell(c.W), cell(seed), "PL2P_quasi_projection", cell(qp.envelope.slope),
                   cell(qp.envelope.residual), cell(qp.envelope.fit_points), cell(qp.summary),
                   cell(qp.quasi_projection)},
                  qp.quasi_projection);
            t.add({cell(a), cell(c.W), cell(seed), "d2P_confined", cell(der.slope), cell(der.residual),
                   cell(der.fit_points), cell(der.max_norm.empty() ? 0.0 : der.max_norm.front()),
                   cell(!(der.slope >= 0.0))},
                  !(der.slope >= 0.0));
            t.add({cell(a), cell(c.W), cell(seed), "schatten3_PU_commutator", "nan", "nan", "0", cell(s3), "1"});
            r.files["envelopes/P_offdiag_" + tag + ".csv"] = envelope_csv(off);
            r.files["envelopes/PL2P_defect_" + tag + ".csv"] = envelope_csv(qp.envelope);
            r.files["envelopes/d2P_" + tag + ".csv"] = envelope_csv(der);
            points.push_back({{"a", a},
                              {"seed", seed},
                              {"P_offdiag", envelope_fit_json(off)},
                              {"PL2P_defect", envelope_fit_json(qp.envelope)},
                              {"PL2P_overall_defect", qp.overall},
                              {"d2P", envelope_fit_json(der)},
                              {"schatten3_PU_commutator", s3}});
        }
    r.summary = {{"points", points}};
    r.tables.push_back(std::move(t));
    return r;
}

struct SuleCheck {
    SuleBasis basis;
    double orthonormality = 0.0;
    double reconstruction = 0.0;
    double eigen_residual = 0.0;
    SummabilityReport summability;
    IndexReport qu_parity;
    CompactnessProbe compactness;
};

inline SuleCheck sule_point(const ScenarioConfig& c, const LatticeGeometry& g, double a, std::uint64_t seed) {
    const auto H = build_model(c, g, a, seed);
    const SpectralData spec = eig_hermitian(H);
    SuleCheck s;
    s.basis = sule_extract(spec, c.delta_lo, c.delta_hi);
    const auto Q = spectral_projection(spec, c.delta_lo, c.delta_hi);
    const CMat& Psi = s.basis.vectors;
    const Index n = s.basis.size();
    s.orthonormality = n ? (Psi.adjoint() * Psi - CMat::Identity(n, n)).cwiseAbs().maxCoeff() : 0.0;
    s.reconstruction = ((n ? CMat(Psi * Psi.adjoint()) : CMat::Zero(g.dim(), g.dim())) - Q.data()).cwiseAbs().maxCoeff();
    const double hn = operator_norm(H.data(), true);
    for (Index k = 0; k < n; ++k)
        s.eigen_residual =
            std::max(s.eigen_residual, (H.data() * Psi.col(k) - s.basis.eigenvalues[k] * Psi.col(k)).norm() / hn);
    s.summability = sule_summability(s.basis.centers, 2, 0.5);
    const auto U = flux_phase(g);
    const CMat QUQ = Q.data() * U.data() * Q.data() + CMat::Identity(g.dim(), g.dim()) - Q.data();
    s.qu_parity = kernel_parity(QUQ);
    s.compactness = compactness_probe(U, build_v(s.basis, Q), Q);
    return s;
}

inline RunResult run_sule(const ScenarioConfig& c, const std::filesystem::path& export_root = {}) {
    RunResult r{"sule", {}, {}, json::object()};
    Table vt{"sule_vectors",
             {"a", "seed", "n", "eigenvalue", "center_x", "center_y", "slope", "residual", "fit_points", "reliable"},
             {},
             {}};
    Table st{"sule_summary",
             {"a", "seed", "count", "orthonormality", "reconstruction", "eigen_residual", "summability",
              "max_multiplicity", "qu_parity", "qu_gap_ratio", "head", "rank_q", "tail_change_p3",
              "roundtrip_error", "reliable"},
             {},
             {}};
    const auto g = model_geometry(c);
    json points = json::array();
    for (double a : c.a)
        for (std::uint64_t seed : c.seeds) {
            const auto s = sule_point(c, g, a, seed);
            const std::string tag = point_tag(a, seed);
            bool slopes_ok = true;
            for (Index k = 0; k < s.basis.size(); ++k) {
                const auto& e = s.basis.envelopes[k];
                const bool ok = e.slope < 0.0;
                slopes_ok = slopes_ok && ok;
                vt.add({cell(a), cell(seed), cell(k), cell(s.basis.eigenvalues[k]), cell(s.basis.centers[k].x),
                        cell(s.basis.centers[k].y), cell(e.slope), cell(e.residual), cell(e.fit_points), cell(ok)},
                       ok);
            }
            // export, reload, and check the reloaded basis still reconstructs Q
            const std::string rel = "sule/" + tag;
            const std::string manifest = sule_manifest(s.basis).dump(2) + "\n";
            const std::string vectors = sule_vectors_csv(s.basis);
            r.files[rel + "/manifest.json"] = manifest;
            r.files[rel + "/vectors.csv"] = vectors;
            const auto tmp = (export_root.empty() ? std::filesystem::temp_directory_path() : export_root) /
                             ("mgidx_sule_" + config_hash(c) + "_" + tag);
            export_sule(s.basis, tmp);
            const SuleBasis back = import_sule(tmp);
            std::filesystem::remove_all(tmp);
            const double roundtrip = (back.vectors - s.basis.vectors).cwiseAbs().maxCoeff();

            const auto& cp = s.compactness;
            const bool ok = s.orthonormality < 1e-10 && s.reconstruction < 1e-8 && s.eigen_residual < 1e-8 &&
                            slopes_ok && s.qu_parity.value == 0 && s.qu_parity.reliable && roundtrip == 0.0 &&
                            (cp.rank_q == 0 || (cp.head < cp.rank_q && cp.tail_change_p3 < 0.01));
            st.add({cell(a), cell(seed), cell(s.basis.size()), cell(s.orthonormality), cell(s.reconstruction),
                    cell(s.eigen_residual), cell(s.summability.sum), cell(s.summability.max_multiplicity),
                    cell(s.qu_parity.value), cell(diagnostic(s.qu_parity, "gap_ratio")), cell(cp.head),
                    cell(cp.rank_q), cell(cp.tail_change_p3), cell(roundtrip), cell(ok)},
                   ok);
            std::string prof = "k,singular_value\n";
            for (std::size_t k = 0; k < cp.singular_values.size() && Index(k) < std::max<Index>(cp.rank_q, 1); ++k)
                prof += cell(Index(k + 1)) + ',' + cell(cp.singular_values[k]) + '\n';
            r.files["profiles/UmV_Q_" + tag + ".csv"] = prof;
            double max_slope = -std::numeric_limits<double>::infinity();
            for (const auto& e : s.basis.envelopes) max_slope = std::max(max_slope, e.slope);
            points.push_back({{"a", a},
                              {"seed", seed},
                              {"count", s.basis.size()},
                              {"max_envelope_slope", number_json(max_slope)},
                              {"distinct_centers", s.summability.distinct_sites},
                              {"mean_multiplicity", s.summability.mean_multiplicity},
                              {"export", rel},
                              {"roundtrip_error", roundtrip}});
        }
    r.summary = {{"points", points}};
    r.tables.push_back(std::move(vt));
    r.tables.push_back(std::move(st));
    return r;
}

inline RunResult run_homotopy(const ScenarioConfig& c) {
    if (c.flavor != Flavor::Z) throw std::invalid_argument("homotopy-check: only the z flavor is supported");
    RunResult r{"homotopy-check", {}, {}, json::object()};
    Table ft{"fn_distance", {"N", "sup_distance"}, {}, {}};
    for (int N = 1; N <= 20; ++N) ft.add({cell(N), cell(fn_poly(N).sup_distance())});
    const int nmin = minimal_fn_degree(0.25);
    Table ct{"fredholm",
             {"a", "W", "seed", "N", "exp_distance", "min_singular", "norm_fN", "grid_sup_fN", "reliable"},
             {},
             {}};
    Table ht{"homotopy_stages", {"a", "W", "seed", "stage", "name", "value", "raw", "residual", "reliable"}, {}, {}};
    const auto g = model_geometry(c);
    for (double a : c.a)
        for (std::uint64_t seed : c.seeds) {
            const auto P = fermi_projection(eig_hermitian(build_model(c, g, a, seed)), c.mu);
            CMat A = P.data() * half_space_mask(g, 2).cast<cplx>().asDiagonal() * P.data();
            A = 0.5 * (A + A.adjoint());
            const auto fc = fredholm_certificate(OperatorMatrix(A, g, true), nmin);
            const bool ok = fc.exp_distance < 0.25 && fc.min_singular > 0.5;
            ct.add({cell(a), cell(c.W), cell(seed), cell(nmin), cell(fc.exp_distance), cell(fc.min_singular),
                    cell(fc.norm_fN), cell(fc.grid_sup_fN), cell(ok)},
                   ok);
            const auto stages = homotopy_path_check(P, {});
            for (std::size_t s = 0; s < stages.size(); ++s) {
                const auto& st = stages[s];
                ht.add({cell(a), cell(c.W), cell(seed), cell(int(s)), homotopy_stage_name(int(s)), cell(st.value),
                        cell(st.raw), cell(st.residual), cell(st.reliable)},
                       st.reliable);
            }
        }
    r.summary = {{"minimal_N", nmin}, {"sup_distance_at_minimal_N", fn_poly(nmin).sup_distance()}};
    r.tables.push_back(std::move(ft));
    r.tables.push_back(std::move(ct));
    r.tables.push_back(std::move(ht));
    return r;
}

struct RunOptions {
    bool with_homotopy = false;  // kitaev-check only
};

inline RunResult run_scenario(const ScenarioConfig& c, const RunOptions& o = {}) {
    validate(c);
    if (c.scenario == "phase-diagram") return run_phase_diagram(c);
    if (c.scenario == "fermi-sweep") return run_fermi_sweep(c);
    if (c.scenario == "bec") return run_bec(c);
    if (c.scenario == "kitaev-check") return run_kitaev_check(c, o.with_homotopy);
    if (c.scenario == "locality") return run_locality(c);
    if (c.scenario == "sule") return run_sule(c);
    if (c.scenario == "homotopy-check") return run_homotopy(c);
    throw std::invalid_argument("unknown scenario '" + c.scenario + "'");
}

}  // namespace mgidx
