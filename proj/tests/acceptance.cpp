// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// if any criterion fails. Detail lines are indented.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mgidx/harness.hpp"
#include "support.hpp"

using namespace mgidx;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class... Args>
void note(const char* fmt, Args... args) {
    std::printf("    ");
    std::printf(fmt, args...);
    std::printf("\n");
    std::fflush(stdout);
}

struct Criterion {
    int id;
    const char* title;
    std::function<bool()> run;
};

OperatorMatrix qwz_projection(int L, double a, double W = 0.0, std::uint64_t seed = 0) {
    const auto g = LatticeGeometry::bulk(L, 2, Boundary::open);
    return fermi_projection(eig_hermitian(build_qwz(g, a, W, seed)), 0.0);
}

CMat compressed_half_plane(const OperatorMatrix& P) {
    CMat A = P.data() * half_space_mask(P.geometry(), 2).cast<cplx>().asDiagonal() * P.data();
    return 0.5 * (A + A.adjoint());
}

// ------------------------------------------------------------------ 1

bool phase_diagram_z2() {
    bool ok = true;
    const std::vector<double> as{-1.0, 1.0, -3.0, 3.0};
    for (int L : {20, 16, 24})
        for (double a : as) {
            const auto t0 = Clock::now();
            const auto g = LatticeGeometry::bulk(L, 4, Boundary::open);
            const auto th = build_tr(g);
            const auto r = bulk_index(build_bhz(g, {a, 0.0, 0.3, 0}), 0.0, &th, Flavor::Z2);
            const double secs = seconds_since(t0);
            const long expected = std::abs(a) < 2 ? 1 : 0;
            const double ratio = r.diagnostics.at("gap_ratio");
            bool cell = r.value == expected && r.reliable;
            if (L == 20) cell = cell && ratio >= 5.0 && secs <= 120.0;
            ok = ok && cell;
            note("L=%d a=%+.0f parity %ld (expect %ld) gap_ratio %.2f reliable %d  %.1fs  %s", L, a, r.value,
                   expected, ratio, int(r.reliable), secs, cell ? "ok" : "MISMATCH");
        }
    return ok;
}

// ------------------------------------------------------------------ 2

bool phase_diagram_z() {
    bool ok = true;
    for (double a : {-1.0, 1.0, 3.0}) {
        const auto g = LatticeGeometry::bulk(20, 2, Boundary::open);
        const auto r = bulk_index(build_qwz(g, a), 0.0, nullptr, Flavor::Z);
        const int oracle = chern_oracle_clean(a);
        const double dev = std::abs(r.raw - oracle);
        const bool cell = dev < 0.05 && r.value == oracle;
        ok = ok && cell;
        note("a=%+.0f trace-cube %.5f oracle %+d |diff| %.5f  %s", a, r.raw, oracle, dev, cell ? "ok" : "MISMATCH");
    }
    return ok;
}

// ------------------------------------------------------------------ 3

bool stability() {
    // clean gap around zero on the torus
    const auto gt = LatticeGeometry::bulk(20, 4, Boundary::periodic);
    const auto clean = eig_hermitian(build_bhz(gt, {1.0, 0.0, 0.3, 0}));
    const Index k = count_below(clean, 0.0);
    const double lo = clean.eigenvalues(k - 1), hi = clean.eigenvalues(k);
    const double mid = 0.5 * (lo + hi), half = 0.3 * (hi - lo);
    ScenarioConfig c;
    c.scenario = "fermi-sweep";
    c.flavor = Flavor::Z2;
    c.a = {1.0};
    c.W = 1.0;
    c.L = 20;
    c.seeds = {1, 2, 3};
    for (int i = 0; i < 5; ++i) c.mu_grid.push_back(mid - half + 2.0 * half * i / 4.0);
    note("clean gap (%.4f, %.4f); mu grid %.3f .. %.3f", lo, hi, c.mu_grid.front(), c.mu_grid.back());
    const auto r = run_fermi_sweep(c);
    bool ok = r.summary.at("all_constant").get<bool>() && r.unreliable_rows() == 0;
    for (const auto& run : r.summary.at("runs")) {
        const bool nontrivial = run.at("value").get<long>() == 1;
        ok = ok && nontrivial;
        note("seed %d: parity %ld constant %d", run.at("seed").get<int>(), run.at("value").get<long>(),
               int(run.at("constant").get<bool>()));
    }
    note("unreliable rows %zu", r.unreliable_rows());
    return ok;
}

// ------------------------------------------------------------------ 4

bool bulk_edge() {
    ScenarioConfig z;
    z.scenario = "bec";
    z.a = {1.0};
    z.W = 1.0;
    z.L = 32;
    z.delta_lo = -0.6;
    z.delta_hi = 0.6;
    z.seeds = {1, 2, 3};
    bool ok = true;
    const auto rz = run_bec(z);
    const auto& tz = rz.table("bec");
    for (std::size_t i = 0; i < tz.rows.size(); ++i) {
        const auto& row = tz.rows[i];
        const double edge_raw = parse_double(row[8]);
        const long bulk = std::stol(row[4]), edge = std::stol(row[7]);
        const double dist = std::abs(edge_raw - std::round(edge_raw));
        const bool cell = dist < 0.1 && bulk == edge && tz.reliable[i];
        ok = ok && cell;
        note("QWZ 32x16 strip seed %s: bulk %ld (raw %.5f) edge %ld (raw %.5f, %.3f from integer)  %s",
               row[2].c_str(), bulk, parse_double(row[5]), edge, edge_raw, dist, cell ? "ok" : "MISMATCH");
    }
    ScenarioConfig z2 = z;
    z2.flavor = Flavor::Z2;
    z2.L = 24;
    z2.lambda_mix = 0.3;
    const auto r2 = run_bec(z2);
    const auto& t2 = r2.table("bec");
    for (std::size_t i = 0; i < t2.rows.size(); ++i) {
        const auto& row = t2.rows[i];
        const long bulk = std::stol(row[4]), edge = std::stol(row[7]);
        const bool cell = bulk == edge && t2.reliable[i];
        ok = ok && cell;
        note("BHZ 24x24 bulk / 24x12 cylinder seed %s: bulk parity %ld, spectral-flow parity %ld  %s",
               row[2].c_str(), bulk, edge, cell ? "ok" : "MISMATCH");
    }
    return ok;
}

// ------------------------------------------------------------------ 5

bool flux_kitaev() {
    bool ok = true;
    struct Point {
        double W;
        std::uint64_t seed;
    };
    for (const Point& p : {Point{0.0, 0}, Point{1.0, 1}, Point{1.0, 2}}) {
        const auto P = qwz_projection(24, 1.0, p.W, p.seed);
        const auto& g = P.geometry();
        const auto flux = z_index_trace_cube(P, flux_phase(g), flux_window(g, BulkIndexOptions{}));
        const auto kit = kitaev_index(P, nullptr, Flavor::Z);
        const double diff = std::abs(flux.raw - kit.raw);
        const auto stages = homotopy_path_check(P, {});
        bool equal = true;
        std::string vals;
        for (const auto& s : stages) {
            equal = equal && s.value == stages.front().value && s.reliable;
            char buf[32];
            std::snprintf(buf, sizeof buf, " %.3f", s.raw);
            vals += buf;
        }
        const bool cell = diff < 0.1 && equal && stages.front().value == flux.value;
        ok = ok && cell;
        note("W=%.0f seed %lu: flux %.5f kitaev %.5f |diff| %.5f; stages%s  %s", p.W, (unsigned long)p.seed,
               flux.raw, kit.raw, diff, vals.c_str(), cell ? "ok" : "MISMATCH");
    }
    return ok;
}

// ------------------------------------------------------------------ 6

bool toolkit() {
    bool ok = true;
    double worst = 0.0;
    for (int N = 1; N <= 20; ++N) {
        const auto f = fn_poly(N);
        cplx s = 0.0;
        for (int n = 1; n <= N; ++n) s += f.phi[n];
        worst = std::max(worst, std::abs(s));
    }
    ok = ok && worst < 1e-12;
    note("max |sum phi_n| over N <= 20: %.2e", worst);
    const auto f1 = fn_poly(1);
    double dev1 = 0.0;
    for (int j = 0; j <= 1000; ++j) dev1 = std::max(dev1, std::abs(f1(j / 1000.0) - 1.0));
    ok = ok && dev1 == 0.0;
    note("max |f_1 - 1| on a 1001-point grid: %.1e", dev1);
    const int N = minimal_fn_degree(0.25);
    const bool minimal = fn_poly(N).sup_distance() < 0.25 && fn_poly(N - 1).sup_distance() >= 0.25;
    ok = ok && minimal;
    note("minimal N = %d (sup distance %.5f; N-1 gives %.5f)", N, fn_poly(N).sup_distance(),
           fn_poly(N - 1).sup_distance());
    const auto P = qwz_projection(20, 1.0);
    const auto c = fredholm_certificate(OperatorMatrix(compressed_half_plane(P), P.geometry(), true), N);
    ok = ok && c.exp_distance < 0.25 && c.min_singular > 0.5;
    note("A = P L2 P (QWZ a=1, L=20): |exp(-2 pi i A) - f_N(A)| = %.4f, min singular value %.4f", c.exp_distance,
           c.min_singular);
    return ok;
}

// ------------------------------------------------------------------ 7

bool sule_suite() {
    ScenarioConfig c;
    c.scenario = "sule";
    c.a = {4.0};
    c.W = 8.0;
    c.L = 16;
    c.delta_lo = -0.5;
    c.delta_hi = 0.5;
    c.seeds = {1, 2, 3};
    const auto r = run_sule(c);
    const auto& s = r.table("sule_summary");
    for (const auto& row : s.rows)
        note("seed %s: %s vectors, orth %.1e, recon %.1e, resid %.1e, QUQ parity %s, head %s of %s, "
               "S3 tail change %.4f, round-trip error %.1e",
               row[1].c_str(), row[2].c_str(), parse_double(row[3]), parse_double(row[4]), parse_double(row[5]),
               row[8].c_str(), row[10].c_str(), row[11].c_str(), parse_double(row[12]), parse_double(row[13]));
    const auto& v = r.table("sule_vectors");
    double max_slope = -1e300;
    for (const auto& row : v.rows) max_slope = std::max(max_slope, parse_double(row[6]));
    note("%zu vectors, largest envelope slope %.3f", v.rows.size(), max_slope);
    return r.unreliable_rows() == 0 && !s.rows.empty();
}

// ------------------------------------------------------------------ 8

bool schatten_locality() {
    bool ok = true;
    std::vector<double> norms;
    const std::vector<int> sizes{12, 16, 20, 24};
    for (int L : sizes) {
        const auto P = qwz_projection(L, 1.0);
        const CMat U = flux_phase(P.geometry()).data();
        norms.push_back(schatten_norm(OperatorMatrix(CMat(P.data() * U - U * P.data()), P.geometry(), false), 3.0));
    }
    const double growth = std::log(norms.back() / norms.front()) / std::log(double(sizes.back()) / sizes.front());
    ok = ok && growth < 1.0;
    note("|[P,U]|_3 at L = 12..24: %.4f %.4f %.4f %.4f, growth exponent %.3f", norms[0], norms[1], norms[2],
           norms[3], growth);

    double theta = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto g = LatticeGeometry::bulk(12, 4, Boundary::open);
        const auto th = build_tr(g);
        const CMat P = fermi_projection(eig_hermitian(build_bhz(g, {1.0, 1.0, 0.3, seed})), 0.0).data();
        const CMat F = flux_operator(P, flux_phase_diagonal(g, 0.5, 0.5));
        theta = std::max(theta, check_theta_odd(OperatorMatrix(F, g), th));
    }
    ok = ok && theta < 1e-9;
    note("Theta-odd defect of PUP + 1 - P (BHZ W=1, 3 seeds): %.2e", theta);

    double leibniz = 0.0;
    const auto g = LatticeGeometry::bulk(8, 2, Boundary::open);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto A = fixtures::random_local(g, seed);
        const auto B = fixtures::random_confined(g, 2, 0.5, 50 + seed);
        const OperatorMatrix AB(A.data() * B.data(), g, false);
        for (int j : {1, 2}) {
            const CMat lhs = nc_derivative(AB, j).data();
            const CMat rhs = nc_derivative(A, j).data() * B.data() + A.data() * nc_derivative(B, j).data();
            leibniz = std::max(leibniz, (lhs - rhs).cwiseAbs().maxCoeff());
        }
    }
    ok = ok && leibniz < 1e-12;
    note("Leibniz rule defect: %.2e", leibniz);

    int passed = 0;
    double worst_left = 0.0, worst_right = 0.0;
    const double kappa = 0.5;
    for (std::uint64_t i = 1; i <= 20; ++i) {
        const auto A = fixtures::random_local(g, 1000 + i);
        const auto B = fixtures::random_confined(g, int(1 + i % 2), kappa, 2000 + i);
        const auto r = fixtures::ideal_ratios(A, B, int(1 + i % 2));
        worst_left = std::max(worst_left, r.left);
        worst_right = std::max(worst_right, r.right);
        passed += r.right <= 1.0 + 1e-12 && r.left <= fixtures::ideal_constant(2, kappa);
    }
    ok = ok && passed == 20;
    note("ideal property: %d/20 instances, worst ratios left %.3f right %.3f (bound %.3f)", passed, worst_left,
           worst_right, fixtures::ideal_constant(2, kappa));
    return ok;
}

// ------------------------------------------------------------------ 9

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text(e.path());
    return out;
}

bool determinism() {
    const fs::path root = fs::temp_directory_path() / "mgidx_acceptance_rerun";
    fs::remove_all(root);
    std::vector<ScenarioConfig> configs;
    for (const auto& name : scenario_names()) {
        ScenarioConfig c;
        c.scenario = name;
        c.L = 12;
        c.W = 1.0;
        c.seeds = {1, 2};
        if (name == "fermi-sweep") c.mu_grid = {-0.3, 0.0, 0.3};
        if (name == "sule") {
            c.a = {4.0};
            c.W = 8.0;
        }
        configs.push_back(c);
    }
    ScenarioConfig bhz = configs[0];
    bhz.flavor = Flavor::Z2;
    bhz.L = 8;
    configs.push_back(bhz);

    bool ok = true;
    for (const auto& c : configs) {
        const fs::path d1 = root / (c.scenario + "_" + flavor_key(c.flavor) + "_1");
        const fs::path d2 = root / (c.scenario + "_" + flavor_key(c.flavor) + "_2");
        write_run(run_scenario(c), c, d1);
        write_run(run_scenario(c), c, d2);
        const auto t1 = read_tree(d1), t2 = read_tree(d2);
        std::size_t csvs = 0;
        for (const auto& [name, text] : t1) csvs += name.size() > 4 && name.substr(name.size() - 4) == ".csv";
        const bool same = t1 == t2 && csvs > 0;
        ok = ok && same;
        note("%-15s %-2s %zu files (%zu csv) %s", c.scenario.c_str(), flavor_key(c.flavor), t1.size(), csvs,
               same ? "identical" : "DIFFER");
    }
    fs::remove_all(root);
    return ok;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "phase diagram Z2: clean BHZ parities, gap ratios, size stability", phase_diagram_z2},
        {2, "phase diagram Z: clean QWZ trace-cube values match the oracle", phase_diagram_z},
        {3, "stability: Z2 parity constant across the Fermi-energy grid", stability},
        {4, "bulk-edge correspondence: QWZ edge winding and BHZ spectral flow", bulk_edge},
        {5, "flux index equals Kitaev index; homotopy stages agree", flux_kitaev},
        {6, "f_N polynomial toolkit and Fredholm bounds", toolkit},
        {7, "SULE extraction, trivial QUQ index and (U - V)Q compactness", sule_suite},
        {8, "Schatten growth, Theta-odd defect, Leibniz rule, ideal property", schatten_locality},
        {9, "determinism: reruns give byte-identical outputs", determinism},
    };
    int failed = 0;
    std::printf("mgidx %s acceptance\n", kVersion);
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        bool ok = false;
        try {
            ok = c.run();
        } catch (const std::exception& e) {
            note("exception: %s", e.what());
        }
        failed += !ok;
        std::printf("[%s] criterion %d: %s (%.0fs)\n", ok ? "PASS" : "FAIL", c.id, c.title, seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed ? 1 : 0;
}
