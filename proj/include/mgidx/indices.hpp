#pragma once
// Index evaluators: trace-cube flux index, windowed winding, kernel parity,
// bulk / Kitaev / edge indices, edge spectral flow and the polynomial
// Fredholm toolkit.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lattice.hpp"
#include "locality.hpp"
#include "models.hpp"
#include "spectral.hpp"

namespace mgidx {

enum class Flavor { Z, Z2 };

inline const char* to_string(Flavor f) { return f == Flavor::Z ? "Z" : "Z2"; }

struct IndexReport {
    Flavor flavor = Flavor::Z;
    long value = 0;
    double raw = 0.0;
    double residual = 0.0;
    std::string method;
    bool reliable = true;
    std::map<std::string, double> diagnostics;
};

// ---------------------------------------------------------------- structure

// || F + Theta F^* Theta ||, Theta F^* Theta = J F^T conj(J).
inline double check_theta_odd(const CMat& F, const TimeReversal& theta) {
    const CMat& J = theta.J.data();
    const CMat D = F + J * F.transpose() * J.conjugate();
    return operator_norm(D);
}

inline double check_theta_odd(const OperatorMatrix& F, const TimeReversal& theta) {
    require_same_geometry(F.geometry(), theta.J.geometry(), "check_theta_odd");
    return check_theta_odd(F.data(), theta);
}

// PUP + (1 - P) for diagonal U
inline CMat flux_operator(const CMat& P, const CVec& u) {
    CMat F = P * u.asDiagonal() * P;
    F.diagonal().array() += 1.0;
    F -= P;
    return F;
}

// Lambda F Lambda + (1 - Lambda) for a 0/1 mask Lambda
inline CMat compress(const CMat& F, const RVec& mask) {
    CMat out = mask.asDiagonal() * F * mask.asDiagonal();
    out.diagonal().array() += (1.0 - mask.array()).cast<cplx>();
    return out;
}

// ------------------------------------------------------------- trace cube

// Re sum_i w_i^2 [(P - U P U^*)^3]_ii. Without a window this is the full
// trace, which vanishes identically for finite matrices.
inline IndexReport z_index_trace_cube(const CMat& P, const CVec& u,
                                      const std::optional<RVec>& window = std::nullopt) {
    const Index n = P.rows();
    const double pdef = n ? (P * P - P).cwiseAbs().maxCoeff() : 0.0;
    if (pdef >= 1e-8) throw std::invalid_argument("z_index_trace_cube: P is not a projection");
    if (n && (u.cwiseAbs().array() - 1.0).abs().maxCoeff() > 1e-12)
        throw std::invalid_argument("z_index_trace_cube: U is not unitary");
    if (window && window->size() != n) throw std::invalid_argument("z_index_trace_cube: window size");

    CMat D = P - u.asDiagonal() * P * u.conjugate().asDiagonal();
    const CMat D2 = D * D;
    cplx acc = 0.0;
    for (Index i = 0; i < n; ++i) {
        const cplx d = D2.row(i).transpose().cwiseProduct(D.col(i)).sum();
        const double w = window ? (*window)(i) : 1.0;
        acc += w * w * d;
    }
    IndexReport r;
    r.flavor = Flavor::Z;
    r.raw = acc.real();
    r.value = std::lround(r.raw);
    r.residual = std::abs(r.raw - double(r.value));
    r.method = window ? "trace_cube_windowed" : "trace_cube";
    r.reliable = r.residual <= 0.1;
    r.diagnostics["imag"] = acc.imag();
    return r;
}

inline IndexReport z_index_trace_cube(const OperatorMatrix& P, const OperatorMatrix& U,
                                      const std::optional<RVec>& window = std::nullopt) {
    require_same_geometry(P.geometry(), U.geometry(), "z_index_trace_cube");
    const CMat& Ud = U.data();
    CMat off = Ud;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() != 0.0)
        throw std::invalid_argument("z_index_trace_cube: U must be position-diagonal");
    return z_index_trace_cube(P.data(), CVec(Ud.diagonal()), window);
}

// -------------------------------------------------------- windowed winding

// Re tr(w (V^* L V - L) w) for diagonal 0/1 L and diagonal window w.
inline double windowed_winding(const CMat& V, const RVec& lambda1, const RVec& window) {
    const Index n = V.rows();
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double w2 = window(i) * window(i);
        if (w2 == 0.0) continue;
        double d = -lambda1(i);
        for (Index j = 0; j < n; ++j) d += lambda1(j) * std::norm(V(j, i));
        acc += w2 * d;
    }
    return acc;
}

inline double windowed_winding(const OperatorMatrix& V, const OperatorMatrix& lambda1,
                               const RVec& window) {
    require_same_geometry(V.geometry(), lambda1.geometry(), "windowed_winding");
    return windowed_winding(V.data(), lambda1.data().diagonal().real(), window);
}

// ----------------------------------------------------------- kernel parity

struct GapPolicy {
    double min_ratio = 5.0;
    double ceiling = 0.5;
    double zero_tolerance = 0.05;  // floor for the value below a split
    int max_candidates = 16;
    double localization_tolerance = 0.25;
};

namespace detail {

struct KernelSplit {
    Index count = 0;
    double ratio = 0.0;
    double below = 0.0;
    double above = 0.0;
    LowSingular low;  // ascending
};

// Only the lowest max_candidates + 1 singular values take part in the split.
inline KernelSplit split_kernel(const CMat& F, const GapPolicy& policy) {
    KernelSplit k;
    const Index n = F.rows();
    k.low = low_singular(F, std::min<Index>(n, policy.max_candidates + 1));
    const RVec& s = k.low.s;
    Index m = 0;
    while (m < s.size() && m < policy.max_candidates && s(m) < policy.ceiling) ++m;
    double best = -1.0;
    for (Index c = 0; c <= m; ++c) {
        const double above = c < s.size() ? s(c) : std::numeric_limits<double>::infinity();
        const double below = c == 0 ? 0.0 : s(c - 1);
        const double ratio = above / std::max(below, policy.zero_tolerance);
        if (ratio > best) {
            best = ratio;
            k.count = c;
            k.below = below;
            k.above = above;
        }
    }
    k.ratio = best;
    return k;
}

inline double windowed_weight(const CMat& vecs, Index col, const RVec& w) {
    double acc = 0.0;
    for (Index i = 0; i < vecs.rows(); ++i) acc += w(i) * w(i) * std::norm(vecs(i, col));
    return acc;
}

}  // namespace detail

// dim ker F mod 2 by singular-value gap detection. With a window, the
// near-kernel right singular subspace is weighted by the window so that a
// single localized kernel is counted even though finite Theta-odd matrices
// pair it with a compensating boundary kernel.
inline IndexReport kernel_parity(const CMat& F, const GapPolicy& policy = {},
                                 const std::optional<RVec>& window = std::nullopt) {
    if (F.rows() != F.cols()) throw std::invalid_argument("kernel_parity: F is not square");
    const auto k = detail::split_kernel(F, policy);
    IndexReport r;
    r.flavor = Flavor::Z2;
    r.raw = k.ratio;
    r.residual = k.ratio;
    r.reliable = k.ratio >= policy.min_ratio;
    r.diagnostics["count"] = double(k.count);
    r.diagnostics["gap_ratio"] = k.ratio;
    r.diagnostics["s_below"] = k.below;
    r.diagnostics["s_above"] = std::isinf(k.above) ? -1.0 : k.above;
    if (window) {
        double loc = 0.0;
        for (Index c = 0; c < k.count; ++c) loc += detail::windowed_weight(k.low.V, c, *window);
        const long rounded = std::lround(loc);
        r.value = ((rounded % 2) + 2) % 2;
        r.method = "kernel_parity_windowed";
        r.diagnostics["localized_weight"] = loc;
        if (std::abs(loc - double(rounded)) > policy.localization_tolerance) r.reliable = false;
    } else {
        r.value = long(k.count % 2);
        r.method = "kernel_parity";
    }
    return r;
}

inline IndexReport kernel_parity(const OperatorMatrix& F, const GapPolicy& policy = {},
                                 const std::optional<RVec>& window = std::nullopt) {
    return kernel_parity(F.data(), policy, window);
}

// dim ker F - dim ker F^* restricted to a window: windowed weight of the
// near-kernel right singular vectors minus that of the left ones. The raw
// value is the literal Fredholm index estimate.
inline IndexReport windowed_kernel_index(const CMat& F, const RVec& window,
                                         const GapPolicy& policy = {}) {
    const auto k = detail::split_kernel(F, policy);
    double right = 0.0, left = 0.0;
    for (Index c = 0; c < k.count; ++c) {
        right += detail::windowed_weight(k.low.V, c, window);
        left += detail::windowed_weight(k.low.U, c, window);
    }
    IndexReport r;
    r.flavor = Flavor::Z;
    r.raw = right - left;
    r.value = std::lround(r.raw);
    r.residual = std::abs(r.raw - double(r.value));
    r.method = "kernel_index_windowed";
    r.reliable = k.ratio >= policy.min_ratio && r.residual <= 0.2;
    r.diagnostics["count"] = double(k.count);
    r.diagnostics["gap_ratio"] = k.ratio;
    r.diagnostics["kernel_weight"] = right;
    r.diagnostics["cokernel_weight"] = left;
    return r;
}

// ------------------------------------------------------------- bulk index

struct BulkIndexOptions {
    double flux_x = 0.5;
    double flux_y = 0.5;
    double plateau_fraction = 0.25;  // of min(Lx, Ly)
    double ramp = 4.0;
    double theta_odd_tolerance = 1e-6;
    GapPolicy gap;
};

inline RVec flux_window(const LatticeGeometry& g, const BulkIndexOptions& o) {
    return window_weights(g, {o.flux_x, o.flux_y, o.plateau_fraction * std::min(g.Lx, g.Ly), o.ramp});
}

inline IndexReport bulk_index(const SpectralData& spec, double mu, const TimeReversal* theta,
                              Flavor flavor, const BulkIndexOptions& opt = {}) {
    const LatticeGeometry& g = spec.geometry;
    if (flavor == Flavor::Z2 && !theta)
        throw std::invalid_argument("bulk_index: Z2 flavor requires a time-reversal operator");
    const OperatorMatrix P = fermi_projection(spec, mu);
    const CVec u = flux_phase_diagonal(g, opt.flux_x, opt.flux_y);
    const RVec w = flux_window(g, opt);
    IndexReport r;
    if (flavor == Flavor::Z) {
        r = z_index_trace_cube(P.data(), u, w);
    } else {
        const CMat F = flux_operator(P.data(), u);
        const CMat& J = theta->J.data();
        const CMat D = F + J * F.transpose() * J.conjugate();
        double defect = D.norm();  // Frobenius bounds the operator norm
        if (defect >= opt.theta_odd_tolerance) defect = operator_norm(D);
        if (defect >= opt.theta_odd_tolerance) {
            r.flavor = Flavor::Z2;
            r.method = "kernel_parity_windowed";
            r.reliable = false;
        } else {
            r = kernel_parity(F, opt.gap, w);
        }
        r.diagnostics["theta_odd_defect_bound"] = defect;
    }
    r.diagnostics["mu"] = mu;
    r.diagnostics["rank_P"] = double(count_below(spec, mu));
    return r;
}

inline IndexReport bulk_index(const OperatorMatrix& H, double mu, const TimeReversal* theta,
                              Flavor flavor, const BulkIndexOptions& opt = {}) {
    return bulk_index(eig_hermitian(H), mu, theta, flavor, opt);
}

// ----------------------------------------------------------- Kitaev index

struct KitaevOptions {
    double center_x = -0.5;
    double center_y = -0.5;
    double plateau_fraction = 0.125;  // of min(Lx, Ly)
    double ramp = 4.0;
    GapPolicy gap;
};

// exp(-2 pi i A) for Hermitian A
inline CMat exp_2pi(const CMat& A, double sign = -1.0) {
    const EigResult e = eigh(A, true);
    return apply_spectral(e, [sign](double l) { return std::polar(1.0, sign * 2.0 * kPi * l); });
}

inline IndexReport kitaev_index(const CMat& P, const LatticeGeometry& g, const TimeReversal* theta,
                                Flavor flavor, const KitaevOptions& opt = {}) {
    if (flavor == Flavor::Z2 && !theta)
        throw std::invalid_argument("kitaev_index: Z2 flavor requires a time-reversal operator");
    const RVec l1 = half_space_mask(g, 1);
    const RVec l2 = half_space_mask(g, 2);
    CMat A = P * l2.asDiagonal() * P;
    A = 0.5 * (A + A.adjoint());
    const CMat V = exp_2pi(A);
    const RVec w = window_weights(
        g, {opt.center_x, opt.center_y, opt.plateau_fraction * std::min(g.Lx, g.Ly), opt.ramp});
    IndexReport r;
    if (flavor == Flavor::Z) {
        const double wind = windowed_winding(V, l1, w);
        r.flavor = Flavor::Z;
        r.raw = -wind;
        r.value = std::lround(r.raw);
        r.residual = std::abs(r.raw - double(r.value));
        r.method = "kitaev_windowed_winding";
        r.reliable = r.residual <= 0.2;
        r.diagnostics["winding"] = wind;
    } else {
        const CMat F = compress(V, l1);
        r = kernel_parity(F, opt.gap, w);
        r.method = "kitaev_kernel_parity_windowed";
    }
    return r;
}

inline IndexReport kitaev_index(const OperatorMatrix& P, const TimeReversal* theta, Flavor flavor,
                                const KitaevOptions& opt = {}) {
    return kitaev_index(P.data(), P.geometry(), theta, flavor, opt);
}

// ---------------------------------------------------- edge spectral flow

struct SpectralFlowOptions {
    int steps = 16;
    double window = 0.5;          // levels tracked within |lambda - mu| < window
    int max_refine = 4;           // bisection depth for ambiguous steps
    double overlap_threshold = 0.1;
    double endpoint_tolerance = 1e-3;
    double mu_shift = 0.05;
    int max_mu_shifts = 4;
    double pump_tolerance = 0.25;
};

using TwistBuilder = std::function<OperatorMatrix(double theta)>;

namespace detail {

struct TwistSample {
    double theta = 0.0;
    RVec values;   // all eigenvalues
    CMat vectors;  // all eigenvectors
};

inline TwistSample sample_twist(const TwistBuilder& b, double theta) {
    const SpectralData s = eig_hermitian(b(theta));
    return {theta, s.eigenvalues, s.eigenvectors};
}

inline RVec bottom_filter(const LatticeGeometry& g, int depth, bool smooth) {
    RVec f(g.dim());
    for (Index i = 0; i < g.dim(); ++i) {
        const double y = g.coords(i).y - g.y_min();
        if (!smooth)
            f(i) = y < depth ? 1.0 : 0.0;
        else
            f(i) = window_profile(y, depth - 1.0, 2.0);
    }
    return f;
}

struct FlowCount {
    long net = 0;
    int ambiguous = 0;
    int refinements = 0;
    int evaluations = 0;
};

inline void count_interval(const TwistBuilder& b, const TwistSample& s0, const TwistSample& s1,
                           double mu, const RVec& bottom, const SpectralFlowOptions& o, int depth,
                           FlowCount& out) {
    std::vector<Index> i0, i1;
    for (Index k = 0; k < s0.values.size(); ++k)
        if (std::abs(s0.values(k) - mu) < o.window) i0.push_back(k);
    for (Index k = 0; k < s1.values.size(); ++k)
        if (std::abs(s1.values(k) - mu) < o.window) i1.push_back(k);

    bool ambiguous = false;
    long net = 0;
    for (Index j : i0) {
        const bool below0 = s0.values(j) < mu;
        double best = -1.0;
        Index match = -1;
        bool same = false, opposite = false;
        for (Index k : i1) {
            const double ov = std::norm(s0.vectors.col(j).dot(s1.vectors.col(k)));
            if (ov > o.overlap_threshold) ((s1.values(k) < mu) == below0 ? same : opposite) = true;
            if (ov > best) {
                best = ov;
                match = k;
            }
        }
        // mixing inside a degenerate cluster is harmless unless it straddles mu
        if (opposite && (same || best < 0.5)) ambiguous = true;
        if (match < 0) continue;
        const bool below1 = s1.values(match) < mu;
        if (below0 == below1) continue;
        const double bw = (bottom.array() * s0.vectors.col(j).cwiseAbs2().array()).sum();
        if (bw >= 0.5) net += below0 ? 1 : -1;
    }
    if (ambiguous && depth < o.max_refine) {
        ++out.refinements;
        ++out.evaluations;
        const TwistSample mid = sample_twist(b, 0.5 * (s0.theta + s1.theta));
        count_interval(b, s0, mid, mu, bottom, o, depth + 1, out);
        count_interval(b, mid, s1, mu, bottom, o, depth + 1, out);
        return;
    }
    if (ambiguous) ++out.ambiguous;
    out.net += net;
}

inline double pumped_charge(const TwistSample& s0, const TwistSample& s1, double mu, const RVec& B) {
    auto q = [&](const TwistSample& s) {
        double acc = 0.0;
        for (Index k = 0; k < s.values.size() && s.values(k) < mu; ++k)
            acc += (B.array() * s.vectors.col(k).cwiseAbs2().array()).sum();
        return acc;
    };
    return q(s1) - q(s0);
}

}  // namespace detail

// Parity of the net number of bottom-edge levels crossing mu as the twist
// runs over [0, pi]. raw = signed crossing count (levels moving up count
// +1), residual = |pumped bottom charge + raw|.
inline IndexReport edge_z2_spectral_flow(const TwistBuilder& builder, double mu, int edge_filter_depth,
                                         const SpectralFlowOptions& opt = {}) {
    IndexReport r;
    r.flavor = Flavor::Z2;
    r.method = "edge_spectral_flow";
    detail::TwistSample first = detail::sample_twist(builder, 0.0);
    detail::TwistSample last = detail::sample_twist(builder, kPi);
    const LatticeGeometry g = builder(0.0).geometry();

    auto near_endpoint = [&](double m) {
        for (const auto* s : {&first, &last})
            for (Index k = 0; k < s->values.size(); ++k)
                if (std::abs(s->values(k) - m) < opt.endpoint_tolerance) return true;
        return false;
    };
    double mu_eff = mu;
    bool found = !near_endpoint(mu_eff);
    for (int k = 1; !found && k <= opt.max_mu_shifts; ++k) {
        for (int sgn : {1, -1}) {
            const double cand = mu + sgn * k * opt.mu_shift;
            if (!near_endpoint(cand)) {
                mu_eff = cand;
                found = true;
                break;
            }
        }
    }
    r.diagnostics["mu"] = mu;
    r.diagnostics["mu_effective"] = mu_eff;
    if (!found) {
        r.reliable = false;
        r.diagnostics["endpoint_degenerate"] = 1.0;
        return r;
    }

    const RVec bottom = detail::bottom_filter(g, edge_filter_depth, false);
    detail::FlowCount fc;
    fc.evaluations = 2;
    detail::TwistSample prev = first;
    for (int i = 1; i <= opt.steps; ++i) {
        detail::TwistSample cur = i == opt.steps ? last
                                                 : detail::sample_twist(builder, kPi * i / opt.steps);
        if (i != opt.steps) ++fc.evaluations;
        detail::count_interval(builder, prev, cur, mu_eff, bottom, opt, 0, fc);
        prev = std::move(cur);
    }
    const double pump = detail::pumped_charge(first, last, mu_eff,
                                              detail::bottom_filter(g, edge_filter_depth, true));
    r.raw = double(fc.net);
    r.value = std::labs(fc.net) % 2;
    // a level moving up through mu empties a state: pumped charge = -net
    r.residual = std::abs(pump + double(fc.net));
    r.reliable = fc.ambiguous == 0 && r.residual <= opt.pump_tolerance;
    r.diagnostics["crossings"] = double(fc.net);
    r.diagnostics["ambiguous_steps"] = fc.ambiguous;
    r.diagnostics["refinements"] = fc.refinements;
    r.diagnostics["evaluations"] = fc.evaluations;
    r.diagnostics["pumped_charge"] = pump;
    return r;
}

// ------------------------------------------------------------ edge index

struct EdgeIndexOptions {
    double center_x = -0.5;
    double center_y = 0.0;
    double plateau_fraction = 0.25;  // of Lx
    double ramp = 4.0;
    double interior_defect_tolerance = 0.1;
    // Z2 flavor: twisted cylinder builder, Fermi level and edge filter depth
    TwistBuilder twist_builder;
    double mu = 0.0;
    int edge_filter_depth = 4;
    SpectralFlowOptions flow;
};

// Regularized edge index W_1 R g(H_hat) R with R = iota^* chi_{Delta^c}(K) iota.
inline IndexReport edge_index(const EdgeSystem& edge, const OperatorMatrix& K_bulk, double delta_lo,
                              double delta_hi, const SwitchFunction& g, const TimeReversal* theta,
                              Flavor flavor, const EdgeIndexOptions& opt = {}) {
    if (flavor == Flavor::Z2) {
        if (!theta) throw std::invalid_argument("edge_index: Z2 flavor requires a time-reversal operator");
        if (!opt.twist_builder)
            throw std::invalid_argument("edge_index: Z2 flavor requires a twisted-cylinder builder");
        return edge_z2_spectral_flow(opt.twist_builder, opt.mu, opt.edge_filter_depth, opt.flow);
    }
    if (!(delta_lo < delta_hi)) throw std::invalid_argument("edge_index: empty gap interval");
    const LatticeGeometry& ge = edge.geometry;
    LatticeGeometry ge_check;
    const auto idx = edge_embedding(K_bulk.geometry(), &ge_check);
    require_same_geometry(ge, ge_check, "edge_index");

    const SpectralData ks = eig_hermitian(K_bulk);
    const Index lo = count_below(ks, delta_lo);
    const Index hi = count_below(ks, delta_hi);
    CMat R = CMat::Identity(ks.eigenvectors.rows(), ks.eigenvectors.rows());
    if (hi > lo) R -= detail::projector_from_columns(ks.eigenvectors, lo, hi - lo);
    const CMat Rh = restrict_rows_cols(R, idx);

    const SpectralData hs = eig_hermitian(edge.H);
    const CMat G = apply_switch(hs, g).data();
    CMat A = Rh * G * Rh;
    A = 0.5 * (A + A.adjoint());

    // interior rows of A^2 - A should be small when R regularizes
    const CMat D = A * A - A;
    double interior = 0.0;
    const int N = ge.internal_dim;
    for (Index s = 0; s < ge.sites(); ++s) {
        const int y = ge.site_y(s) - ge.y_min();
        if (4 * y < ge.Ly || 4 * y >= 3 * ge.Ly) continue;
        interior = std::max(interior, D.middleRows(s * N, N).norm());
    }

    const CMat V = exp_2pi(A);
    const RVec l1 = half_space_mask(ge, 1);
    const RVec w = window_weights(ge, {opt.center_x, opt.center_y, opt.plateau_fraction * ge.Lx, opt.ramp});
    const double wind = windowed_winding(V, l1, w);
    IndexReport r;
    r.flavor = Flavor::Z;
    r.raw = -wind;
    r.value = std::lround(r.raw);
    r.residual = std::abs(r.raw - double(r.value));
    r.method = "edge_windowed_winding";
    r.reliable = r.residual <= 0.2 && interior <= opt.interior_defect_tolerance;
    r.diagnostics["winding"] = wind;
    r.diagnostics["interior_qp_defect"] = interior;
    r.diagnostics["bulk_states_in_delta"] = double(hi - lo);
    return r;
}

// -------------------------------------------------------- polynomial f_N

struct PolyFN {
    int N = 1;
    std::vector<cplx> phi;  // phi[n], n = 0..N; phi[0] = 0 (the constant 1 is separate)

    cplx operator()(double alpha) const {
        cplx acc = 0.0;
        for (int n = N; n >= 1; --n) acc = (acc + phi[n]) * alpha;
        return 1.0 + acc;
    }

    double sup_distance(int grid = 10000) const {
        double best = 0.0;
        for (int j = 0; j < grid; ++j) {
            const double a = double(j) / double(grid - 1);
            best = std::max(best, std::abs((*this)(a) - std::polar(1.0, -2.0 * kPi * a)));
        }
        return best;
    }
};

// Coefficients phi_1..phi_N of f_N(alpha) = p_N(alpha) - (p_N(1) - 1) alpha,
// p_N the degree-N Taylor polynomial of exp(-2 pi i alpha), as (re, im)
// pairs in any field T; `pi` is the value used for pi.
template <class T>
std::vector<std::pair<T, T>> fn_coefficients(int N, const T& pi) {
    if (N < 1) throw std::invalid_argument("fn_poly: need N >= 1");
    std::vector<std::pair<T, T>> t(N + 1, {T(0), T(0)});
    t[0] = {T(1), T(0)};
    T sum_re(0), sum_im(0);  // p_N(1) - 1
    for (int n = 1; n <= N; ++n) {
        // t_n = t_{n-1} * (-2 pi i) / n
        const T re = T(2) * pi * t[n - 1].second / T(n);
        const T im = -(T(2) * pi * t[n - 1].first) / T(n);
        t[n] = {re, im};
        sum_re += re;
        sum_im += im;
    }
    std::vector<std::pair<T, T>> phi(N + 1, {T(0), T(0)});
    for (int n = 2; n <= N; ++n) phi[n] = t[n];
    phi[1] = {t[1].first - sum_re, t[1].second - sum_im};
    return phi;
}

inline PolyFN fn_poly(int N) {
    const auto c = fn_coefficients<long double>(N, 3.14159265358979323846264338327950288L);
    PolyFN f;
    f.N = N;
    f.phi.assign(N + 1, cplx(0.0));
    for (int n = 1; n <= N; ++n) f.phi[n] = cplx(double(c[n].first), double(c[n].second));
    return f;
}

inline int minimal_fn_degree(double threshold = 0.25, int n_max = 40) {
    for (int N = 1; N <= n_max; ++N)
        if (fn_poly(N).sup_distance() < threshold) return N;
    throw std::runtime_error("minimal_fn_degree: no degree up to n_max reaches the threshold");
}

struct FredholmCertificate {
    int N = 0;
    double exp_distance = 0.0;   // || exp(-2 pi i A) - f_N(A) ||
    double min_singular = 0.0;   // smallest singular value of f_N(A)
    double norm_fN = 0.0;        // || f_N(A) ||
    double grid_sup_fN = 0.0;    // max over the [0,1] grid of |f_N|
    DecayEnvelope envelope;      // confined (axis 2) profile of f_N(A) - 1
};

inline FredholmCertificate fredholm_certificate(const OperatorMatrix& A, int N) {
    const double defect = hermitian_defect(A.data());
    if (defect >= 1e-10) throw std::invalid_argument("fredholm_certificate: A is not Hermitian");
    const PolyFN f = fn_poly(N);
    const EigResult e = eigh(A.data(), true);
    FredholmCertificate c;
    c.N = N;
    c.min_singular = std::numeric_limits<double>::infinity();
    CVec fm1(e.values.size());
    for (Index k = 0; k < e.values.size(); ++k) {
        const double l = e.values(k);
        const cplx fl = f(l);
        c.exp_distance = std::max(c.exp_distance, std::abs(std::polar(1.0, -2.0 * kPi * l) - fl));
        c.min_singular = std::min(c.min_singular, std::abs(fl));
        c.norm_fN = std::max(c.norm_fN, std::abs(fl));
        fm1(k) = fl - 1.0;
    }
    for (int j = 0; j < 10000; ++j) c.grid_sup_fN = std::max(c.grid_sup_fN, std::abs(f(j / 9999.0)));
    CMat B = e.vectors * fm1.asDiagonal() * e.vectors.adjoint();
    c.envelope = decay_profile(OperatorMatrix(std::move(B), A.geometry()), DecayMode::confined, 2);
    return c;
}

// ------------------------------------------------------ homotopy stages

struct HomotopyParams {
    double a1 = 0.0;  // 0 selects the half-integer nearest L/4 + 1/2
    double a2 = -0.5;
    double nu = kPi / 2;
    double disc_plateau = 2.0;
    double disc_ramp = 3.0;
    int max_stage = 4;
    GapPolicy gap;
    KitaevOptions kitaev;
};

inline const char* homotopy_stage_name(int s) {
    static const char* names[] = {"flux", "cone_flux", "cut_double_cone", "exp_PxiP", "kitaev"};
    return names[s];
}

// Z index at each stage of the flux-to-Kitaev deformation, all reported in
// the oracle sign convention; diagnostics["literal"] keeps the sign of the
// literal Fredholm index of that stage's operator.
inline std::vector<IndexReport> homotopy_path_check(const OperatorMatrix& P, HomotopyParams p) {
    const LatticeGeometry& g = P.geometry();
    if (p.max_stage < 0 || p.max_stage > 4) throw std::invalid_argument("homotopy stage must be 0..4");
    if (p.a1 == 0.0) p.a1 = std::floor(std::min(g.Lx, g.Ly) / 4.0) + 0.5;
    if (p.a1 < std::min(g.Lx, g.Ly) / 4.0)
        throw std::invalid_argument("homotopy_path_check: flux must sit at least L/4 right of x1 = 0");
    const CMat& Pm = P.data();
    const RVec l1 = half_space_mask(g, 1);
    const RVec wa = window_weights(g, {p.a1, p.a2, p.disc_plateau, p.disc_ramp});
    std::vector<IndexReport> out;

    auto from_literal = [](IndexReport r, int stage) {
        r.diagnostics["literal"] = r.raw;
        r.diagnostics["stage"] = stage;
        r.raw = -r.raw;
        r.value = -r.value;
        return r;
    };

    const CVec ua = flux_phase_diagonal(g, p.a1, p.a2);
    out.push_back(from_literal(windowed_kernel_index(flux_operator(Pm, ua), wa, p.gap), 0));
    out.back().method = "stage0_flux_kernel_index";
    if (p.max_stage >= 1) {
        const RVec xr = cone_flux_function(g, p.a1, p.a2, p.nu, ConeSide::right, ConeMode::cone);
        const CVec ur = (kI * xr.cast<cplx>()).array().exp();
        out.push_back(from_literal(windowed_kernel_index(flux_operator(Pm, ur), wa, p.gap), 1));
        out.back().method = "stage1_cone_kernel_index";
    }
    RVec xi;
    if (p.max_stage >= 2) {
        xi = cone_flux_function(g, p.a1, p.a2, p.nu, ConeSide::right, ConeMode::double_cone);
        const CVec ulr = (kI * xi.cast<cplx>()).array().exp();
        out.push_back(from_literal(windowed_kernel_index(compress(flux_operator(Pm, ulr), l1), wa, p.gap), 2));
        out.back().method = "stage2_cut_double_cone_kernel_index";
    }
    if (p.max_stage >= 3) {
        CMat PxP = Pm * xi.cast<cplx>().asDiagonal() * Pm;
        PxP = 0.5 * (PxP + PxP.adjoint());
        const EigResult e = eigh(PxP, true);
        const CMat V3 = apply_spectral(e, [](double l) { return std::polar(1.0, l); });
        const RVec w0 = window_weights(g, {p.kitaev.center_x, p.kitaev.center_y,
                                           p.kitaev.plateau_fraction * std::min(g.Lx, g.Ly),
                                           p.kitaev.ramp});
        const double wind = windowed_winding(V3, l1, w0);
        IndexReport r;
        r.flavor = Flavor::Z;
        r.raw = -wind;  // literal index of Lambda1 V3 Lambda1 + Lambda1^perp
        r.value = std::lround(r.raw);
        r.residual = std::abs(r.raw - double(r.value));
        r.reliable = r.residual <= 0.2;
        r.diagnostics["winding"] = wind;
        out.push_back(from_literal(r, 3));
        out.back().method = "stage3_exp_PxiP_winding";
    }
    if (p.max_stage >= 4) {
        IndexReport r = kitaev_index(Pm, g, nullptr, Flavor::Z, p.kitaev);
        r.diagnostics["literal"] = r.raw;
        r.diagnostics["stage"] = 4;
        r.method = "stage4_kitaev_winding";
        out.push_back(r);
    }
    return out;
}

}  // namespace mgidx
