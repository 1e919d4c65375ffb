#pragma once
// Semi-uniformly localized eigenbases, localization-centre unitary V,
// compactness of (U - V)Q and resolvent decay probes.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include <Eigen/QR>

#include "lattice.hpp"
#include "locality.hpp"
#include "spectral.hpp"

namespace mgidx {

struct SiteCenter {
    int x = 0;
    int y = 0;
    bool operator==(const SiteCenter& o) const { return x == o.x && y == o.y; }
};

struct SuleBasis {
    LatticeGeometry geometry;
    CMat vectors;                      // orthonormal columns psi_n
    std::vector<double> eigenvalues;   // lambda_n
    std::vector<SiteCenter> centers;   // x_n
    std::vector<DecayEnvelope> envelopes;

    Index size() const { return vectors.cols(); }
};

// |psi(x)| binned by rounded distance to the centre, log-log fit.
inline DecayEnvelope vector_envelope(const LatticeGeometry& g, const CVec& psi, SiteCenter c) {
    const int N = g.internal_dim;
    std::map<int, double> bins;
    for (Index s = 0; s < g.sites(); ++s) {
        const double d = std::hypot(double(g.delta(g.site_x(s), c.x, 1)),
                                    double(g.delta(g.site_y(s), c.y, 2)));
        double& b = bins[int(std::lround(d))];
        b = std::max(b, psi.segment(s * N, N).norm());
    }
    DecayEnvelope env;
    env.mode = DecayMode::offdiag;
    for (const auto& [d, v] : bins) {
        env.distance.push_back(d);
        env.max_norm.push_back(v);
    }
    detail::fit_loglog(env);
    return env;
}

// Iterated deflation of each eigenvalue cluster in [lo, hi).
inline SuleBasis sule_extract(const SpectralData& spec, double lo, double hi,
                              double cluster_tolerance = 1e-9) {
    if (!(lo < hi)) throw std::invalid_argument("sule_extract: need lo < hi");
    const LatticeGeometry& g = spec.geometry;
    const int N = g.internal_dim;
    const Index first = count_below(spec, lo);
    const Index last = count_below(spec, hi);
    SuleBasis b;
    b.geometry = g;
    b.vectors.resize(spec.eigenvectors.rows(), last - first);
    Index out = 0;

    Index k = first;
    while (k < last) {
        Index e = k + 1;
        while (e < last && spec.eigenvalues(e) - spec.eigenvalues(e - 1) < cluster_tolerance) ++e;
        const double lambda = spec.eigenvalues.segment(k, e - k).mean();
        CMat C = spec.eigenvectors.middleCols(k, e - k);  // P_lambda = C C^*
        while (C.cols() > 0) {
            // a_x = ||(P_lambda)_xx|| = largest eigenvalue of C_x C_x^*
            double amax = -1.0;
            std::vector<double> a(g.sites());
            for (Index s = 0; s < g.sites(); ++s) {
                const CMat Cx = C.middleRows(s * N, N);
                const CMat blk = Cx * Cx.adjoint();
                a[s] = eigvalsh(blk).maxCoeff();
                amax = std::max(amax, a[s]);
            }
            if (amax < 1e-12) throw NumericalError("sule_extract: numerical degeneracy (a_x0 < 1e-12)");
            Index best = -1;
            for (Index s = 0; s < g.sites(); ++s) {
                if (a[s] < amax - 1e-12 * amax) continue;
                if (best < 0 || g.site_x(s) < g.site_x(best) ||
                    (g.site_x(s) == g.site_x(best) && g.site_y(s) < g.site_y(best)))
                    best = s;
            }
            const CMat Cx = C.middleRows(best * N, N);
            const EigResult be = eigh(Cx * Cx.adjoint(), true);
            const CVec v0 = be.vectors.col(N - 1);
            const double ax = be.values(N - 1);
            const CVec c = Cx.adjoint() * v0 / std::sqrt(ax);  // unit vector in cluster coordinates
            b.vectors.col(out) = C * c;
            b.eigenvalues.push_back(lambda);
            b.centers.push_back({g.site_x(best), g.site_y(best)});
            ++out;
            if (C.cols() == 1) break;
            // restrict to the orthogonal complement of c
            Eigen::HouseholderQR<CMat> qr(c);
            const CMat Q = qr.householderQ();
            C = C * Q.rightCols(C.cols() - 1);
        }
        k = e;
    }
    for (Index n = 0; n < b.size(); ++n)
        b.envelopes.push_back(vector_envelope(g, b.vectors.col(n), b.centers[n]));
    return b;
}

struct SummabilityReport {
    double sum = 0.0;
    int distinct_sites = 0;
    int max_multiplicity = 0;
    double mean_multiplicity = 0.0;
};

inline SummabilityReport sule_summability(const std::vector<SiteCenter>& centers, int d, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("sule_summability: need eps > 0");
    SummabilityReport r;
    std::map<std::pair<int, int>, int> mult;
    for (const auto& c : centers) {
        r.sum += std::pow(1.0 + std::hypot(double(c.x), double(c.y)), -double(d) - eps);
        ++mult[{c.x, c.y}];
    }
    r.distinct_sites = int(mult.size());
    for (const auto& [k, m] : mult) r.max_multiplicity = std::max(r.max_multiplicity, m);
    r.mean_multiplicity = mult.empty() ? 0.0 : double(centers.size()) / double(mult.size());
    return r;
}

// V = sum_n e^{i arg(x_n - a)} psi_n psi_n^* + Q^perp, a the flux centre.
inline OperatorMatrix build_v(const SuleBasis& basis, const OperatorMatrix& Q, double ax = 0.5,
                              double ay = 0.5) {
    require_same_geometry(basis.geometry, Q.geometry(), "build_v");
    const CMat& Psi = basis.vectors;
    const Index n = Q.dim();
    const CMat recon = basis.size() ? CMat(Psi * Psi.adjoint()) : CMat::Zero(n, n);
    const double mismatch = n ? (recon - Q.data()).cwiseAbs().maxCoeff() : 0.0;
    if (mismatch > 1e-8)
        throw std::invalid_argument("build_v: basis does not span ran Q (mismatch " +
                                    std::to_string(mismatch) + ")");
    CVec ph(basis.size());
    for (Index k = 0; k < basis.size(); ++k)
        ph(k) = std::polar(1.0, std::atan2(basis.centers[k].y - ay, basis.centers[k].x - ax));
    CMat V = CMat::Identity(n, n) - Q.data();
    if (basis.size()) V += Psi * ph.asDiagonal() * Psi.adjoint();
    return OperatorMatrix(std::move(V), Q.geometry(), false);
}

struct CompactnessProbe {
    std::vector<double> singular_values;  // descending, all of them
    std::vector<double> partial_p1;       // cumulative sum s_k
    std::vector<double> partial_p3;       // cumulative sum s_k^3
    Index rank_q = 0;
    Index head = 0;                       // first k with s_k < 0.1 s_1
    double tail_change_p3 = 0.0;          // relative change of the p=3 sum over the last quarter of rank_q
};

inline CompactnessProbe compactness_probe(const OperatorMatrix& U, const OperatorMatrix& V,
                                          const OperatorMatrix& Q) {
    require_same_geometry(U.geometry(), V.geometry(), "compactness_probe");
    require_same_geometry(U.geometry(), Q.geometry(), "compactness_probe");
    const CMat B = (U.data() - V.data()) * Q.data();
    CompactnessProbe c;
    const RVec s = singular_values(B);
    c.singular_values.assign(s.data(), s.data() + s.size());
    double a1 = 0.0, a3 = 0.0;
    for (double v : c.singular_values) {
        a1 += v;
        a3 += v * v * v;
        c.partial_p1.push_back(a1);
        c.partial_p3.push_back(a3);
    }
    c.rank_q = Index(std::lround(Q.data().trace().real()));
    const double s1 = c.singular_values.empty() ? 0.0 : c.singular_values[0];
    c.head = 0;
    while (c.head < Index(c.singular_values.size()) && c.singular_values[c.head] >= 0.1 * s1 && s1 > 0)
        ++c.head;
    if (c.rank_q >= 4) {
        const double total = c.partial_p3[c.rank_q - 1];
        const double at = c.partial_p3[(3 * c.rank_q) / 4 - 1];
        c.tail_change_p3 = total > 0 ? (total - at) / total : 0.0;
    }
    return c;
}

struct ResolventProbe {
    double E = 0.0;
    double eps = 0.0;
    DecayEnvelope envelope;
};

struct ResolventSummary {
    std::vector<ResolventProbe> probes;
    std::vector<double> energies;
    std::vector<bool> uniform;  // per energy: envelopes within a factor 3 across eps
};

inline ResolventSummary resolvent_probe(const SpectralData& spec, const std::vector<double>& E_list,
                                        const std::vector<double>& eps_list) {
    ResolventSummary out;
    for (double E : E_list) {
        for (Index k = 0; k < spec.eigenvalues.size(); ++k)
            if (std::abs(spec.eigenvalues(k) - E) < 1e-9)
                throw std::invalid_argument("resolvent_probe: E lies on an eigenvalue");
        std::vector<DecayEnvelope> envs;
        for (double eps : eps_list) {
            CVec d(spec.eigenvalues.size());
            for (Index k = 0; k < d.size(); ++k) d(k) = 1.0 / (spec.eigenvalues(k) - cplx(E, eps));
            CMat G = spec.eigenvectors * d.asDiagonal() * spec.eigenvectors.adjoint();
            envs.push_back(decay_profile(OperatorMatrix(std::move(G), spec.geometry), DecayMode::offdiag));
            out.probes.push_back({E, eps, envs.back()});
        }
        bool uni = true;
        for (std::size_t i = 1; i < envs.size(); ++i) {
            const auto& a = envs[0].max_norm;
            const auto& b = envs[i].max_norm;
            for (std::size_t j = 0; j < std::min(a.size(), b.size()); ++j) {
                if (a[j] < 1e-300 && b[j] < 1e-300) continue;
                const double r = a[j] > b[j] ? a[j] / b[j] : b[j] / a[j];
                if (!(r <= 3.0)) uni = false;
            }
        }
        out.energies.push_back(E);
        out.uniform.push_back(uni);
    }
    return out;
}

}  // namespace mgidx
