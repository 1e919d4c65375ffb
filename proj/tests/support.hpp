#pragma once
// Random operator ensembles shared by the unit tests and the acceptance run.

#include <cstdint>
#include <random>

#include "mgidx/locality.hpp"

namespace mgidx::fixtures {

// Random Hermitian operator with on-site and nearest-neighbour blocks only.
inline OperatorMatrix random_local(const LatticeGeometry& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const int N = g.internal_dim;
    CMat A = CMat::Zero(g.dim(), g.dim());
    for (Index s = 0; s < g.sites(); ++s)
        for (Index t = 0; t < g.sites(); ++t) {
            const int dx = std::abs(g.delta(g.site_x(s), g.site_x(t), 1));
            const int dy = std::abs(g.delta(g.site_y(s), g.site_y(t), 2));
            if (dx + dy > 1) continue;
            for (int a = 0; a < N; ++a)
                for (int b = 0; b < N; ++b) A(s * N + a, t * N + b) = cplx(nd(rng), nd(rng));
        }
    return OperatorMatrix(CMat((A + A.adjoint()) / 2.0), g, true);
}

// Random operator whose rows decay as exp(-kappa |x_axis|).
inline OperatorMatrix random_confined(const LatticeGeometry& g, int axis, double kappa, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    CMat B(g.dim(), g.dim());
    for (Index r = 0; r < g.dim(); ++r) {
        const SiteCoord c = g.coords(r);
        const double w = std::exp(-kappa * std::abs(axis == 1 ? c.x : c.y));
        for (Index k = 0; k < g.dim(); ++k) B(r, k) = w * cplx(nd(rng), nd(rng));
    }
    return OperatorMatrix(std::move(B), g, false);
}

struct IdealRatios {
    double left = 0.0;   // summary(AB) / (|A| summary(B))
    double right = 0.0;  // summary(BA) / (|A| summary(B))
};

inline IdealRatios ideal_ratios(const OperatorMatrix& A, const OperatorMatrix& B, int axis) {
    const LatticeGeometry& g = A.geometry();
    const double thr = (axis == 1 ? g.Lx : g.Ly) / 4.0;
    const double denom = operator_norm(A.data(), A.hermitian_hint()) * confined_summary(B, axis, thr);
    const OperatorMatrix AB(A.data() * B.data(), g, false);
    const OperatorMatrix BA(B.data() * A.data(), g, false);
    return {confined_summary(AB, axis, thr) / denom, confined_summary(BA, axis, thr) / denom};
}

// Constant for the left product: one hop of a nearest-neighbour operator
// costs at most sqrt(5 N) |A| e^kappa in row norm.
inline double ideal_constant(int N, double kappa) { return std::sqrt(5.0 * N) * std::exp(kappa) * 1.5; }

}  // namespace mgidx::fixtures
