#pragma once
// Decay envelopes of lattice operators, quasi-projection defects and
// Schatten norms.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lattice.hpp"

namespace mgidx {

enum class DecayMode { offdiag, offdiag_vs_center, confined };

inline const char* to_string(DecayMode m) {
    switch (m) {
        case DecayMode::offdiag: return "offdiag";
        case DecayMode::offdiag_vs_center: return "offdiag_vs_center";
        default: return "confined";
    }
}

struct DecayEnvelope {
    DecayMode mode = DecayMode::offdiag;
    int axis = 0;
    std::vector<double> distance;
    std::vector<double> max_norm;
    double slope = std::numeric_limits<double>::quiet_NaN();  // -mu_hat
    double nu_hat = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double residual = std::numeric_limits<double>::quiet_NaN();
    int fit_points = 0;

    bool empty() const {
        return std::all_of(max_norm.begin(), max_norm.end(), [](double v) { return v == 0.0; });
    }
};

namespace detail {

// Operator norm of the N x N block (s, t).
inline double block_norm(const CMat& A, int N, Index s, Index t) {
    const auto B = A.block(s * N, t * N, N, N);
    if (N == 1) return std::abs(B(0, 0));
    if (N == 2) {
        const Eigen::Matrix2cd M = B.adjoint() * B;
        const double tr = M(0, 0).real() + M(1, 1).real();
        const double df = M(0, 0).real() - M(1, 1).real();
        return std::sqrt(std::max(0.0, 0.5 * (tr + std::sqrt(df * df + 4.0 * std::norm(M(0, 1))))));
    }
    return CMat(B).operatorNorm();
}

inline double site_distance(const LatticeGeometry& g, Index s, Index t) {
    const int dx = g.delta(g.site_x(s), g.site_x(t), 1);
    const int dy = g.delta(g.site_y(s), g.site_y(t), 2);
    return std::hypot(double(dx), double(dy));
}

// Least squares of y on the columns of X (with intercept in column 0).
inline Eigen::VectorXd lstsq(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    return X.colPivHouseholderQr().solve(y);
}

inline void fit_loglog(DecayEnvelope& env) {
    double dmax = 0.0, gmax = 0.0;
    for (std::size_t i = 0; i < env.distance.size(); ++i) {
        dmax = std::max(dmax, env.distance[i]);
        gmax = std::max(gmax, env.max_norm[i]);
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < env.distance.size(); ++i) {
        const double d = env.distance[i];
        const double v = env.max_norm[i];
        if (d > 0.85 * dmax) continue;
        if (env.mode != DecayMode::confined && d < 1.0) continue;
        if (!(v > 1e-14 * gmax) || v <= 0.0) continue;
        pts.emplace_back(std::log1p(d), std::log(v));
    }
    env.fit_points = int(pts.size());
    if (pts.size() < 2) return;
    Eigen::MatrixXd X(pts.size(), 2);
    Eigen::VectorXd y(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = pts[i].first;
        y(i) = pts[i].second;
    }
    const Eigen::VectorXd c = lstsq(X, y);
    env.intercept = c(0);
    env.slope = c(1);
    env.residual = std::sqrt((X * c - y).squaredNorm() / double(pts.size()));
}

}  // namespace detail

inline DecayEnvelope decay_profile(const OperatorMatrix& A, DecayMode mode, int axis = 2) {
    const LatticeGeometry& g = A.geometry();
    const int N = g.internal_dim;
    const Index ns = g.sites();
    const CMat& M = A.data();
    DecayEnvelope env;
    env.mode = mode;
    env.axis = mode == DecayMode::confined ? axis : 0;

    if (mode == DecayMode::confined) {
        if (axis != 1 && axis != 2) throw std::invalid_argument("confined axis must be 1 or 2");
        std::map<int, double> bins;
        for (Index s = 0; s < ns; ++s) {
            double row = 0.0;
            for (Index t = 0; t < ns; ++t) row = std::max(row, detail::block_norm(M, N, s, t));
            const int key = std::abs(axis == 1 ? g.site_x(s) : g.site_y(s));
            double& b = bins[key];
            b = std::max(b, row);
        }
        for (const auto& [d, v] : bins) {
            env.distance.push_back(d);
            env.max_norm.push_back(v);
        }
        detail::fit_loglog(env);
        return env;
    }

    std::map<int, double> bins;
    std::map<std::pair<int, int>, double> bins2;
    for (Index s = 0; s < ns; ++s) {
        const double rc = std::hypot(double(g.site_x(s)), double(g.site_y(s)));
        for (Index t = 0; t < ns; ++t) {
            if (s == t) continue;
            const double d = detail::site_distance(g, s, t);
            const double v = detail::block_norm(M, N, s, t);
            const int key = int(std::lround(d));
            double& b = bins[key];
            b = std::max(b, v);
            if (mode == DecayMode::offdiag_vs_center) {
                double& b2 = bins2[{key, int(std::lround(rc))}];
                b2 = std::max(b2, v);
            }
        }
    }
    for (const auto& [d, v] : bins) {
        env.distance.push_back(d);
        env.max_norm.push_back(v);
    }
    detail::fit_loglog(env);

    if (mode == DecayMode::offdiag_vs_center) {
        double dmax = 0.0, gmax = 0.0;
        for (const auto& [k, v] : bins2) {
            dmax = std::max(dmax, double(k.first));
            gmax = std::max(gmax, v);
        }
        std::vector<std::array<double, 3>> pts;
        for (const auto& [k, v] : bins2) {
            if (k.first < 1 || k.first > 0.85 * dmax || !(v > 1e-14 * gmax)) continue;
            pts.push_back({std::log1p(double(k.first)), std::log1p(double(k.second)), std::log(v)});
        }
        if (pts.size() >= 3) {
            Eigen::MatrixXd X(pts.size(), 3);
            Eigen::VectorXd y(pts.size());
            for (std::size_t i = 0; i < pts.size(); ++i) {
                X(i, 0) = 1.0;
                X(i, 1) = pts[i][0];
                X(i, 2) = pts[i][1];
                y(i) = pts[i][2];
            }
            const Eigen::VectorXd c = detail::lstsq(X, y);
            env.intercept = c(0);
            env.slope = c(1);
            env.nu_hat = c(2);
            env.residual = std::sqrt((X * c - y).squaredNorm() / double(pts.size()));
            env.fit_points = int(pts.size());
        }
    }
    return env;
}

// Max over sites with |x_axis| >= threshold of the Euclidean norm of the
// site's row block.
inline double confined_summary(const OperatorMatrix& A, int axis, double threshold) {
    const LatticeGeometry& g = A.geometry();
    const int N = g.internal_dim;
    double out = 0.0;
    for (Index s = 0; s < g.sites(); ++s) {
        const int c = std::abs(axis == 1 ? g.site_x(s) : g.site_y(s));
        if (c < threshold) continue;
        out = std::max(out, A.data().middleRows(s * N, N).norm());
    }
    return out;
}

struct QuasiProjectionReport {
    DecayEnvelope envelope;  // of A^2 - A, confined along the axis
    double summary = 0.0;    // max row norm of A^2 - A at |x_axis| >= L/4
    double overall = 0.0;    // max row norm of A^2 - A anywhere
    bool quasi_projection = true;
};

inline QuasiProjectionReport quasi_projection_defect(const OperatorMatrix& A, int axis) {
    const double defect = hermitian_defect(A.data());
    if (defect >= 1e-10)
        throw std::invalid_argument("quasi_projection_defect: A is not Hermitian (defect " +
                                    std::to_string(defect) + ")");
    const LatticeGeometry& g = A.geometry();
    OperatorMatrix D(A.data() * A.data() - A.data(), g, false);
    QuasiProjectionReport r;
    r.envelope = decay_profile(D, DecayMode::confined, axis);
    const double L = axis == 1 ? g.Lx : g.Ly;
    r.summary = confined_summary(D, axis, L / 4.0);
    r.overall = confined_summary(D, axis, 0.0);
    r.quasi_projection = r.overall < 1e-12 || r.summary <= 0.1 * r.overall;
    return r;
}

inline double schatten_norm(const OperatorMatrix& A, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("schatten_norm: need p >= 1");
    const RVec s = singular_values(A.data());
    if (std::isinf(p)) return s.size() ? s(0) : 0.0;
    double acc = 0.0;
    for (Index k = 0; k < s.size(); ++k) acc += std::pow(s(k), p);
    return std::pow(acc, 1.0 / p);
}

inline std::vector<double> singular_value_profile(const OperatorMatrix& A, Index k) {
    if (k < 0 || k > A.dim()) throw std::invalid_argument("singular_value_profile: k exceeds dim");
    const RVec s = singular_values(A.data());
    return std::vector<double>(s.data(), s.data() + k);
}

}  // namespace mgidx
