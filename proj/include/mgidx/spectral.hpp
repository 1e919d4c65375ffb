#pragma once
// Hermitian diagonalization and functional calculus.

#include <cmath>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

#include "lattice.hpp"

namespace mgidx {

// Receives non-fatal warnings (rank ambiguity and the like). Defaults to stderr.
inline std::function<void(const std::string&)>& warning_sink() {
    static std::function<void(const std::string&)> sink = [](const std::string& msg) {
        std::cerr << "mgidx warning: " << msg << '\n';
    };
    return sink;
}

inline void warn(const std::string& msg) {
    if (warning_sink()) warning_sink()(msg);
}

struct SpectralData {
    RVec eigenvalues;  // ascending
    CMat eigenvectors; // columns
    LatticeGeometry geometry;
};

inline SpectralData eig_hermitian(const OperatorMatrix& H) {
    const double defect = hermitian_defect(H.data());
    if (defect >= 1e-10)
        throw std::invalid_argument("eig_hermitian: input is not Hermitian (defect " +
                                    std::to_string(defect) + ")");
    EigResult e = eigh(H.data(), true);
    return SpectralData{std::move(e.values), std::move(e.vectors), H.geometry()};
}

namespace detail {

inline void check_ambiguity(const RVec& ev, double t, const char* where) {
    for (Index k = 0; k < ev.size(); ++k)
        if (std::abs(ev(k) - t) < 1e-12) {
            warn(std::string(where) + ": threshold " + std::to_string(t) +
                 " within 1e-12 of an eigenvalue; strict inequality used");
            return;
        }
}

inline CMat projector_from_columns(const CMat& V, Index first, Index count) {
    if (count == 0) return CMat::Zero(V.rows(), V.rows());
    const auto cols = V.middleCols(first, count);
    return cols * cols.adjoint();
}

}  // namespace detail

inline Index count_below(const SpectralData& s, double mu) {
    Index k = 0;
    while (k < s.eigenvalues.size() && s.eigenvalues(k) < mu) ++k;
    return k;
}

// P = chi_(-inf, mu)(H)
inline OperatorMatrix fermi_projection(const SpectralData& s, double mu) {
    detail::check_ambiguity(s.eigenvalues, mu, "fermi_projection");
    const Index k = count_below(s, mu);
    return OperatorMatrix(detail::projector_from_columns(s.eigenvectors, 0, k), s.geometry, false);
}

// chi_[a, b)(H)
inline OperatorMatrix spectral_projection(const SpectralData& s, double a, double b) {
    if (!(a < b)) throw std::invalid_argument("spectral_projection: need a < b");
    detail::check_ambiguity(s.eigenvalues, a, "spectral_projection");
    detail::check_ambiguity(s.eigenvalues, b, "spectral_projection");
    const Index lo = count_below(s, a);
    const Index hi = count_below(s, b);
    return OperatorMatrix(detail::projector_from_columns(s.eigenvectors, lo, hi - lo), s.geometry,
                          false);
}

enum class SwitchShape { quintic, linear, step };

// Monotone ramp from 1 (t <= c) to 0 (t >= d). The step shape jumps at c:
// g(t) = 1 for t < c and 0 otherwise, i.e. chi_(-inf, c).
struct SwitchFunction {
    double c = 0.0;
    double d = 1.0;
    SwitchShape shape = SwitchShape::quintic;

    double operator()(double t) const {
        if (shape == SwitchShape::step) return t < c ? 1.0 : 0.0;
        if (t <= c) return 1.0;
        if (t >= d) return 0.0;
        const double u = (t - c) / (d - c);
        if (shape == SwitchShape::linear) return 1.0 - u;
        return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    }
};

inline SwitchFunction make_switch(double c, double d, SwitchShape shape = SwitchShape::quintic) {
    if (!(c < d)) throw std::invalid_argument("make_switch: need c < d");
    return SwitchFunction{c, d, shape};
}

template <class F>
OperatorMatrix apply_function(const SpectralData& s, F&& f) {
    CVec fv(s.eigenvalues.size());
    for (Index k = 0; k < fv.size(); ++k) fv(k) = cplx(f(s.eigenvalues(k)));
    CMat out = s.eigenvectors * fv.asDiagonal() * s.eigenvectors.adjoint();
    return OperatorMatrix(std::move(out), s.geometry, false);
}

inline OperatorMatrix apply_switch(const SpectralData& s, const SwitchFunction& g) {
    return apply_function(s, g);
}

}  // namespace mgidx
