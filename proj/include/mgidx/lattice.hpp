#pragma once
// Finite square lattices, operators tagged with their lattice, half-space
// projections, flux phases and the non-commutative derivative.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "linalg.hpp"

namespace mgidx {

enum class Boundary { open, periodic };

inline const char* to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

struct SiteCoord {
    int x = 0;
    int y = 0;
    int orbital = 0;
};

struct LatticeGeometry {
    int Lx = 1;
    int Ly = 1;
    int internal_dim = 1;
    Boundary bc_x = Boundary::open;
    Boundary bc_y = Boundary::open;
    int origin_x = 0;  // coordinate of the first column
    int origin_y = 0;  // coordinate of the first row

    // Bulk sample centred at the origin: x, y in [-L/2, L/2).
    static LatticeGeometry bulk(int Lx, int Ly, int N, Boundary bcx, Boundary bcy) {
        LatticeGeometry g{Lx, Ly, N, bcx, bcy, -(Lx / 2), -(Ly / 2)};
        g.validate();
        return g;
    }
    static LatticeGeometry bulk(int L, int N, Boundary bc) { return bulk(L, L, N, bc, bc); }

    // Edge sample: x centred, y in [0, Ly) with an open bottom boundary.
    static LatticeGeometry edge(int Lx, int Ly, int N, Boundary bcx) {
        LatticeGeometry g{Lx, Ly, N, bcx, Boundary::open, -(Lx / 2), 0};
        g.validate();
        return g;
    }

    void validate() const {
        if (Lx < 1 || Ly < 1) throw std::invalid_argument("lattice extents must be positive");
        if (internal_dim < 1) throw std::invalid_argument("internal_dim must be positive");
    }

    Index sites() const { return Index(Lx) * Ly; }
    Index dim() const { return sites() * internal_dim; }
    int x_min() const { return origin_x; }
    int x_max() const { return origin_x + Lx - 1; }
    int y_min() const { return origin_y; }
    int y_max() const { return origin_y + Ly - 1; }

    bool contains(int x, int y) const {
        return x >= x_min() && x <= x_max() && y >= y_min() && y <= y_max();
    }

    Index site_of(int x, int y) const { return Index(y - origin_y) * Lx + (x - origin_x); }

    Index site_index(int x, int y, int orbital) const {
        if (x < x_min() || x > x_max())
            throw std::out_of_range("site_index: x=" + std::to_string(x) + " outside [" +
                                    std::to_string(x_min()) + ", " + std::to_string(x_max()) + "]");
        if (y < y_min() || y > y_max())
            throw std::out_of_range("site_index: y=" + std::to_string(y) + " outside [" +
                                    std::to_string(y_min()) + ", " + std::to_string(y_max()) + "]");
        if (orbital < 0 || orbital >= internal_dim)
            throw std::out_of_range("site_index: orbital=" + std::to_string(orbital) +
                                    " outside [0, " + std::to_string(internal_dim - 1) + "]");
        return site_of(x, y) * internal_dim + orbital;
    }

    SiteCoord coords(Index flat) const {
        if (flat < 0 || flat >= dim())
            throw std::out_of_range("coords: flat index " + std::to_string(flat) + " out of range");
        const Index s = flat / internal_dim;
        return {int(s % Lx) + origin_x, int(s / Lx) + origin_y, int(flat % internal_dim)};
    }

    int site_x(Index site) const { return int(site % Lx) + origin_x; }
    int site_y(Index site) const { return int(site / Lx) + origin_y; }

    // Displacement x1 - x2 along an axis, minimal image for periodic axes.
    int delta(int v1, int v2, int axis) const {
        int d = v1 - v2;
        const bool per = (axis == 1 ? bc_x : bc_y) == Boundary::periodic;
        const int L = axis == 1 ? Lx : Ly;
        if (per) {
            d = ((d % L) + L) % L;
            if (d > L / 2) d -= L;
        }
        return d;
    }

    bool operator==(const LatticeGeometry& o) const {
        return Lx == o.Lx && Ly == o.Ly && internal_dim == o.internal_dim && bc_x == o.bc_x &&
               bc_y == o.bc_y && origin_x == o.origin_x && origin_y == o.origin_y;
    }
    bool operator!=(const LatticeGeometry& o) const { return !(*this == o); }
};

inline Index site_index(const LatticeGeometry& g, int x, int y, int orbital) {
    return g.site_index(x, y, orbital);
}

inline void require_same_geometry(const LatticeGeometry& a, const LatticeGeometry& b,
                                  const char* where) {
    if (a != b) throw std::invalid_argument(std::string(where) + ": geometry mismatch");
}

class OperatorMatrix {
  public:
    OperatorMatrix() = default;
    OperatorMatrix(CMat data, LatticeGeometry g, bool hermitian_hint = false)
        : data_(std::move(data)), geometry_(g), hermitian_hint_(hermitian_hint) {
        geometry_.validate();
        if (data_.rows() != data_.cols()) throw std::invalid_argument("OperatorMatrix: not square");
        if (data_.rows() != geometry_.dim())
            throw std::invalid_argument("OperatorMatrix: dimension " + std::to_string(data_.rows()) +
                                        " does not match geometry dimension " +
                                        std::to_string(geometry_.dim()));
        if (hermitian_hint_ && hermitian_defect(data_) >= 1e-12)
            throw std::invalid_argument("OperatorMatrix: hermitian_hint set on non-Hermitian data");
    }

    const CMat& data() const { return data_; }
    const LatticeGeometry& geometry() const { return geometry_; }
    bool hermitian_hint() const { return hermitian_hint_; }
    Index dim() const { return data_.rows(); }

  private:
    CMat data_;
    LatticeGeometry geometry_;
    bool hermitian_hint_ = false;
};

// Per-flat-index 0/1 mask of Lambda_1 (x >= 0) or Lambda_2 (y >= 0).
inline RVec half_space_mask(const LatticeGeometry& g, int axis) {
    if (axis != 1 && axis != 2) throw std::invalid_argument("axis must be 1 or 2");
    RVec m(g.dim());
    for (Index i = 0; i < g.dim(); ++i) {
        const SiteCoord c = g.coords(i);
        m(i) = ((axis == 1 ? c.x : c.y) >= 0) ? 1.0 : 0.0;
    }
    return m;
}

inline OperatorMatrix half_space_projector(const LatticeGeometry& g, int axis) {
    CMat d = half_space_mask(g, axis).cast<cplx>().asDiagonal();
    return OperatorMatrix(std::move(d), g, true);
}

inline bool is_half_integer(double v) {
    const double f = v - std::floor(v);
    return std::abs(f - 0.5) < 1e-12;
}

inline CVec flux_phase_diagonal(const LatticeGeometry& g, double ax, double ay) {
    if (!is_half_integer(ax) || !is_half_integer(ay))
        throw std::invalid_argument("flux_phase: centre (" + std::to_string(ax) + ", " +
                                    std::to_string(ay) +
                                    ") is not a plaquette centre (phase singular on a site)");
    CVec u(g.dim());
    for (Index i = 0; i < g.dim(); ++i) {
        const SiteCoord c = g.coords(i);
        u(i) = std::polar(1.0, std::atan2(c.y - ay, c.x - ax));
    }
    return u;
}

inline OperatorMatrix flux_phase(const LatticeGeometry& g, double ax = 0.5, double ay = 0.5) {
    CMat d = flux_phase_diagonal(g, ax, ay).asDiagonal();
    return OperatorMatrix(std::move(d), g, false);
}

// Cosine-ramped disc window, per flat index: 1 within `plateau` of the
// centre, 0 beyond plateau + ramp.
struct SiteWindow {
    double cx = 0.0;
    double cy = 0.0;
    double plateau = 0.0;
    double ramp = 4.0;
};

inline double window_profile(double r, double plateau, double ramp) {
    if (r <= plateau) return 1.0;
    if (ramp <= 0.0 || r >= plateau + ramp) return 0.0;
    return 0.5 * (1.0 + std::cos(kPi * (r - plateau) / ramp));
}

inline RVec window_weights(const LatticeGeometry& g, const SiteWindow& w) {
    RVec out(g.dim());
    for (Index i = 0; i < g.dim(); ++i) {
        const SiteCoord c = g.coords(i);
        out(i) = window_profile(std::hypot(c.x - w.cx, c.y - w.cy), w.plateau, w.ramp);
    }
    return out;
}

enum class ConeSide { left, right };
enum class ConeMode { cone, double_cone };

// Angle-interpolated flux functions. Right cone at a: 0 on the lower ray,
// 2 pi on the upper ray. Left cone at a: 0 on the upper ray, 2 pi on the
// lower ray (counter-clockwise). Outside a single cone: 2 pi above the
// horizontal through the vertex, 0 below (right) and the reverse (left).
// Double mode places the right cone at a and the left cone at (-a1, a2):
// xi = 2 pi above, 0 below, angular interpolation inside both cones.
inline RVec cone_flux_function(const LatticeGeometry& g, double ax, double ay, double nu,
                               ConeSide side, ConeMode mode) {
    if (!(nu > 0.0 && nu < kPi)) throw std::invalid_argument("cone opening must lie in (0, pi)");
    if (!is_half_integer(ax) || !is_half_integer(ay))
        throw std::invalid_argument("cone vertex must be a plaquette centre");
    if (mode == ConeMode::double_cone && ax <= 0.0)
        throw std::invalid_argument("double cone needs a1 > 0");
    const double slope = 2.0 * kPi / nu;
    auto right = [&](double x, double y, bool& inside) {
        const double th = std::atan2(y - ay, x - ax);
        inside = std::abs(th) <= nu / 2;
        if (inside) return slope * (th + nu / 2);
        return y > ay ? 2.0 * kPi : 0.0;
    };
    auto left = [&](double x, double y, double bx, bool& inside) {
        double ang = std::atan2(y - ay, x - bx);
        if (ang < 0) ang += 2.0 * kPi;
        inside = std::abs(ang - kPi) <= nu / 2;
        if (inside) return slope * (ang - (kPi - nu / 2));
        return y > ay ? 0.0 : 2.0 * kPi;
    };
    RVec out(g.dim());
    for (Index i = 0; i < g.dim(); ++i) {
        const SiteCoord c = g.coords(i);
        bool in_r = false, in_l = false;
        double v;
        if (mode == ConeMode::cone) {
            v = side == ConeSide::right ? right(c.x, c.y, in_r) : left(c.x, c.y, ax, in_l);
        } else {
            const double vr = right(c.x, c.y, in_r);
            const double vl = left(c.x, c.y, -ax, in_l);
            if (in_r)
                v = vr;
            else if (in_l)
                v = 2.0 * kPi - vl;
            else
                v = c.y > ay ? 2.0 * kPi : 0.0;
        }
        out(i) = v;
    }
    return out;
}

// -i [Lambda_axis, A]
inline OperatorMatrix nc_derivative(const OperatorMatrix& A, int axis) {
    const RVec m = half_space_mask(A.geometry(), axis);
    const Index n = A.dim();
    CMat d(n, n);
    for (Index c = 0; c < n; ++c)
        for (Index r = 0; r < n; ++r) d(r, c) = -kI * (m(r) - m(c)) * A.data()(r, c);
    return OperatorMatrix(std::move(d), A.geometry(), A.hermitian_hint());
}

}  // namespace mgidx
