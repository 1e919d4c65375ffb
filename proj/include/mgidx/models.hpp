#pragma once
// BHZ and QWZ tight-binding Hamiltonians with on-site sigma_3 disorder, the
// time-reversal operator, Dirichlet edge truncation and the Bloch-space
// Chern oracle.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lattice.hpp"

namespace mgidx {

struct BhzParams {
    double a = 1.0;
    double W = 0.0;
    double lambda_mix = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

using Mat2 = Eigen::Matrix2cd;

inline Mat2 pauli(int k) {
    Mat2 s;
    switch (k) {
        case 0: s << 1, 0, 0, 1; break;
        case 1: s << 0, 1, 1, 0; break;
        case 2: s << 0, -kI, kI, 0; break;
        default: s << 1, 0, 0, -1; break;
    }
    return s;
}

inline CMat kron(const CMat& A, const CMat& B) {
    CMat out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

// Hamiltonian of the form  sum_x onsite(x) + sum_j (Re R_j (x) A_j + Im R_j (x) B_j)
// with <x|R_j|x - e_j> = phase. twist_x multiplies the x-wrap bonds by e^{i twist}.
struct HoppingModel {
    CMat onsite_unit;  // multiplied by a + omega(x)
    std::array<CMat, 2> A;
    std::array<CMat, 2> B;
};

inline CMat assemble(const LatticeGeometry& g, const HoppingModel& m, double a, double W,
                     std::uint64_t seed, double twist_x);

}  // namespace detail

// Disorder value omega(x, y), uniform on [-W/2, W/2), a pure function of
// (seed, x, y) so that bulk and edge samples share one realization.
inline double disorder_value(std::uint64_t seed, int x, int y, double W) {
    if (W == 0.0) return 0.0;
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)));
    h = detail::splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(y)) << 32));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return W * (u - 0.5);
}

inline CMat detail::assemble(const LatticeGeometry& g, const HoppingModel& m, double a, double W,
                             std::uint64_t seed, double twist_x) {
    const int N = g.internal_dim;
    CMat H = CMat::Zero(g.dim(), g.dim());
    std::array<CMat, 2> T;
    for (int j = 0; j < 2; ++j) T[j] = 0.5 * m.A[j] - 0.5 * kI * m.B[j];
    const cplx twist = std::polar(1.0, twist_x);
    for (int y = g.y_min(); y <= g.y_max(); ++y) {
        for (int x = g.x_min(); x <= g.x_max(); ++x) {
            const Index s = g.site_of(x, y) * N;
            H.block(s, s, N, N) += (a + disorder_value(seed, x, y, W)) * m.onsite_unit;
            for (int j = 0; j < 2; ++j) {
                int xn = x - (j == 0 ? 1 : 0);
                int yn = y - (j == 1 ? 1 : 0);
                cplx phase = 1.0;
                if (xn < g.x_min()) {
                    if (g.bc_x == Boundary::open) continue;
                    xn += g.Lx;
                    phase = twist;
                }
                if (yn < g.y_min()) {
                    if (g.bc_y == Boundary::open) continue;
                    yn += g.Ly;
                }
                const Index t = g.site_of(xn, yn) * N;
                H.block(s, t, N, N) += phase * T[j];
                H.block(t, s, N, N) += std::conj(phase) * T[j].adjoint();
            }
        }
    }
    return H;
}

inline OperatorMatrix build_bhz(const LatticeGeometry& g, const BhzParams& p, double twist_x = 0.0) {
    if (g.internal_dim != 4)
        throw std::invalid_argument("build_bhz: internal_dim must be 4, got " +
                                    std::to_string(g.internal_dim));
    if (p.W < 0.0) throw std::invalid_argument("build_bhz: W must be non-negative");
    using detail::kron;
    using detail::pauli;
    detail::HoppingModel m;
    m.onsite_unit = kron(pauli(3), pauli(0));
    m.A[0] = m.onsite_unit;
    m.A[1] = m.onsite_unit;
    m.B[0] = kron(pauli(1), pauli(3)) - p.lambda_mix * kron(pauli(1), pauli(2));
    m.B[1] = kron(pauli(2), pauli(0)) + p.lambda_mix * kron(pauli(1), pauli(1));
    CMat H = detail::assemble(g, m, p.a, p.W, p.seed, twist_x);
    return OperatorMatrix(std::move(H), g, true);
}

// Upper Kramers block: (a + Re R1 + Re R2 + omega) s3 + Im R2 s2 + Im R1 s1.
inline OperatorMatrix build_qwz(const LatticeGeometry& g, double a, double W = 0.0,
                                std::uint64_t seed = 0, double twist_x = 0.0) {
    if (g.internal_dim != 2)
        throw std::invalid_argument("build_qwz: internal_dim must be 2, got " +
                                    std::to_string(g.internal_dim));
    if (W < 0.0) throw std::invalid_argument("build_qwz: W must be non-negative");
    using detail::pauli;
    detail::HoppingModel m;
    m.onsite_unit = pauli(3);
    m.A[0] = pauli(3);
    m.A[1] = pauli(3);
    m.B[0] = pauli(1);
    m.B[1] = pauli(2);
    CMat H = detail::assemble(g, m, a, W, seed, twist_x);
    return OperatorMatrix(std::move(H), g, true);
}

// Theta = J C with J position-diagonal.
struct TimeReversal {
    OperatorMatrix J;
    bool applies_conjugation = true;

    CVec apply(const CVec& psi) const { return J.data() * psi.conjugate(); }
    // Theta M Theta^{-1} = J conj(M) J^{-1}
    CMat conjugate_op(const CMat& M) const {
        return J.data() * M.conjugate() * J.data().adjoint();
    }
};

// J = 1 (x) 1 (x) (-i s2) for BHZ; J = -i s2 for a two-orbital Kramers doublet.
inline TimeReversal build_tr(const LatticeGeometry& g) {
    const int N = g.internal_dim;
    if (N % 2 != 0)
        throw std::invalid_argument("build_tr: no Kramers structure for odd internal_dim " +
                                    std::to_string(N));
    if (N != 2 && N != 4)
        throw std::invalid_argument("build_tr: supported internal_dim is 2 or 4");
    CMat block = CMat::Zero(N, N);
    for (int k = 0; k < N; k += 2) {
        block(k, k + 1) = -1.0;
        block(k + 1, k) = 1.0;
    }
    CMat J = CMat::Zero(g.dim(), g.dim());
    for (Index s = 0; s < g.sites(); ++s) J.block(s * N, s * N, N, N) = block;
    return TimeReversal{OperatorMatrix(std::move(J), g, false), true};
}

inline double check_tri(const OperatorMatrix& H, const TimeReversal& theta) {
    require_same_geometry(H.geometry(), theta.J.geometry(), "check_tri");
    const CMat D = H.data() - theta.conjugate_op(H.data());
    return operator_norm(D, hermitian_defect(D) < 1e-13);
}

struct EdgeSystem {
    OperatorMatrix H;
    LatticeGeometry geometry;
    int perturbation_depth = 0;
    double perturbation_norm = 0.0;
};

// Flat indices of the bulk sample that survive the restriction to y >= 0,
// in the order of the edge geometry (the isometry iota).
inline std::vector<Index> edge_embedding(const LatticeGeometry& gb, LatticeGeometry* ge_out = nullptr) {
    if (gb.y_min() > 0 || gb.y_max() < 0)
        throw std::invalid_argument("truncate_to_edge: bulk geometry does not contain y = 0");
    LatticeGeometry ge{gb.Lx, gb.y_max() + 1, gb.internal_dim, gb.bc_x, Boundary::open,
                       gb.origin_x, 0};
    std::vector<Index> idx;
    idx.reserve(ge.dim());
    for (Index i = 0; i < ge.dim(); ++i) {
        const SiteCoord c = ge.coords(i);
        idx.push_back(gb.site_index(c.x, c.y, c.orbital));
    }
    if (ge_out) *ge_out = ge;
    return idx;
}

inline CMat restrict_rows_cols(const CMat& A, const std::vector<Index>& idx) {
    const Index n = Index(idx.size());
    CMat out(n, n);
    for (Index c = 0; c < n; ++c)
        for (Index r = 0; r < n; ++r) out(r, c) = A(idx[r], idx[c]);
    return out;
}

// Dirichlet truncation H_hat = iota^* H iota, plus an optional boundary
// perturbation whose support must lie within y < depth.
inline EdgeSystem truncate_to_edge(const OperatorMatrix& H_bulk,
                                   const std::optional<OperatorMatrix>& perturbation = std::nullopt,
                                   int depth = 0) {
    LatticeGeometry ge;
    const auto idx = edge_embedding(H_bulk.geometry(), &ge);
    CMat Hh = restrict_rows_cols(H_bulk.data(), idx);
    EdgeSystem out{OperatorMatrix(), ge, depth, 0.0};
    if (perturbation) {
        require_same_geometry(perturbation->geometry(), ge, "truncate_to_edge perturbation");
        const CMat& B = perturbation->data();
        for (Index c = 0; c < B.cols(); ++c)
            for (Index r = 0; r < B.rows(); ++r)
                if (B(r, c) != cplx(0.0) && (ge.coords(r).y >= depth || ge.coords(c).y >= depth))
                    throw std::invalid_argument("truncate_to_edge: perturbation support exceeds depth " +
                                                std::to_string(depth));
        Hh += B;
        out.perturbation_norm = operator_norm(B);
    }
    const bool herm = hermitian_defect(Hh) < 1e-12;
    out.H = OperatorMatrix(std::move(Hh), ge, herm);
    return out;
}

// Fukui-Hatsugai-Suzuki plaquette sum of the lower-band Berry curvature of
// the clean QWZ Bloch matrix d(k).sigma, d = (-sin kx, -sin ky, a + cos kx + cos ky).
inline int chern_oracle_clean(double a, int nk = 40) {
    for (double c : {0.0, 2.0, -2.0})
        if (std::abs(a - c) < 1e-9)
            throw std::invalid_argument("chern_oracle_clean: gapless parameter a=" + std::to_string(a));
    using V2 = Eigen::Vector2cd;
    std::vector<V2> u(std::size_t(nk) * nk);
    for (int i = 0; i < nk; ++i) {
        for (int j = 0; j < nk; ++j) {
            const double kx = 2.0 * kPi * i / nk, ky = 2.0 * kPi * j / nk;
            Eigen::Matrix2cd h = -std::sin(kx) * detail::pauli(1) - std::sin(ky) * detail::pauli(2) +
                                 (a + std::cos(kx) + std::cos(ky)) * detail::pauli(3);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h);
            if (es.eigenvalues()(1) - es.eigenvalues()(0) < 1e-8)
                throw std::invalid_argument("chern_oracle_clean: band touching on the k-grid");
            u[std::size_t(i) * nk + j] = es.eigenvectors().col(0);
        }
    }
    auto at = [&](int i, int j) -> const V2& { return u[std::size_t(i % nk) * nk + (j % nk)]; };
    double total = 0.0;
    for (int i = 0; i < nk; ++i) {
        for (int j = 0; j < nk; ++j) {
            const cplx l = at(i, j).dot(at(i + 1, j)) * at(i + 1, j).dot(at(i + 1, j + 1)) *
                           at(i + 1, j + 1).dot(at(i, j + 1)) * at(i, j + 1).dot(at(i, j));
            total += std::arg(l);
        }
    }
    return int(std::lround(total / (2.0 * kPi)));
}

}  // namespace mgidx
