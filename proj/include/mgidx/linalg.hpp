#pragma once
// Dense Hermitian eigensolver and SVD on top of LAPACKE, plus small helpers
// shared by every module.

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>
#include <algorithm>

#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#include <lapacke.h>

#include <Eigen/Dense>

namespace mgidx {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct EigResult {
    RVec values;   // ascending
    CMat vectors;  // columns, empty when values-only
};

struct SvdResult {
    RVec s;  // descending
    CMat U;  // left singular vectors (columns)
    CMat V;  // right singular vectors (columns), A = U diag(s) V^*
};

// Eigen-decomposition of a Hermitian matrix (lower triangle is read).
// Uses the MRRR driver: the divide-and-conquer drivers route through real
// dgemm, which is wrong on some OpenBLAS builds (see tests/test_spectral.cpp).
inline EigResult eigh(const CMat& A, bool want_vectors = true) {
    if (A.rows() != A.cols()) throw std::invalid_argument("eigh: matrix is not square");
    const lapack_int n = static_cast<lapack_int>(A.rows());
    EigResult r;
    r.values.resize(n);
    if (n == 0) return r;
    CMat work = A;
    lapack_int found = 0;
    std::vector<lapack_int> support(2 * std::size_t(n));
    if (want_vectors) r.vectors.resize(n, n);
    const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'A', 'L', n,
                                           work.data(), n, 0.0, 0.0, 0, 0, 0.0, &found,
                                           r.values.data(), want_vectors ? r.vectors.data() : nullptr,
                                           n, support.data());
    if (info != 0 || found != n) throw NumericalError("zheevr failed, info=" + std::to_string(info));
    return r;
}

// The k smallest eigenpairs (ascending).
inline EigResult eigh_lowest(const CMat& A, Index k) {
    const lapack_int n = static_cast<lapack_int>(A.rows());
    if (A.rows() != A.cols()) throw std::invalid_argument("eigh_lowest: matrix is not square");
    k = std::min<Index>(k, n);
    EigResult r;
    r.values.resize(n);
    if (k == 0) {
        r.values.resize(0);
        return r;
    }
    CMat work = A;
    r.vectors.resize(n, k);
    lapack_int found = 0;
    std::vector<lapack_int> support(2 * std::size_t(k));
    const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0, 0.0, 1,
                                           static_cast<lapack_int>(k), 0.0, &found, r.values.data(),
                                           r.vectors.data(), n, support.data());
    if (info != 0 || found != k) throw NumericalError("zheevr failed, info=" + std::to_string(info));
    r.values.conservativeResize(k);
    return r;
}

inline RVec eigvalsh(const CMat& A) { return eigh(A, false).values; }

// Full SVD by the QR-iteration driver (see eigh for why not gesdd).
inline SvdResult svd(const CMat& A, bool want_vectors = true) {
    if (A.rows() != A.cols()) throw std::invalid_argument("svd: matrix is not square");
    const lapack_int n = static_cast<lapack_int>(A.rows());
    SvdResult r;
    r.s.resize(n);
    if (n == 0) return r;
    CMat work = A;
    std::vector<double> superb(std::size_t(n > 1 ? n - 1 : 1));
    lapack_int info;
    if (want_vectors) {
        r.U.resize(n, n);
        CMat vt(n, n);
        info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'A', 'A', n, n, work.data(), n, r.s.data(), r.U.data(), n,
                              vt.data(), n, superb.data());
        r.V = vt.adjoint();
    } else {
        info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'N', 'N', n, n, work.data(), n, r.s.data(), nullptr, 1,
                              nullptr, 1, superb.data());
    }
    if (info != 0) throw NumericalError("zgesvd failed, info=" + std::to_string(info));
    return r;
}

inline RVec singular_values(const CMat& A) { return svd(A, false).s; }

// The k smallest singular values (ascending) with right (V) and left (U)
// singular subspaces, from the Gram matrices. Values carry an absolute error
// of order sqrt(eps) * |A|; the subspaces are what callers consume.
struct LowSingular {
    RVec s;  // ascending
    CMat U;
    CMat V;
};

inline LowSingular low_singular(const CMat& A, Index k) {
    LowSingular r;
    const EigResult right = eigh_lowest(A.adjoint() * A, k);
    const EigResult left = eigh_lowest(A * A.adjoint(), k);
    r.s = right.values.cwiseMax(0.0).cwiseSqrt();
    r.V = right.vectors;
    r.U = left.vectors;
    return r;
}

// Largest singular value. Hermitian inputs go through the cheaper eigensolver.
inline double operator_norm(const CMat& A, bool hermitian = false) {
    if (A.size() == 0) return 0.0;
    if (A.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    if (hermitian) return eigvalsh(A).cwiseAbs().maxCoeff();
    return singular_values(A)(0);
}

inline double hermitian_defect(const CMat& A) {
    if (A.size() == 0) return 0.0;
    return (A - A.adjoint()).cwiseAbs().maxCoeff();
}

// f(A) for Hermitian A given its eigen-decomposition.
template <class F>
CMat apply_spectral(const EigResult& e, F&& f) {
    CVec fv(e.values.size());
    for (Index k = 0; k < e.values.size(); ++k) fv(k) = cplx(f(e.values(k)));
    return e.vectors * fv.asDiagonal() * e.vectors.adjoint();
}

}  // namespace mgidx
