#pragma once

// Dense real linear algebra at desk scale. Matrices are Eigen::MatrixXd; the
// symmetric eigensolver used for the small spectral work (square roots of
// Gram-type matrices) is a cyclic Jacobi iteration, while rank and kernel
// decisions on the large cochain operators go through a divide-and-conquer
// SVD.

#include "parhodge/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace parhodge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Tolerance {
    double rank_tol = 1e-10;
    double residual_tol = 1e-9;

    void validate() const
    {
        if (!(rank_tol > 0.0) || !(residual_tol > 0.0) || !std::isfinite(rank_tol) ||
            !std::isfinite(residual_tol)) {
            fail(ErrorKind::InvalidParameter, "tolerances must be finite and strictly positive");
        }
    }
};

inline double max_abs(const Matrix& a)
{
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& a)
{
    return a.size() == 0 || a.allFinite();
}

inline void require_finite(const Matrix& a, const char* what)
{
    if (!all_finite(a)) {
        fail(ErrorKind::InvalidParameter, std::string(what) + " contains NaN or Inf");
    }
}

inline void require_square(const Matrix& a, const char* what)
{
    if (a.rows() != a.cols()) {
        std::ostringstream os;
        os << what << " must be square, got " << a.rows() << "x" << a.cols();
        fail(ErrorKind::DimensionMismatch, os.str());
    }
}

inline Matrix symmetric_part(const Matrix& a)
{
    return 0.5 * (a + a.transpose());
}

inline Matrix skew_part(const Matrix& a)
{
    return 0.5 * (a - a.transpose());
}

struct SymEig {
    Vector values;  // descending
    Matrix vectors; // columns, orthonormal
    int sweeps = 0;
};

namespace detail {

// First component that is not negligible decides the sign of an eigenvector.
inline void normalize_sign(Eigen::Ref<Vector> v)
{
    const double scale = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-8 * scale) {
            if (v[i] < 0.0) {
                v = -v;
            }
            return;
        }
    }
}

} // namespace detail

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues come
/// back in descending order; each eigenvector has its first significant
/// component made positive, so the output is a deterministic function of the
/// input.
inline SymEig sym_eig(const Matrix& input, const Tolerance& tol = {})
{
    require_square(input, "sym_eig input");
    require_finite(input, "sym_eig input");
    const Eigen::Index n = input.rows();
    const double scale = max_abs(input);
    if (max_abs(input - input.transpose()) > tol.residual_tol * std::max(scale, 1e-300)) {
        fail(ErrorKind::NotSymmetric, "matrix is not symmetric within residual_tol");
    }

    Matrix a = symmetric_part(input);
    Matrix v = Matrix::Identity(n, n);
    constexpr int max_sweeps = 100;
    const double target = std::numeric_limits<double>::epsilon() * std::max(a.norm(), 1e-300);

    int sweep = 0;
    for (;; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                off += a(p, q) * a(p, q);
            }
        }
        if (std::sqrt(2.0 * off) <= target) {
            break;
        }
        if (sweep == max_sweeps) {
            fail(ErrorKind::NoConvergence, "Jacobi iteration exceeded 100 sweeps");
        }
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

    SymEig out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    out.sweeps = sweep;
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        out.vectors.col(k) = v.col(order[k]);
        detail::normalize_sign(out.vectors.col(k));
    }
    return out;
}

struct SpdFunctions {
    Matrix sqrt;
    Matrix inv_sqrt;
    Matrix inverse;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
};

inline SpdFunctions spd_functions(const Matrix& a, const Tolerance& tol = {})
{
    SymEig eig = sym_eig(a, tol);
    SpdFunctions out;
    const Eigen::Index n = a.rows();
    if (n == 0) {
        out.sqrt = out.inv_sqrt = out.inverse = Matrix(0, 0);
        return out;
    }
    out.max_eigenvalue = eig.values[0];
    out.min_eigenvalue = eig.values[n - 1];
    if (!(out.max_eigenvalue > 0.0) || out.min_eigenvalue <= tol.rank_tol * out.max_eigenvalue) {
        std::ostringstream os;
        os << "smallest eigenvalue " << out.min_eigenvalue << " (largest " << out.max_eigenvalue
           << ")";
        fail(ErrorKind::NotPositiveDefinite, os.str());
    }
    const Matrix& v = eig.vectors;
    const Vector s = eig.values.cwiseSqrt();
    out.sqrt = symmetric_part(v * s.asDiagonal() * v.transpose());
    out.inv_sqrt = symmetric_part(v * s.cwiseInverse().asDiagonal() * v.transpose());
    out.inverse = symmetric_part(v * eig.values.cwiseInverse().asDiagonal() * v.transpose());
    return out;
}

/// Relative cutoffs scale rank_tol by the largest singular value; absolute
/// ones suit matrices between orthonormal bases that may vanish entirely.
enum class RankCutoff { Relative, Absolute };

namespace detail {

inline Eigen::Index rank_from_singular_values(const Vector& sv, double rank_tol,
                                              RankCutoff mode = RankCutoff::Relative)
{
    if (sv.size() == 0 || !(sv[0] > 0.0)) {
        return 0;
    }
    const double cutoff = mode == RankCutoff::Relative ? rank_tol * sv[0] : rank_tol;
    Eigen::Index r = 0;
    while (r < sv.size() && sv[r] > cutoff) {
        ++r;
    }
    return r;
}

} // namespace detail

inline Eigen::Index numerical_rank(const Matrix& a, const Tolerance& tol = {},
                                   RankCutoff mode = RankCutoff::Relative)
{
    if (a.size() == 0) {
        return 0;
    }
    Eigen::BDCSVD<Matrix> svd(a);
    return detail::rank_from_singular_values(svd.singularValues(), tol.rank_tol, mode);
}

/// Orthonormal columns spanning ker A. The rank cutoff is relative to the
/// largest singular value.
inline Matrix nullspace_basis(const Matrix& a, const Tolerance& tol = {},
                              RankCutoff mode = RankCutoff::Relative)
{
    const Eigen::Index cols = a.cols();
    if (cols == 0) {
        return Matrix(0, 0);
    }
    if (a.rows() == 0) {
        return Matrix::Identity(cols, cols);
    }
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const Eigen::Index r = detail::rank_from_singular_values(svd.singularValues(), tol.rank_tol, mode);
    Matrix n = svd.matrixV().rightCols(cols - r);
    for (Eigen::Index k = 0; k < n.cols(); ++k) {
        detail::normalize_sign(n.col(k));
    }
    return n;
}

/// Orthonormal columns spanning im A.
inline Matrix range_basis(const Matrix& a, const Tolerance& tol = {},
                          RankCutoff mode = RankCutoff::Relative)
{
    if (a.size() == 0) {
        return Matrix(a.rows(), 0);
    }
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
    const Eigen::Index r = detail::rank_from_singular_values(svd.singularValues(), tol.rank_tol, mode);
    Matrix u = svd.matrixU().leftCols(r);
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        detail::normalize_sign(u.col(k));
    }
    return u;
}

inline Vector singular_values(const Matrix& a)
{
    if (a.size() == 0) {
        return Vector(0);
    }
    return Eigen::BDCSVD<Matrix>(a).singularValues();
}

/// Minimizes ||A x - b||_M column by column; the minimum-norm solution is
/// returned when A has a kernel.
inline Matrix lsq_solve(const Matrix& a, const Matrix& m, const Matrix& b, const Tolerance& tol = {})
{
    if (m.rows() != m.cols() || m.rows() != a.rows() || b.rows() != a.rows()) {
        std::ostringstream os;
        os << "lsq_solve: A " << a.rows() << "x" << a.cols() << ", M " << m.rows() << "x"
           << m.cols() << ", b " << b.rows() << "x" << b.cols();
        fail(ErrorKind::DimensionMismatch, os.str());
    }
    if (a.cols() == 0) {
        return Matrix::Zero(0, b.cols());
    }
    if (a.rows() == 0) {
        return Matrix::Zero(a.cols(), b.cols());
    }
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        fail(ErrorKind::NotPositiveDefinite, "lsq_solve weight matrix is not SPD");
    }
    const Matrix lt = llt.matrixU();
    Eigen::BDCSVD<Matrix> svd(lt * a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index r = detail::rank_from_singular_values(svd.singularValues(), tol.rank_tol);
    const Matrix u = svd.matrixU().leftCols(r);
    const Matrix v = svd.matrixV().leftCols(r);
    const Vector inv = svd.singularValues().head(r).cwiseInverse();
    return v * inv.asDiagonal() * (u.transpose() * (lt * b));
}

inline Vector lsq_solve(const Matrix& a, const Matrix& m, const Vector& b, const Tolerance& tol = {})
{
    return lsq_solve(a, m, Matrix(b), tol).col(0);
}

/// Columns of x made orthonormal in the inner product given by the SPD
/// matrix m (symmetric orthogonalization, so the span is kept).
inline Matrix orthonormalize(const Matrix& x, const Matrix& m, const Tolerance& tol = {})
{
    if (x.cols() == 0) {
        return x;
    }
    const Matrix gram = symmetric_part(x.transpose() * m * x);
    return x * spd_functions(gram, tol).inv_sqrt;
}

/// Largest principal angle (radians) between two subspaces given by bases
/// orthonormal in the m-inner product. Returns pi/2 if dimensions differ.
inline double max_principal_angle(const Matrix& x, const Matrix& y, const Matrix& m)
{
    if (x.cols() != y.cols()) {
        return std::acos(0.0);
    }
    if (x.cols() == 0) {
        return 0.0;
    }
    // sin of the largest angle is the norm of the part of x outside span y;
    // going through cosines would lose everything below ~1e-8.
    const Matrix r = x - y * (y.transpose() * m * x);
    const Vector sv = singular_values(symmetric_part(r.transpose() * m * r));
    return std::asin(std::clamp(std::sqrt(std::max(0.0, sv[0])), 0.0, 1.0));
}

} // namespace parhodge
