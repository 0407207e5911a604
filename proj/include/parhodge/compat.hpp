#pragma once

// Compatible complex structures on subspaces of a hermitian space.
//
// Given a real inner product space V with an isometric complex structure J
// and a subspace U on which omega(u, v) = (J u, v) is nondegenerate, the
// compressed operator G = p_U J|_U is skew, -G^2 is positive, and
// J_U = (-G^2)^{-1/2} G is a complex structure on U that is an isometry,
// preserves omega and tames it.
//
// Matrices of operators on U are written in a basis u_1..u_m with columns
// holding images. M_U[i][j] = (u_i, u_j) and Omega_U[i][j] = omega(u_i, u_j).

#include "parhodge/numlin.hpp"

#include <map>
#include <string>

namespace parhodge::compat {

struct AmbientSpace {
    Matrix q; // inner product
    Matrix j; // complex structure

    Eigen::Index dim() const { return q.rows(); }

    void validate(const Tolerance& tol = {}) const
    {
        require_square(q, "AmbientSpace.q");
        require_square(j, "AmbientSpace.j");
        if (q.rows() != j.rows()) {
            fail(ErrorKind::DimensionMismatch, "AmbientSpace: q and j sizes differ");
        }
        if (q.rows() % 2 != 0) {
            fail(ErrorKind::InvalidParameter, "AmbientSpace dimension must be even");
        }
        const Eigen::Index n = q.rows();
        const double qs = std::max(max_abs(q), 1e-300);
        if (max_abs(j * j + Matrix::Identity(n, n)) > tol.residual_tol * std::max(1.0, max_abs(j) * max_abs(j))) {
            fail(ErrorKind::InvalidParameter, "AmbientSpace: J^2 != -I");
        }
        if (max_abs(j.transpose() * q * j - q) > tol.residual_tol * qs * std::max(1.0, max_abs(j) * max_abs(j))) {
            fail(ErrorKind::InvalidParameter, "AmbientSpace: J is not an isometry of q");
        }
        spd_functions(q, tol);
    }
};

struct Subspace {
    Matrix basis; // columns in ambient coordinates

    Eigen::Index ambient_dim() const { return basis.rows(); }
    Eigen::Index dim() const { return basis.cols(); }
};

struct CompatibleStructureResult {
    Matrix m_u;
    Matrix omega_u;
    Matrix g;
    Matrix r;
    Matrix j_u;
    std::map<std::string, double> residuals;
};

struct ConditionDiagnostic {
    bool omega_nondegenerate = false; // omega nondegenerate on U
    bool totally_real = false;  // U and J(U) meet only in 0
    double min_omega_singular_value = 0.0;
};

inline std::pair<Matrix, Matrix> gram_and_omega(const AmbientSpace& v, const Subspace& u)
{
    if (u.ambient_dim() != v.dim()) {
        fail(ErrorKind::DimensionMismatch, "subspace basis does not live in the ambient space");
    }
    const Matrix& b = u.basis;
    Matrix m = symmetric_part(b.transpose() * v.q * b);
    // omega(u_i, u_j) = (J u_i, u_j) = u_j^T Q J u_i
    Matrix omega = skew_part(b.transpose() * v.j.transpose() * v.q * b);
    return {std::move(m), std::move(omega)};
}

namespace detail {

// Singular values of the M-normalized omega; they are the moduli of the
// eigenvalues of the compressed operator and are invariant under scaling
// of the inner product.
inline Vector normalized_omega_singular_values(const Matrix& m, const Matrix& omega,
                                               const Tolerance& tol)
{
    const SpdFunctions mf = spd_functions(m, tol);
    return singular_values(mf.inv_sqrt * omega * mf.inv_sqrt);
}

} // namespace detail

inline ConditionDiagnostic check_condition(const AmbientSpace& v, const Subspace& u,
                                           const Tolerance& tol = {})
{
    auto [m, omega] = gram_and_omega(v, u);
    ConditionDiagnostic out;
    if (u.dim() == 0) {
        out.omega_nondegenerate = true;
        out.totally_real = true;
        return out;
    }
    const Vector sv = detail::normalized_omega_singular_values(m, omega, tol);
    out.min_omega_singular_value = sv[sv.size() - 1];
    out.omega_nondegenerate = out.min_omega_singular_value > tol.rank_tol;

    Matrix both(v.dim(), 2 * u.dim());
    both << u.basis, v.j * u.basis;
    out.totally_real = numerical_rank(both, tol) == 2 * u.dim();
    return out;
}

/// Builds G = -M^{-1} Omega, R = (-G^2)^{1/2} (M-self-adjoint) and
/// J_U = R^{-1} G from the Gram matrix and the symplectic form of U.
inline CompatibleStructureResult compatible_complex_structure(const Matrix& m_u,
                                                              const Matrix& omega_u,
                                                              const Tolerance& tol = {})
{
    require_square(m_u, "M_U");
    require_square(omega_u, "Omega_U");
    require_finite(m_u, "M_U");
    require_finite(omega_u, "Omega_U");
    if (m_u.rows() != omega_u.rows()) {
        fail(ErrorKind::DimensionMismatch, "M_U and Omega_U sizes differ");
    }
    const Eigen::Index n = m_u.rows();
    CompatibleStructureResult out;
    out.m_u = m_u;
    out.omega_u = omega_u;
    if (n == 0) {
        out.g = out.r = out.j_u = Matrix(0, 0);
        for (const char* key : {"g_skew", "g_sq_negative_min", "g_r_commute", "j_sq",
                                "isometry", "omega_invariance", "taming_min_eigenvalue",
                                "taming_identity", "condition_sigma_min", "near_degenerate"}) {
            out.residuals[key] = 0.0;
        }
        return out;
    }

    const double mscale = max_abs(m_u);
    if (max_abs(omega_u + omega_u.transpose()) > tol.residual_tol * std::max(max_abs(omega_u), mscale)) {
        fail(ErrorKind::InvalidParameter, "Omega_U is not skew");
    }
    const SpdFunctions mf = spd_functions(m_u, tol);

    // S is the Euclidean-skew conjugate of G; -S^2 = S^T S.
    const Matrix s = skew_part(-mf.inv_sqrt * omega_u * mf.inv_sqrt);
    const Vector sv = singular_values(s);
    const double sigma_min = sv[sv.size() - 1];
    if (!(sigma_min > tol.rank_tol)) {
        std::ostringstream os;
        os << "omega is degenerate on U (smallest normalized singular value " << sigma_min << ")";
        fail(ErrorKind::ConditionFailed, os.str());
    }

    const Matrix g = mf.inverse * (-omega_u);
    // (-S^2)^{1/2} and the polar factor of S from one SVD; going through the
    // eigenvalues of S^T S would square the condition number.
    const Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix abs_s = symmetric_part(svd.matrixV() * svd.singularValues().asDiagonal() * svd.matrixV().transpose());
    const Matrix polar = skew_part(svd.matrixU() * svd.matrixV().transpose());
    const Matrix r = mf.inv_sqrt * abs_s * mf.sqrt;
    const Matrix j = mf.inv_sqrt * polar * mf.sqrt;

    out.g = g;
    out.r = r;
    out.j_u = j;

    const Matrix id = Matrix::Identity(n, n);
    const double oscale = std::max(max_abs(omega_u), 1e-300);
    const double gscale = std::max(max_abs(g), 1e-300);
    const Matrix taming = symmetric_part(omega_u * j);
    const SymEig taming_eig = sym_eig(taming, tol);
    const SymEig neg_g2 = sym_eig(symmetric_part(-m_u * g * g), tol);

    out.residuals["g_skew"] = max_abs(m_u * g + g.transpose() * m_u) / mscale;
    out.residuals["g_sq_negative_min"] = neg_g2.values[n - 1] / mscale;
    out.residuals["g_r_commute"] = max_abs(g * r - r * g) / (gscale * std::max(max_abs(r), 1e-300));
    out.residuals["j_sq"] = max_abs(j * j + id);
    out.residuals["isometry"] = max_abs(j.transpose() * m_u * j - m_u) / mscale;
    out.residuals["omega_invariance"] = max_abs(j.transpose() * omega_u * j - omega_u) / oscale;
    out.residuals["taming_min_eigenvalue"] = taming_eig.values[n - 1];
    out.residuals["taming_identity"] = max_abs(taming - m_u * r) / oscale;
    out.residuals["condition_sigma_min"] = sigma_min;
    out.residuals["near_degenerate"] = sigma_min < 100.0 * tol.rank_tol ? 1.0 : 0.0;
    return out;
}

/// Matrix of p_U J restricted to U, computed through the Q-orthogonal
/// projection in ambient coordinates.
inline Matrix ambient_G(const AmbientSpace& v, const Subspace& u, const Tolerance& tol = {})
{
    const ConditionDiagnostic diag = check_condition(v, u, tol);
    if (!diag.omega_nondegenerate) {
        fail(ErrorKind::ConditionFailed, "J(U) meets the orthogonal complement of U");
    }
    const Matrix& b = u.basis;
    const Matrix m = symmetric_part(b.transpose() * v.q * b);
    // coordinates of p_U(J u_j): solve M c = B^T Q (J u_j)
    return m.llt().solve(b.transpose() * v.q * v.j * b);
}

struct SubspaceTransfer {
    Matrix p_n;     // span D -> span N, in basis coordinates
    Matrix p_d;     // span N -> span D
    Matrix u_basis; // ambient columns spanning im p_n
    Matrix t_basis; // ambient columns spanning im p_d
    bool kernel_check = false;
    bool rank_equal = false;
    Eigen::Index rank_p_n = 0;
    Eigen::Index rank_p_d = 0;
    double kernel_residual = 0.0;
};

namespace detail {

// Two column sets span the same subspace of a Q-space.
inline double span_distance(const Matrix& x, const Matrix& y, const Matrix& q, const Tolerance& tol)
{
    if (x.cols() != y.cols()) {
        return 1.0;
    }
    if (x.cols() == 0) {
        return 0.0;
    }
    return max_principal_angle(orthonormalize(x, q, tol), orthonormalize(y, q, tol), q);
}

} // namespace detail

/// Restricted orthogonal projections between span N and span D. ker(P_N) is
/// the orthogonal complement of im(P_D) inside span D; both images have the
/// same dimension.
inline SubspaceTransfer subspace_transfer(const Matrix& q, const Matrix& n, const Matrix& d,
                                          const Tolerance& tol = {})
{
    require_square(q, "Q");
    if (n.rows() != q.rows() || d.rows() != q.rows()) {
        fail(ErrorKind::DimensionMismatch, "N and D must live in the Q-space");
    }
    if (numerical_rank(n, tol) != n.cols() || numerical_rank(d, tol) != d.cols()) {
        fail(ErrorKind::DegenerateInput, "N or D has dependent columns");
    }
    const Matrix gn = symmetric_part(n.transpose() * q * n);
    const Matrix gd = symmetric_part(d.transpose() * q * d);
    const Matrix cross = n.transpose() * q * d; // (n_i, d_j)

    SubspaceTransfer out;
    out.p_n = n.cols() == 0 ? Matrix(0, d.cols()) : Matrix(gn.llt().solve(cross));
    out.p_d = d.cols() == 0 ? Matrix(0, n.cols()) : Matrix(gd.llt().solve(cross.transpose()));

    // Ranks are read off the principal cosines between the two spans, which
    // lie in [0, 1] whatever the bases, so the cutoff is absolute.
    const Matrix ln_inv = n.cols() == 0 ? Matrix(0, 0) : Matrix(gn.llt().matrixL().solve(Matrix::Identity(n.cols(), n.cols())));
    const Matrix ld_inv = d.cols() == 0 ? Matrix(0, 0) : Matrix(gd.llt().matrixL().solve(Matrix::Identity(d.cols(), d.cols())));
    const Matrix cosines = ln_inv * cross * ld_inv.transpose();
    Matrix un(n.cols(), 0), td(d.cols(), 0);
    Matrix ker = ld_inv.transpose();
    if (cosines.size() > 0) {
        const Eigen::Index r = numerical_rank(cosines, tol, RankCutoff::Absolute);
        Eigen::JacobiSVD<Matrix> svd(cosines, Eigen::ComputeFullU | Eigen::ComputeFullV);
        un = ln_inv.transpose() * svd.matrixU().leftCols(r);
        td = ld_inv.transpose() * svd.matrixV().leftCols(r);
        ker = ld_inv.transpose() * nullspace_basis(cosines, tol, RankCutoff::Absolute);
    }
    out.u_basis = n * un;
    out.t_basis = d * td;
    out.rank_p_n = un.cols();
    out.rank_p_d = td.cols();
    out.rank_equal = out.rank_p_n == out.rank_p_d;

    // ker P_N versus the gd-orthogonal complement of T inside span D, both in
    // D coordinates.
    const Matrix t_perp = td.cols() == 0 ? Matrix(Matrix::Identity(d.cols(), d.cols()))
                                         : nullspace_basis(td.transpose() * gd, tol);
    out.kernel_residual = detail::span_distance(ker, t_perp, gd, tol);
    out.kernel_check = ker.cols() == t_perp.cols() && out.kernel_residual < tol.residual_tol;
    return out;
}

} // namespace parhodge::compat
