#pragma once

// Metric side of the twisted complex: Whitney mass matrices with
// coefficients, codifferentials, harmonic fields and the discrete
// decomposition of 1-cochains.
//
// Neumann conditions are natural (no constraint on absolute cochains);
// Dirichlet conditions are imposed by interior support.

#include "parhodge/twisted.hpp"

#include <map>
#include <string>

namespace parhodge::hodge {

using localsys::FlatLocalSystem;
using surface::PLMetric;
using surface::SurfaceComplex;
using twisted::Coboundaries;

class MetricComplex {
public:
    static MetricComplex build(const SurfaceComplex& k, const PLMetric& h, const FlatLocalSystem& f,
                               const Tolerance& tol = {})
    {
        surface::validate_metric(k, h, tol);
        if (static_cast<int>(f.transports.size()) != k.edge_count()) {
            fail(ErrorKind::DimensionMismatch, "local system does not match the complex");
        }
        MetricComplex mc;
        mc.k_ = k;
        mc.h_ = h;
        mc.f_ = f;
        mc.tol_ = tol;
        mc.c_ = twisted::coboundaries(k, f);
        const int n = f.fiber_dim;
        mc.m0_ = Matrix::Zero(n * k.vertex_count(), n * k.vertex_count());
        mc.m1_ = Matrix::Zero(n * k.edge_count(), n * k.edge_count());
        mc.m2_ = Matrix::Zero(n * k.triangle_count(), n * k.triangle_count());
        for (int t = 0; t < k.triangle_count(); ++t) {
            const auto lw = surface::local_whitney(surface::triangle_lengths(k, h, t));
            const auto& tri = k.triangles()[t];
            const auto& te = k.triangle_edges(t);
            std::array<Matrix, 3> vertex_frame, edge_frame;
            for (int a = 0; a < 3; ++a) {
                vertex_frame[a] = a == 0 ? Matrix(Matrix::Identity(n, n)) : f.transport(k, tri[0], tri[a]);
                edge_frame[a] = twisted::edge_frame(k, f, t, a);
            }
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    mc.m0_.block(tri[a] * n, tri[b] * n, n, n) +=
                        lw.m0(a, b) * vertex_frame[a].transpose() * vertex_frame[b];
                    mc.m1_.block(te[a].index * n, te[b].index * n, n, n) +=
                        lw.m1(a, b) * edge_frame[a].transpose() * edge_frame[b];
                }
            }
            mc.m2_.block(t * n, t * n, n, n) = Matrix::Identity(n, n) / lw.area;
        }
        mc.m0_ = symmetric_part(mc.m0_);
        mc.m1_ = symmetric_part(mc.m1_);
        mc.w1_ = twisted::wedge_matrix(k, f);
        return mc;
    }

    const SurfaceComplex& complex() const { return k_; }
    const PLMetric& metric() const { return h_; }
    const FlatLocalSystem& system() const { return f_; }
    const Coboundaries& cob() const { return c_; }
    const Tolerance& tolerance() const { return tol_; }
    int fiber_dim() const { return f_.fiber_dim; }

    const Matrix& m0() const { return m0_; }
    const Matrix& m1() const { return m1_; }
    const Matrix& m2() const { return m2_; }
    const Matrix& w1() const { return w1_; }

    /// M1 restricted to interior-edge coordinates.
    Matrix m1_rel() const { return m1_(c_.interior_edge_dofs, c_.interior_edge_dofs); }
    Matrix m0_rel() const { return m0_(c_.interior_vertex_dofs, c_.interior_vertex_dofs); }

private:
    SurfaceComplex k_;
    PLMetric h_;
    FlatLocalSystem f_;
    Tolerance tol_;
    Coboundaries c_;
    Matrix m0_, m1_, m2_, w1_;
};

struct Codifferentials {
    Matrix delta1; // C^1 -> C^0
    Matrix delta2; // C^2 -> C^1
    Matrix delta1_rel;
    Matrix delta2_rel;
};

inline Codifferentials codifferentials(const MetricComplex& mc)
{
    const auto& c = mc.cob();
    Codifferentials out;
    out.delta1 = mc.m0().llt().solve(c.d0.transpose() * mc.m1());
    out.delta2 = mc.m1().llt().solve(c.d1.transpose() * mc.m2());
    const Matrix m1r = mc.m1_rel();
    if (!c.interior_vertex_dofs.empty()) {
        out.delta1_rel = mc.m0_rel().llt().solve(c.d0_rel.transpose() * m1r);
    } else {
        out.delta1_rel = Matrix(0, m1r.rows());
    }
    out.delta2_rel = m1r.rows() == 0 ? Matrix(0, c.d1.rows()) : Matrix(m1r.llt().solve(c.d1_rel.transpose() * mc.m2()));
    return out;
}

/// u - d0 argmin |u - d0 a|_{M1}: the M1-harmonic representative of the
/// class of a closed u.
inline Matrix harmonic_projection(const MetricComplex& mc, const Matrix& u)
{
    if (u.cols() == 0) {
        return u;
    }
    const auto& c = mc.cob();
    return u - c.d0 * lsq_solve(c.d0, mc.m1(), u, mc.tolerance());
}

/// Relative analog on interior-supported cochains, in absolute coordinates.
inline Matrix harmonic_projection_rel(const MetricComplex& mc, const Matrix& u)
{
    const auto& c = mc.cob();
    if (u.cols() == 0 || c.interior_vertex_dofs.empty()) {
        return u;
    }
    const Matrix ui = twisted::restrict_rows(u, c.interior_edge_dofs);
    const Matrix a = lsq_solve(c.d0_rel, mc.m1_rel(), ui, mc.tolerance());
    return twisted::embed_rows(ui - c.d0_rel * a, c.interior_edge_dofs, c.d0.rows());
}

struct HarmonicSpaces {
    Matrix h_n; // M1-orthonormal
    Matrix h_d; // M1-orthonormal, interior supported
    int dim_n = 0;
    int dim_d = 0;
};

inline HarmonicSpaces harmonic_spaces(const MetricComplex& mc)
{
    const auto& c = mc.cob();
    const Tolerance& tol = mc.tolerance();
    HarmonicSpaces out;
    out.h_n = orthonormalize(harmonic_projection(mc, twisted::cohomology(c, 1, twisted::Flavor::Absolute, tol).reps),
                             mc.m1(), tol);
    out.h_d = orthonormalize(
        harmonic_projection_rel(mc, twisted::cohomology(c, 1, twisted::Flavor::Relative, tol).reps), mc.m1(), tol);
    out.dim_n = static_cast<int>(out.h_n.cols());
    out.dim_d = static_cast<int>(out.h_d.cols());
    return out;
}

namespace detail {

inline int intersection_dim(const Matrix& a, const Matrix& b, const Tolerance& tol)
{
    if (a.cols() == 0 || b.cols() == 0) {
        return 0;
    }
    Matrix both(a.rows(), a.cols() + b.cols());
    both << a, b;
    return static_cast<int>(numerical_rank(a, tol) + numerical_rank(b, tol) - numerical_rank(both, tol));
}

// Largest M-norm of the columns of x after removing their part in span y
// (y M-orthonormal).
inline double outside_span(const Matrix& x, const Matrix& y, const Matrix& m)
{
    if (x.cols() == 0) {
        return 0.0;
    }
    const Matrix r = y.cols() == 0 ? x : Matrix(x - y * (y.transpose() * m * x));
    return std::sqrt(std::max(0.0, singular_values(symmetric_part(r.transpose() * m * r))[0]));
}

inline double cross_gram(const Matrix& x, const Matrix& y, const Matrix& m)
{
    return x.cols() == 0 || y.cols() == 0 ? 0.0 : max_abs(x.transpose() * m * y);
}

} // namespace detail

struct RefinementReport {
    int dim_ccc = 0;
    int dim_h_n = 0;
    int dim_h_d = 0;
    int dim_exact_in_ccc = 0;     // dim(im d0 ∩ CcC)
    int dim_closed_coexact = 0;   // dim(ker d1 ∩ (relative cocycles)^perp)
    int dim_closed_im_delta2 = 0; // literal discrete reading; always 0
    bool h_n_in_ccc = false;
    bool h_d_in_ccc = false;
    bool identity_neumann = false;  // dim CcC = dim H_N + dim(E ∩ CcC)
    bool identity_dirichlet = false; // dim CcC = dim(C ∩ cE) + dim H_D
    double h_n_residual = 0.0;
    double h_d_residual = 0.0;
};

struct HodgeDecomposition {
    Matrix ce_n; // im delta2
    Matrix e_d;  // d0 of interior-supported 0-cochains
    Matrix ccc;  // M1 complement of both
    std::map<std::string, double> orthogonality; // pairwise M1 cross Gram maxima
    int dim_total = 0;
    RefinementReport refinement;
};

inline HodgeDecomposition hodge_decomposition(const MetricComplex& mc)
{
    const auto& c = mc.cob();
    const Tolerance& tol = mc.tolerance();
    const Matrix& m1 = mc.m1();
    const Eigen::Index ne = m1.rows();
    HodgeDecomposition out;

    out.ce_n = orthonormalize(range_basis(mc.m1().llt().solve(c.d1.transpose()), tol), m1, tol);
    const Matrix d0_int = c.d0(Eigen::all, c.interior_vertex_dofs);
    out.e_d = d0_int.cols() == 0 ? Matrix(ne, 0) : orthonormalize(range_basis(d0_int, tol), m1, tol);
    Matrix constraints(c.d1.rows() + d0_int.cols(), ne);
    constraints << c.d1, d0_int.transpose() * m1;
    out.ccc = orthonormalize(nullspace_basis(constraints, tol), m1, tol);
    out.dim_total = static_cast<int>(out.ce_n.cols() + out.e_d.cols() + out.ccc.cols());
    out.orthogonality["ce_n_e_d"] = detail::cross_gram(out.ce_n, out.e_d, m1);
    out.orthogonality["ce_n_ccc"] = detail::cross_gram(out.ce_n, out.ccc, m1);
    out.orthogonality["e_d_ccc"] = detail::cross_gram(out.e_d, out.ccc, m1);

    const HarmonicSpaces hs = harmonic_spaces(mc);
    RefinementReport& r = out.refinement;
    r.dim_ccc = static_cast<int>(out.ccc.cols());
    r.dim_h_n = hs.dim_n;
    r.dim_h_d = hs.dim_d;
    r.h_n_residual = detail::outside_span(hs.h_n, out.ccc, m1);
    r.h_d_residual = detail::outside_span(hs.h_d, out.ccc, m1);
    r.h_n_in_ccc = r.h_n_residual < tol.residual_tol;
    r.h_d_in_ccc = r.h_d_residual < tol.residual_tol;

    // d0 a lies in CcC iff it is M1-orthogonal to E_D
    const Eigen::Index preimage =
        d0_int.cols() == 0 ? c.d0.cols() : nullspace_basis(d0_int.transpose() * m1 * c.d0, tol).cols();
    r.dim_exact_in_ccc = static_cast<int>(preimage - nullspace_basis(c.d0, tol).cols());
    const Matrix closed = nullspace_basis(c.d1, tol);
    const Matrix rel_closed =
        c.interior_edge_dofs.empty()
            ? Matrix(ne, 0)
            : twisted::embed_rows(nullspace_basis(c.d1_rel, tol), c.interior_edge_dofs, ne);
    // closed cochains M1-orthogonal to every relative cocycle
    const Matrix closed_coexact =
        rel_closed.cols() == 0 ? closed : Matrix(closed * nullspace_basis(rel_closed.transpose() * m1 * closed, tol));
    r.dim_closed_coexact = static_cast<int>(closed_coexact.cols());
    r.dim_closed_im_delta2 = detail::intersection_dim(closed, out.ce_n, tol);
    r.identity_neumann = r.dim_ccc == r.dim_h_n + r.dim_exact_in_ccc;
    r.identity_dirichlet = r.dim_ccc == r.dim_closed_coexact + r.dim_h_d;
    return out;
}

// ---------------------------------------------------------------------------
// Galerkin star

/// J_h with (J_h u, v)_{M1} = omega(u, v): J_h = M1^{-1} W1^T.
inline Matrix galerkin_star(const MetricComplex& mc)
{
    return mc.m1().llt().solve(mc.w1().transpose());
}

struct GalerkinDiagnostics {
    double skew_residual = 0.0;      // |J^T M1 + M1 J|
    double j_sq_harmonic = 0.0;      // M1-norm of (J^2 + I) on H_N
    double j_sq_ccc = 0.0;           // same on CcC
    double angle_jh_n_h_d = 0.0;     // principal angle between J(H_N) and H_D
    double projection_commutator = 0.0; // |(P_N J - J P_D) x| over unit x in CcC
};

inline GalerkinDiagnostics galerkin_diagnostics(const MetricComplex& mc)
{
    const Matrix& m1 = mc.m1();
    const Tolerance& tol = mc.tolerance();
    const Matrix j = galerkin_star(mc);
    const HarmonicSpaces hs = harmonic_spaces(mc);
    const HodgeDecomposition hd = hodge_decomposition(mc);
    GalerkinDiagnostics out;
    out.skew_residual = max_abs(j.transpose() * m1 + m1 * j) / std::max(max_abs(m1), 1e-300);
    auto sq_defect = [&](const Matrix& y) {
        if (y.cols() == 0) {
            return 0.0;
        }
        const Matrix r = j * (j * y) + y;
        return std::sqrt(std::max(0.0, singular_values(symmetric_part(r.transpose() * m1 * r))[0]));
    };
    out.j_sq_harmonic = sq_defect(hs.h_n);
    out.j_sq_ccc = sq_defect(hd.ccc);
    if (hs.dim_n == hs.dim_d && hs.dim_n > 0) {
        out.angle_jh_n_h_d = max_principal_angle(orthonormalize(j * hs.h_n, m1, tol), hs.h_d, m1);
    } else if (hs.dim_n != hs.dim_d) {
        out.angle_jh_n_h_d = std::acos(0.0);
    }
    if (hd.ccc.cols() > 0) {
        auto project = [&](const Matrix& basis, const Matrix& x) {
            return basis.cols() == 0 ? Matrix(Matrix::Zero(x.rows(), x.cols()))
                                     : Matrix(basis * (basis.transpose() * m1 * x));
        };
        const Matrix r = project(hs.h_n, j * hd.ccc) - j * project(hs.h_d, hd.ccc);
        out.projection_commutator =
            std::sqrt(std::max(0.0, singular_values(symmetric_part(r.transpose() * m1 * r))[0]));
    }
    return out;
}

} // namespace parhodge::hodge
