#pragma once

// Simplicial cochains with coefficients in a flat orthogonal local system.
//
// A p-cochain stores one fiber vector per p-simplex, in the fiber at the
// simplex's lowest vertex; degree-p coordinates are laid out simplex-major
// (index = simplex * n + component). Relative cochains are the absolute ones
// supported away from the boundary.

#include "parhodge/localsys.hpp"

#include <sstream>
#include <vector>

namespace parhodge::twisted {

using localsys::FlatLocalSystem;
using surface::SurfaceComplex;

enum class Flavor { Absolute, Relative, Boundary };

inline const char* to_string(Flavor f)
{
    switch (f) {
    case Flavor::Absolute: return "absolute";
    case Flavor::Relative: return "relative";
    case Flavor::Boundary: return "boundary";
    }
    return "unknown";
}

/// Coordinates of the fibers over a list of simplices.
inline std::vector<int> expand_dofs(const std::vector<int>& simplices, int n)
{
    std::vector<int> out;
    out.reserve(simplices.size() * static_cast<std::size_t>(n));
    for (int s : simplices) {
        for (int c = 0; c < n; ++c) {
            out.push_back(s * n + c);
        }
    }
    return out;
}

/// Columns of x (rows indexed by `dofs`) written into a zero matrix with
/// `rows` rows.
inline Matrix embed_rows(const Matrix& x, const std::vector<int>& dofs, Eigen::Index rows)
{
    Matrix out = Matrix::Zero(rows, x.cols());
    for (std::size_t i = 0; i < dofs.size(); ++i) {
        out.row(dofs[i]) = x.row(static_cast<Eigen::Index>(i));
    }
    return out;
}

inline Matrix restrict_rows(const Matrix& x, const std::vector<int>& dofs)
{
    Matrix out(static_cast<Eigen::Index>(dofs.size()), x.cols());
    for (std::size_t i = 0; i < dofs.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = x.row(dofs[i]);
    }
    return out;
}

/// Map taking the canonical value of local edge k of triangle t to the
/// fiber at v0, with the local orientation: s_e P_{v0, low(e)}.
inline Matrix edge_frame(const SurfaceComplex& k, const FlatLocalSystem& f, int t, int local)
{
    const auto& tri = k.triangles()[t];
    const auto ref = k.triangle_edges(t)[local];
    const int low = k.edges()[ref.index][0];
    const Matrix p = low == tri[0] ? Matrix(Matrix::Identity(f.fiber_dim, f.fiber_dim))
                                   : f.transport(k, tri[0], low);
    return ref.sign * p;
}

struct Coboundaries {
    int fiber_dim = 0;
    Matrix d0; // C^1 x C^0
    Matrix d1; // C^2 x C^1
    Matrix d0_rel;
    Matrix d1_rel;
    Matrix d0_bd; // coboundary of the boundary graph
    std::vector<int> interior_vertex_dofs;
    std::vector<int> interior_edge_dofs;
    std::vector<int> boundary_vertex_dofs;
    std::vector<int> boundary_edge_dofs;
    double d1d0_residual = 0.0;
};

inline Coboundaries coboundaries(const SurfaceComplex& k, const FlatLocalSystem& f)
{
    const int n = f.fiber_dim;
    Coboundaries c;
    c.fiber_dim = n;
    c.d0 = Matrix::Zero(n * k.edge_count(), n * k.vertex_count());
    for (int e = 0; e < k.edge_count(); ++e) {
        const auto [l, h] = k.edges()[e];
        c.d0.block(e * n, h * n, n, n) = f.transports[e];
        c.d0.block(e * n, l * n, n, n) = -Matrix::Identity(n, n);
    }
    c.d1 = Matrix::Zero(n * k.triangle_count(), n * k.edge_count());
    constexpr double coefficient[3] = {1.0, 1.0, -1.0};
    for (int t = 0; t < k.triangle_count(); ++t) {
        for (int a = 0; a < 3; ++a) {
            const int e = k.triangle_edges(t)[a].index;
            c.d1.block(t * n, e * n, n, n) += coefficient[a] * edge_frame(k, f, t, a);
        }
    }
    c.interior_vertex_dofs = expand_dofs(k.interior_vertices(), n);
    c.interior_edge_dofs = expand_dofs(k.interior_edges(), n);
    c.boundary_vertex_dofs = expand_dofs(k.boundary_vertices(), n);
    c.boundary_edge_dofs = expand_dofs(k.boundary_edges(), n);
    c.d0_rel = c.d0(c.interior_edge_dofs, c.interior_vertex_dofs);
    c.d1_rel = c.d1(Eigen::all, c.interior_edge_dofs);
    c.d0_bd = c.d0(c.boundary_edge_dofs, c.boundary_vertex_dofs);
    c.d1d0_residual = max_abs(c.d1 * c.d0);
    return c;
}

struct CohomologyBasis {
    int degree = 0;
    Flavor flavor = Flavor::Absolute;
    Matrix reps; // columns in absolute coordinates (boundary coordinates for Boundary)
    int dim = 0;
};

namespace detail {

// Complement of the coboundaries inside the cocycles, Euclidean-orthonormal.
inline Matrix cocycles_mod_coboundaries(const Matrix& d_out, Eigen::Index dim, const Matrix& d_in,
                                        const Tolerance& tol)
{
    const Matrix z = d_out.rows() == 0 ? Matrix(Matrix::Identity(dim, dim)) : nullspace_basis(d_out, tol);
    if (d_in.cols() == 0 || z.cols() == 0) {
        return z;
    }
    const Matrix b = range_basis(d_in, tol);
    if (b.cols() == 0) {
        return z;
    }
    return z * nullspace_basis(b.transpose() * z, tol, RankCutoff::Absolute);
}

} // namespace detail

inline CohomologyBasis cohomology(const Coboundaries& c, int degree, Flavor flavor, const Tolerance& tol = {})
{
    if (degree < 0 || degree > 2 || (flavor == Flavor::Boundary && degree > 1)) {
        fail(ErrorKind::InvalidParameter, "cohomology degree out of range");
    }
    CohomologyBasis out;
    out.degree = degree;
    out.flavor = flavor;
    // relative and boundary complexes are column/row selections of the
    // absolute one; no triangle lies in the boundary
    const Matrix* d0 = &c.d0;
    const Matrix* d1 = &c.d1;
    if (flavor == Flavor::Relative) {
        d0 = &c.d0_rel;
        d1 = &c.d1_rel;
    } else if (flavor == Flavor::Boundary) {
        d0 = &c.d0_bd;
    }
    const Matrix no_triangles(0, d0->rows());
    if (flavor == Flavor::Boundary) {
        d1 = &no_triangles;
    }
    const Eigen::Index dims[3] = {d0->cols(), d0->rows(), d1->rows()};
    const Matrix d_out = degree == 0 ? *d0 : degree == 1 ? *d1 : Matrix(0, dims[2]);
    const Matrix d_in = degree == 0 ? Matrix(dims[0], 0) : degree == 1 ? *d0 : *d1;
    out.reps = detail::cocycles_mod_coboundaries(d_out, dims[degree], d_in, tol);
    if (flavor == Flavor::Relative && degree == 0) {
        out.reps = embed_rows(out.reps, c.interior_vertex_dofs, c.d0.cols());
    } else if (flavor == Flavor::Relative && degree == 1) {
        out.reps = embed_rows(out.reps, c.interior_edge_dofs, c.d0.rows());
    }
    out.dim = static_cast<int>(out.reps.cols());
    return out;
}

/// dim H^0 - dim H^1 + dim H^2 of the absolute complex.
inline int euler_characteristic(const Coboundaries& c, const Tolerance& tol = {})
{
    return cohomology(c, 0, Flavor::Absolute, tol).dim - cohomology(c, 1, Flavor::Absolute, tol).dim +
           cohomology(c, 2, Flavor::Absolute, tol).dim;
}

struct ParabolicCohomology {
    CohomologyBasis h1;
    CohomologyBasis h1_rel;
    CohomologyBasis h1_bd;
    Matrix r_star;         // H^1 -> H^1(boundary), class coordinates
    Matrix i_star;         // H^1_rel -> H^1, class coordinates
    Matrix class_coords;   // ker r*, columns in h1 coordinates
    Matrix parabolic;      // h1.reps * class_coords
    int dim = 0;
    bool exactness_check = false;
    double exactness_residual = 0.0;
};

/// Kernel of the restriction to the boundary, cross-checked against the
/// image of the relative classes.
inline ParabolicCohomology restriction_and_parabolic(const Coboundaries& c, const Tolerance& tol = {})
{
    ParabolicCohomology out;
    out.h1 = cohomology(c, 1, Flavor::Absolute, tol);
    out.h1_rel = cohomology(c, 1, Flavor::Relative, tol);
    out.h1_bd = cohomology(c, 1, Flavor::Boundary, tol);
    // class coordinates are Euclidean projections because the representatives
    // are orthonormal and orthogonal to the coboundaries
    out.r_star = out.h1_bd.reps.transpose() * restrict_rows(out.h1.reps, c.boundary_edge_dofs);
    out.i_star = out.h1.reps.transpose() * out.h1_rel.reps;
    out.class_coords = out.h1_bd.dim == 0 ? Matrix(Matrix::Identity(out.h1.dim, out.h1.dim))
                                          : nullspace_basis(out.r_star, tol, RankCutoff::Absolute);
    out.parabolic = out.h1.reps * out.class_coords;
    out.dim = static_cast<int>(out.class_coords.cols());
    const Eigen::Index rank_i = numerical_rank(out.i_star, tol, RankCutoff::Absolute);
    out.exactness_residual = out.r_star.size() == 0 || out.i_star.size() == 0 ? 0.0 : max_abs(out.r_star * out.i_star);
    out.exactness_check = rank_i == out.dim && out.exactness_residual < tol.residual_tol;
    return out;
}

// ---------------------------------------------------------------------------
// Pairings on degree one

/// Alexander-Whitney cup evaluated on the fundamental cycle:
/// x^T C y = sum_t sign(t) B(x(ab), P_ab y(bc)) with a < b < c the sorted
/// vertices of t and sign(t) = +1 when that order matches the orientation.
inline Matrix cup_matrix(const SurfaceComplex& k, const FlatLocalSystem& f)
{
    const int n = f.fiber_dim;
    Matrix cup = Matrix::Zero(n * k.edge_count(), n * k.edge_count());
    for (const auto& tri : k.triangles()) {
        const double sign = tri[1] < tri[2] ? 1.0 : -1.0;
        const int a = tri[0];
        const int b = std::min(tri[1], tri[2]);
        const int c = std::max(tri[1], tri[2]);
        const int ab = k.edge_index(a, b);
        const int bc = k.edge_index(b, c);
        cup.block(ab * n, bc * n, n, n) += sign * f.transports[ab];
    }
    return cup;
}

/// Twisted analog of the Whitney wedge matrix: x^T W y = sum_t int B(x ^ y)
/// over Whitney interpolants. The scalar integrals carry no metric.
inline Matrix wedge_matrix(const SurfaceComplex& k, const FlatLocalSystem& f)
{
    const int n = f.fiber_dim;
    const Eigen::Matrix3d w1 = surface::local_whitney({1.0, 1.0, 1.0}).w1;
    Matrix w = Matrix::Zero(n * k.edge_count(), n * k.edge_count());
    for (int t = 0; t < k.triangle_count(); ++t) {
        const auto& te = k.triangle_edges(t);
        std::array<Matrix, 3> frames;
        for (int a = 0; a < 3; ++a) {
            frames[a] = edge_frame(k, f, t, a);
        }
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                if (w1(a, b) != 0.0) {
                    w.block(te[a].index * n, te[b].index * n, n, n) +=
                        std::round(6.0 * w1(a, b)) / 6.0 * frames[a].transpose() * frames[b];
                }
            }
        }
    }
    return w;
}

inline double closedness_residual(const Coboundaries& c, const Matrix& u)
{
    return u.cols() == 0 ? 0.0 : max_abs(c.d1 * u);
}

/// Antisymmetrized cup product on closed 1-cochains.
inline Matrix cup_omega(const SurfaceComplex& k, const FlatLocalSystem& f, const Coboundaries& c,
                        const Matrix& u, const Tolerance& tol = {})
{
    const double scale = std::max(1.0, u.size() == 0 ? 0.0 : max_abs(u));
    if (closedness_residual(c, u) > tol.residual_tol * scale) {
        std::ostringstream os;
        os << "cochain is not closed; |d1 u| = " << closedness_residual(c, u);
        fail(ErrorKind::NotClosed, os.str());
    }
    return skew_part(u.transpose() * cup_matrix(k, f) * u);
}

struct RelativeLift {
    Matrix lifted;   // relative cocycles, same classes in H^1
    double residual; // max boundary mismatch before the lift
};

/// u - d0 a with a supported on the boundary, solving d0_bd a = u|_bd in
/// the least-squares sense. Exact when every column restricts to zero in
/// H^1(boundary).
inline RelativeLift relative_lift(const Coboundaries& c, const Matrix& u, const Tolerance& tol = {})
{
    RelativeLift out{u, 0.0};
    if (u.cols() == 0 || c.boundary_edge_dofs.empty()) {
        return out;
    }
    const Matrix ub = restrict_rows(u, c.boundary_edge_dofs);
    const Matrix a = lsq_solve(c.d0_bd, Matrix::Identity(c.d0_bd.rows(), c.d0_bd.rows()), ub, tol);
    out.residual = max_abs(c.d0_bd * a - ub);
    out.lifted = u - c.d0 * embed_rows(a, c.boundary_vertex_dofs, c.d0.cols());
    for (int i : c.boundary_edge_dofs) {
        out.lifted.row(i).setZero();
    }
    return out;
}

/// omega on parabolic classes: both sides lifted to relative cocycles, so
/// the value depends only on the classes.
inline Matrix parabolic_omega(const SurfaceComplex& k, const FlatLocalSystem& f, const Coboundaries& c,
                              const Matrix& u, const Tolerance& tol = {})
{
    const RelativeLift lift = relative_lift(c, u, tol);
    const double scale = std::max(1.0, u.size() == 0 ? 0.0 : max_abs(u));
    if (lift.residual > tol.residual_tol * scale) {
        std::ostringstream os;
        os << "class does not vanish on the boundary; lift residual " << lift.residual;
        fail(ErrorKind::NotClosed, os.str());
    }
    return cup_omega(k, f, c, lift.lifted, tol);
}

} // namespace parhodge::twisted
