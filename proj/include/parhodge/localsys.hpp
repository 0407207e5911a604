#pragma once

// Flat orthogonal local systems on a triangulated surface.
//
// A system stores one orthogonal matrix per edge, oriented low -> high:
// P_e maps the fiber at the head back to the fiber at the tail. Traversing
// an edge against its orientation uses the transpose.

#include "parhodge/surface.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace parhodge::localsys {

using surface::GeneratorLoops;
using surface::SurfaceComplex;

struct FlatLocalSystem {
    int fiber_dim = 0;
    std::vector<Matrix> transports; // indexed like SurfaceComplex::edges()
    double flat_residual = 0.0;

    /// Pullback from the fiber at `to` to the fiber at `from`.
    Matrix transport(const SurfaceComplex& k, int from, int to) const
    {
        const auto ref = k.oriented_edge(from, to);
        return ref.sign > 0 ? transports[ref.index] : Matrix(transports[ref.index].transpose());
    }
};

struct OrientedTransport {
    int tail = 0;
    int head = 0;
    Matrix matrix;
};

inline double orthogonality_residual(const Matrix& p)
{
    return max_abs(p.transpose() * p - Matrix::Identity(p.cols(), p.cols()));
}

/// Largest deviation of a triangle holonomy from the identity.
inline double flatness_residual(const SurfaceComplex& k, const FlatLocalSystem& f)
{
    double r = 0.0;
    for (const auto& t : k.triangles()) {
        const Matrix h = f.transport(k, t[0], t[1]) * f.transport(k, t[1], t[2]) * f.transport(k, t[2], t[0]);
        r = std::max(r, max_abs(h - Matrix::Identity(f.fiber_dim, f.fiber_dim)));
    }
    return r;
}

inline void validate(const SurfaceComplex& k, FlatLocalSystem& f, const Tolerance& tol = {})
{
    if (f.fiber_dim <= 0) {
        fail(ErrorKind::InvalidParameter, "fiber dimension must be positive");
    }
    if (static_cast<int>(f.transports.size()) != k.edge_count()) {
        fail(ErrorKind::DimensionMismatch, "one transport per edge required");
    }
    for (int e = 0; e < k.edge_count(); ++e) {
        const Matrix& p = f.transports[e];
        if (p.rows() != f.fiber_dim || p.cols() != f.fiber_dim) {
            fail(ErrorKind::DimensionMismatch, "transport has the wrong size");
        }
        require_finite(p, "transport");
        if (orthogonality_residual(p) > tol.residual_tol) {
            std::ostringstream os;
            os << "transport on edge (" << k.edges()[e][0] << "," << k.edges()[e][1]
               << ") is not orthogonal (residual " << orthogonality_residual(p) << ")";
            fail(ErrorKind::NotOrthogonal, os.str());
        }
    }
    f.flat_residual = flatness_residual(k, f);
    if (f.flat_residual > tol.residual_tol) {
        std::ostringstream os;
        os << "triangle holonomy deviates from the identity by " << f.flat_residual;
        fail(ErrorKind::NotFlat, os.str());
    }
}

inline FlatLocalSystem trivial_system(const SurfaceComplex& k, int n)
{
    if (n <= 0) {
        fail(ErrorKind::InvalidParameter, "fiber dimension must be positive");
    }
    FlatLocalSystem f;
    f.fiber_dim = n;
    f.transports.assign(k.edge_count(), Matrix::Identity(n, n));
    return f;
}

inline FlatLocalSystem from_edge_transports(const SurfaceComplex& k, int fiber_dim,
                                            const std::vector<OrientedTransport>& transports,
                                            const Tolerance& tol = {})
{
    FlatLocalSystem f;
    f.fiber_dim = fiber_dim;
    f.transports.assign(k.edge_count(), Matrix());
    std::vector<bool> seen(k.edge_count(), false);
    for (const auto& t : transports) {
        if (t.tail < 0 || t.head < 0 || t.tail >= k.vertex_count() || t.head >= k.vertex_count()) {
            fail(ErrorKind::InvalidParameter, "transport references a vertex outside the complex");
        }
        const auto ref = k.oriented_edge(t.tail, t.head);
        if (seen[ref.index]) {
            std::ostringstream os;
            os << "edge (" << t.tail << "," << t.head << ") is assigned twice";
            fail(ErrorKind::InvalidParameter, os.str());
        }
        seen[ref.index] = true;
        f.transports[ref.index] = ref.sign > 0 ? t.matrix : Matrix(t.matrix.transpose());
    }
    for (int e = 0; e < k.edge_count(); ++e) {
        if (!seen[e]) {
            std::ostringstream os;
            os << "edge (" << k.edges()[e][0] << "," << k.edges()[e][1] << ") has no transport";
            fail(ErrorKind::InvalidParameter, os.str());
        }
    }
    validate(k, f, tol);
    return f;
}

/// P_{v0 v1} P_{v1 v2} ... : maps the fiber at the end of the path to the
/// fiber at its start.
inline Matrix path_holonomy(const SurfaceComplex& k, const FlatLocalSystem& f, const std::vector<int>& path)
{
    Matrix h = Matrix::Identity(f.fiber_dim, f.fiber_dim);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        h = h * f.transport(k, path[i], path[i + 1]);
    }
    return h;
}

/// P_e -> g_tail P_e g_head^T.
inline FlatLocalSystem gauge_transform(const SurfaceComplex& k, const FlatLocalSystem& f,
                                       const std::vector<Matrix>& g)
{
    if (static_cast<int>(g.size()) != k.vertex_count()) {
        fail(ErrorKind::DimensionMismatch, "one gauge matrix per vertex required");
    }
    FlatLocalSystem out = f;
    for (int e = 0; e < k.edge_count(); ++e) {
        const auto [a, b] = k.edges()[e];
        out.transports[e] = g[a] * f.transports[e] * g[b].transpose();
    }
    out.flat_residual = flatness_residual(k, out);
    return out;
}

/// Word in the generators evaluated on images; power -1 uses the transpose.
inline Matrix evaluate_word(const std::vector<surface::Letter>& word, const std::vector<Matrix>& images, int n)
{
    Matrix g = Matrix::Identity(n, n);
    for (const auto& letter : word) {
        const Matrix& x = images[letter.generator];
        g = g * (letter.power > 0 ? x : Matrix(x.transpose()));
    }
    return g;
}

/// prod [A_i, B_i] prod C_j with [A, B] = A B A^-1 B^-1.
inline Matrix relation_product(const GeneratorLoops& loops, const std::vector<Matrix>& images, int n)
{
    Matrix r = Matrix::Identity(n, n);
    for (int i = 0; i < loops.genus; ++i) {
        const Matrix& a = images[2 * i];
        const Matrix& b = images[2 * i + 1];
        r = r * a * b * a.transpose() * b.transpose();
    }
    for (int j = 0; j < loops.boundary_count; ++j) {
        r = r * images[2 * loops.genus + j];
    }
    return r;
}

/// Flat system with holonomy `images` (ordered like loops.names) along the
/// generator loops. Transports are read off the development and then gauged
/// so that a breadth-first spanning tree from the base vertex carries the
/// identity.
inline FlatLocalSystem from_representation(const SurfaceComplex& k, const GeneratorLoops& loops,
                                           const std::vector<Matrix>& images, const Tolerance& tol = {})
{
    if (static_cast<int>(images.size()) != loops.generator_count()) {
        std::ostringstream os;
        os << "expected " << loops.generator_count() << " generator images, got " << images.size();
        fail(ErrorKind::DimensionMismatch, os.str());
    }
    if (images.empty()) {
        fail(ErrorKind::InvalidParameter, "a representation needs at least one generator");
    }
    const int n = static_cast<int>(images.front().rows());
    for (const auto& x : images) {
        if (x.rows() != n || x.cols() != n) {
            fail(ErrorKind::DimensionMismatch, "generator images must share one square size");
        }
        require_finite(x, "generator image");
        if (orthogonality_residual(x) > tol.residual_tol) {
            fail(ErrorKind::NotOrthogonal, "generator image is not orthogonal");
        }
    }
    const double relation = max_abs(relation_product(loops, images, n) - Matrix::Identity(n, n));
    if (relation > tol.residual_tol) {
        std::ostringstream os;
        os << "images violate the surface-group relation; residual " << relation;
        fail(ErrorKind::RelationViolated, os.str());
    }

    const auto& dev = loops.development;
    std::vector<Matrix> frames;
    frames.reserve(dev.copy_word.size());
    for (const auto& word : dev.copy_word) {
        frames.push_back(evaluate_word(word, images, n));
    }
    FlatLocalSystem f;
    f.fiber_dim = n;
    f.transports.assign(k.edge_count(), Matrix());
    for (const auto& tri : dev.triangles) {
        for (int a = 0; a < 3; ++a) {
            const int p = tri[a];
            const int q = tri[(a + 1) % 3];
            const int x = dev.copy_vertex[p];
            const int y = dev.copy_vertex[q];
            const auto ref = k.oriented_edge(x, y);
            Matrix t = frames[p].transpose() * frames[q];
            if (ref.sign < 0) {
                t.transposeInPlace();
            }
            Matrix& slot = f.transports[ref.index];
            if (slot.size() == 0) {
                slot = std::move(t);
            } else if (max_abs(slot - t) > tol.residual_tol) {
                fail(ErrorKind::RelationViolated, "development yields inconsistent edge transports");
            }
        }
    }

    // Breadth-first gauge from the base vertex, neighbors in increasing order.
    std::vector<std::vector<int>> adjacency(k.vertex_count());
    for (const auto& [a, b] : k.edges()) {
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    }
    for (auto& nb : adjacency) {
        std::sort(nb.begin(), nb.end());
    }
    std::vector<Matrix> gauge(k.vertex_count(), Matrix::Identity(n, n));
    std::vector<bool> reached(k.vertex_count(), false);
    std::deque<int> queue{loops.base_vertex};
    reached[loops.base_vertex] = true;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v : adjacency[u]) {
            if (!reached[v]) {
                reached[v] = true;
                gauge[v] = gauge[u] * f.transport(k, u, v);
                queue.push_back(v);
            }
        }
    }
    f = gauge_transform(k, f, gauge);
    for (auto& p : f.transports) {
        // tree edges are identity up to rounding; make that exact
        if (max_abs(p - Matrix::Identity(n, n)) < 1e-14) {
            p.setIdentity();
        }
    }
    validate(k, f, tol);
    for (int i = 0; i < loops.generator_count(); ++i) {
        const double r = max_abs(path_holonomy(k, f, loops.paths[i]) - images[i]);
        if (r > tol.residual_tol) {
            std::ostringstream os;
            os << "holonomy along " << loops.names[i] << " misses its image by " << r;
            fail(ErrorKind::NotFlat, os.str());
        }
    }
    return f;
}

/// Holonomy around each boundary component, starting at its lowest vertex
/// and following the induced orientation.
inline std::vector<Matrix> boundary_monodromies(const SurfaceComplex& k, const FlatLocalSystem& f)
{
    std::vector<Matrix> out;
    for (const auto& cycle : k.boundary_components()) {
        std::vector<int> path = cycle;
        path.push_back(cycle.front());
        out.push_back(path_holonomy(k, f, path));
    }
    return out;
}

// ---------------------------------------------------------------------------
// SU(2) and its adjoint action

struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quaternion conjugate() const { return {w, -x, -y, -z}; }
    Quaternion operator-() const { return {-w, -x, -y, -z}; }
    Quaternion normalized() const
    {
        const double s = norm();
        return {w / s, x / s, y / s, z / s};
    }
    Eigen::Vector3d vec() const { return {x, y, z}; }

    friend Quaternion operator*(const Quaternion& a, const Quaternion& b)
    {
        return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z, a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x, a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
    }

    /// cos(theta/2) + sin(theta/2) axis; the axis need not be normalized.
    static Quaternion from_axis_angle(const Eigen::Vector3d& axis, double theta)
    {
        const Eigen::Vector3d u = axis.normalized();
        const double s = std::sin(theta / 2.0);
        return {std::cos(theta / 2.0), s * u.x(), s * u.y(), s * u.z()};
    }
};

/// Rotation of the imaginary quaternions v -> q v q^-1.
inline Matrix su2_adjoint(const Quaternion& q, const Tolerance& tol = {})
{
    if (!(std::abs(q.norm() - 1.0) <= tol.residual_tol)) {
        std::ostringstream os;
        os << "quaternion has norm " << q.norm();
        fail(ErrorKind::NotUnit, os.str());
    }
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Matrix r(3, 3);
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

/// Rotation angle in [0, pi] of an SO(3) matrix.
inline double rotation_angle(const Matrix& r)
{
    const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

} // namespace parhodge::localsys
