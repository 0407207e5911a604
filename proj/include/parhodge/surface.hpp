#pragma once

// Oriented triangulated surfaces with boundary, piecewise-flat metrics and
// lowest-order Whitney matrices.
//
// Conventions used everywhere downstream:
//  * every triangle is stored as an ordered triple rotated so that its lowest
//    vertex comes first; the cyclic order carries the orientation;
//  * every edge is stored once, oriented from its lower to its higher vertex;
//  * local edges of a triangle (v0, v1, v2) are (v0v1), (v1v2), (v0v2).

#include "parhodge/numlin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace parhodge::surface {

using Triangle = std::array<int, 3>;
using EdgeVertices = std::array<int, 2>;

/// Edge index plus +1 if the traversal agrees with low -> high, else -1.
struct EdgeRef {
    int index = -1;
    int sign = 0;
};

namespace detail {

inline std::int64_t edge_key(int a, int b)
{
    if (a > b) {
        std::swap(a, b);
    }
    return (static_cast<std::int64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

class UnionFind {
public:
    explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n))
    {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent_[std::max(a, b)] = std::min(a, b);
        }
    }

private:
    std::vector<int> parent_;
};

} // namespace detail

class SurfaceComplex {
public:
    /// Validates and derives all combinatorial data. Throws NonManifold,
    /// InconsistentOrientation or InvalidParameter. Disconnected input is
    /// accepted; see connected().
    static SurfaceComplex build(int vertex_count, std::vector<Triangle> triangles)
    {
        SurfaceComplex k;
        if (vertex_count <= 0 || triangles.empty()) {
            fail(ErrorKind::InvalidParameter, "surface needs at least one vertex and one triangle");
        }
        k.vertex_count_ = vertex_count;
        for (std::size_t t = 0; t < triangles.size(); ++t) {
            auto& tri = triangles[t];
            for (int v : tri) {
                if (v < 0 || v >= vertex_count) {
                    std::ostringstream os;
                    os << "triangle " << t << " references vertex " << v << " outside [0, "
                       << vertex_count << ")";
                    fail(ErrorKind::InvalidParameter, os.str());
                }
            }
            if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
                std::ostringstream os;
                os << "triangle " << t << " repeats a vertex";
                fail(ErrorKind::InvalidParameter, os.str());
            }
            while (tri[0] > tri[1] || tri[0] > tri[2]) {
                tri = {tri[1], tri[2], tri[0]};
            }
        }
        k.triangles_ = std::move(triangles);
        k.derive();
        return k;
    }

    int vertex_count() const { return vertex_count_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    int triangle_count() const { return static_cast<int>(triangles_.size()); }

    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<EdgeVertices>& edges() const { return edges_; }

    /// -1 when the vertices are not joined by an edge.
    int edge_index(int a, int b) const
    {
        auto it = edge_lookup_.find(detail::edge_key(a, b));
        return it == edge_lookup_.end() ? -1 : it->second;
    }

    EdgeRef oriented_edge(int from, int to) const
    {
        const int e = edge_index(from, to);
        if (e < 0) {
            std::ostringstream os;
            os << "no edge between " << from << " and " << to;
            fail(ErrorKind::InvalidParameter, os.str());
        }
        return {e, from < to ? 1 : -1};
    }

    /// Local edges (v0v1), (v1v2), (v0v2) with incidence signs.
    const std::array<EdgeRef, 3>& triangle_edges(int t) const { return triangle_edges_[t]; }

    bool is_boundary_edge(int e) const { return boundary_edge_flag_[e]; }
    bool is_boundary_vertex(int v) const { return boundary_vertex_flag_[v]; }
    const std::vector<int>& boundary_edges() const { return boundary_edges_; }
    const std::vector<int>& boundary_vertices() const { return boundary_vertices_; }
    const std::vector<int>& interior_edges() const { return interior_edges_; }
    const std::vector<int>& interior_vertices() const { return interior_vertices_; }

    /// Vertex cycles of the boundary, each traversed in the orientation
    /// induced from the triangles and starting at its lowest vertex; ordered
    /// by that vertex.
    const std::vector<std::vector<int>>& boundary_components() const { return boundary_components_; }

    /// Coefficient of every triangle in the fundamental 2-cycle.
    std::vector<int> fundamental_cycle() const { return std::vector<int>(triangles_.size(), 1); }

    int euler_characteristic() const { return vertex_count_ - edge_count() + triangle_count(); }

    int component_count() const { return component_count_; }
    const std::vector<int>& vertex_component() const { return vertex_component_; }
    bool connected() const { return component_count_ == 1; }

private:
    void derive()
    {
        struct Use {
            int triangle;
            bool forward; // traversed low -> high
        };
        std::vector<std::vector<Use>> uses;
        triangle_edges_.resize(triangles_.size());
        for (int t = 0; t < triangle_count(); ++t) {
            const Triangle& tri = triangles_[t];
            const std::array<std::pair<int, int>, 3> local{
                {{tri[0], tri[1]}, {tri[1], tri[2]}, {tri[0], tri[2]}}};
            for (int k = 0; k < 3; ++k) {
                auto [a, b] = local[k];
                const auto key = detail::edge_key(a, b);
                auto [it, inserted] = edge_lookup_.try_emplace(key, static_cast<int>(edges_.size()));
                if (inserted) {
                    edges_.push_back({std::min(a, b), std::max(a, b)});
                    uses.emplace_back();
                }
                const int e = it->second;
                triangle_edges_[t][k] = {e, a < b ? 1 : -1};
                // the boundary of (v0,v1,v2) runs v0->v1->v2->v0; local edge 2 is traversed v2->v0
                const bool forward = (k == 2) ? (b < a) : (a < b);
                uses[e].push_back({t, forward});
            }
        }

        // Sort edges so indices are independent of triangle order.
        std::vector<int> order(edges_.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int i, int j) { return edges_[i] < edges_[j]; });
        std::vector<int> new_index(edges_.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            new_index[order[i]] = static_cast<int>(i);
        }
        std::vector<EdgeVertices> sorted_edges(edges_.size());
        std::vector<std::vector<Use>> sorted_uses(edges_.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            sorted_edges[i] = edges_[order[i]];
            sorted_uses[i] = std::move(uses[order[i]]);
        }
        edges_ = std::move(sorted_edges);
        uses = std::move(sorted_uses);
        for (auto& kv : edge_lookup_) {
            kv.second = new_index[kv.second];
        }
        for (auto& te : triangle_edges_) {
            for (auto& ref : te) {
                ref.index = new_index[ref.index];
            }
        }

        boundary_edge_flag_.assign(edges_.size(), false);
        boundary_vertex_flag_.assign(vertex_count_, false);
        std::vector<int> next(vertex_count_, -1);
        std::vector<int> boundary_degree(vertex_count_, 0);
        for (int e = 0; e < edge_count(); ++e) {
            const auto& u = uses[e];
            const auto [a, b] = edges_[e];
            if (u.size() >= 3) {
                std::ostringstream os;
                os << "edge (" << a << "," << b << ") lies in " << u.size() << " triangles";
                fail(ErrorKind::NonManifold, os.str());
            }
            if (u.size() == 2) {
                if (u[0].forward == u[1].forward) {
                    std::ostringstream os;
                    os << "triangles " << u[0].triangle << " and " << u[1].triangle
                       << " induce the same direction on edge (" << a << "," << b << ")";
                    fail(ErrorKind::InconsistentOrientation, os.str());
                }
                continue;
            }
            boundary_edge_flag_[e] = true;
            boundary_edges_.push_back(e);
            const int from = u[0].forward ? a : b;
            const int to = u[0].forward ? b : a;
            ++boundary_degree[from];
            ++boundary_degree[to];
            boundary_vertex_flag_[from] = boundary_vertex_flag_[to] = true;
            next[from] = to;
        }

        std::vector<bool> used(vertex_count_, false);
        for (const auto& tri : triangles_) {
            for (int v : tri) {
                used[v] = true;
            }
        }
        for (int v = 0; v < vertex_count_; ++v) {
            if (!used[v]) {
                std::ostringstream os;
                os << "vertex " << v << " is not in any triangle";
                fail(ErrorKind::InvalidParameter, os.str());
            }
            if (boundary_vertex_flag_[v] && boundary_degree[v] != 2) {
                std::ostringstream os;
                os << "boundary vertex " << v << " has " << boundary_degree[v] << " boundary edges";
                fail(ErrorKind::NonManifold, os.str());
            }
        }
        check_vertex_links();

        for (int e = 0; e < edge_count(); ++e) {
            if (!boundary_edge_flag_[e]) {
                interior_edges_.push_back(e);
            }
        }
        for (int v = 0; v < vertex_count_; ++v) {
            (boundary_vertex_flag_[v] ? boundary_vertices_ : interior_vertices_).push_back(v);
        }

        std::vector<bool> visited(vertex_count_, false);
        for (int v : boundary_vertices_) {
            if (visited[v]) {
                continue;
            }
            std::vector<int> cycle;
            int x = v;
            while (!visited[x]) {
                visited[x] = true;
                cycle.push_back(x);
                x = next[x];
            }
            boundary_components_.push_back(std::move(cycle));
        }

        detail::UnionFind uf(vertex_count_);
        for (const auto& [a, b] : edges_) {
            uf.unite(a, b);
        }
        vertex_component_.assign(vertex_count_, -1);
        std::vector<int> root_to_component(vertex_count_, -1);
        component_count_ = 0;
        for (int v = 0; v < vertex_count_; ++v) {
            const int r = uf.find(v);
            if (root_to_component[r] < 0) {
                root_to_component[r] = component_count_++;
            }
            vertex_component_[v] = root_to_component[r];
        }
    }

    // The triangles around a vertex must form a single fan.
    void check_vertex_links()
    {
        std::vector<std::vector<std::pair<int, int>>> link(vertex_count_);
        for (const auto& tri : triangles_) {
            for (int k = 0; k < 3; ++k) {
                link[tri[k]].emplace_back(tri[(k + 1) % 3], tri[(k + 2) % 3]);
            }
        }
        std::unordered_map<int, int> local;
        for (int v = 0; v < vertex_count_; ++v) {
            local.clear();
            for (auto [a, b] : link[v]) {
                local.try_emplace(a, static_cast<int>(local.size()));
                local.try_emplace(b, static_cast<int>(local.size()));
            }
            detail::UnionFind uf(static_cast<int>(local.size()));
            for (auto [a, b] : link[v]) {
                uf.unite(local[a], local[b]);
            }
            for (const auto& kv : local) {
                if (uf.find(kv.second) != 0) {
                    std::ostringstream os;
                    os << "the triangles around vertex " << v << " do not form a single fan";
                    fail(ErrorKind::NonManifold, os.str());
                }
            }
        }
    }

    int vertex_count_ = 0;
    std::vector<Triangle> triangles_;
    std::vector<EdgeVertices> edges_;
    std::unordered_map<std::int64_t, int> edge_lookup_;
    std::vector<std::array<EdgeRef, 3>> triangle_edges_;
    std::vector<bool> boundary_edge_flag_;
    std::vector<bool> boundary_vertex_flag_;
    std::vector<int> boundary_edges_;
    std::vector<int> boundary_vertices_;
    std::vector<int> interior_edges_;
    std::vector<int> interior_vertices_;
    std::vector<std::vector<int>> boundary_components_;
    std::vector<int> vertex_component_;
    int component_count_ = 0;
};

/// Edge lengths indexed like SurfaceComplex::edges().
struct PLMetric {
    std::vector<double> edge_lengths;
};

struct TriangleLengths {
    double l01 = 0.0;
    double l12 = 0.0;
    double l02 = 0.0;
};

inline TriangleLengths triangle_lengths(const SurfaceComplex& k, const PLMetric& h, int t)
{
    const auto& te = k.triangle_edges(t);
    return {h.edge_lengths[te[0].index], h.edge_lengths[te[1].index], h.edge_lengths[te[2].index]};
}

/// Heron's formula in the numerically stable ordering.
inline double heron_area(double a, double b, double c)
{
    std::array<double, 3> s{a, b, c};
    std::sort(s.begin(), s.end(), std::greater<>());
    const double x = s[0], y = s[1], z = s[2];
    const double p = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
    return p > 0.0 ? 0.25 * std::sqrt(p) : 0.0;
}

inline void validate_metric(const SurfaceComplex& k, const PLMetric& h, const Tolerance& tol = {})
{
    if (static_cast<int>(h.edge_lengths.size()) != k.edge_count()) {
        fail(ErrorKind::DimensionMismatch, "metric must assign one length per edge");
    }
    for (int e = 0; e < k.edge_count(); ++e) {
        const double l = h.edge_lengths[e];
        if (!std::isfinite(l) || !(l > 0.0)) {
            std::ostringstream os;
            os << "edge (" << k.edges()[e][0] << "," << k.edges()[e][1] << ") has length " << l;
            fail(ErrorKind::DegenerateMetric, os.str());
        }
    }
    for (int t = 0; t < k.triangle_count(); ++t) {
        const auto l = triangle_lengths(k, h, t);
        const double lmax = std::max({l.l01, l.l12, l.l02});
        if (!(l.l01 + l.l12 > l.l02 && l.l12 + l.l02 > l.l01 && l.l01 + l.l02 > l.l12) ||
            heron_area(l.l01, l.l12, l.l02) <= tol.rank_tol * lmax * lmax) {
            std::ostringstream os;
            os << "triangle " << t << " violates the strict triangle inequality";
            fail(ErrorKind::DegenerateMetric, os.str());
        }
    }
}

// ---------------------------------------------------------------------------
// Generators

/// One letter of a word in the surface-group generators.
struct Letter {
    int generator = 0;
    int power = 1; // +1 or -1
};

/// A triangulated disk mapping onto the surface (a cut-open copy). Each copy
/// vertex carries the deck word relating its frame to the frame of the
/// surface vertex it covers; the representation compiler evaluates these.
struct Development {
    std::vector<int> copy_vertex;
    std::vector<std::vector<Letter>> copy_word;
    std::vector<Triangle> triangles;
};

/// Based edge loops a_1, b_1, ..., a_g, b_g, c_1, ..., c_k with
/// prod [a_i, b_i] prod c_j nullhomotopic; c_j is freely homotopic to
/// boundary component j (in boundary_components() order).
struct GeneratorLoops {
    int genus = 0;
    int boundary_count = 0;
    int base_vertex = 0;
    std::vector<std::string> names;
    std::vector<std::vector<int>> paths;
    Development development;

    int generator_count() const { return static_cast<int>(names.size()); }
};

struct GeneratedSurface {
    std::string id;
    SurfaceComplex complex;
    PLMetric metric;
    GeneratorLoops loops;
};

namespace detail {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// Edge lengths from planar copy coordinates; identified copies of an edge
// must agree.
inline PLMetric metric_from_development(const SurfaceComplex& k, const Development& dev,
                                        const std::vector<Point2>& coords)
{
    PLMetric h;
    h.edge_lengths.assign(k.edge_count(), -1.0);
    for (const auto& tri : dev.triangles) {
        for (int a = 0; a < 3; ++a) {
            const int p = tri[a];
            const int q = tri[(a + 1) % 3];
            const double len = std::hypot(coords[p].x - coords[q].x, coords[p].y - coords[q].y);
            const int e = k.edge_index(dev.copy_vertex[p], dev.copy_vertex[q]);
            double& slot = h.edge_lengths[e];
            if (slot < 0.0) {
                slot = len;
            } else if (std::abs(slot - len) > 1e-12 * std::max(1.0, len)) {
                fail(ErrorKind::InvalidParameter, "development assigns two lengths to one edge");
            }
        }
    }
    return h;
}

inline std::vector<Triangle> project(const Development& dev)
{
    std::vector<Triangle> out;
    out.reserve(dev.triangles.size());
    for (const auto& t : dev.triangles) {
        out.push_back({dev.copy_vertex[t[0]], dev.copy_vertex[t[1]], dev.copy_vertex[t[2]]});
    }
    return out;
}

} // namespace detail

/// m x m periodic grid on the unit square; each square split along its
/// (i,j)-(i+1,j+1) diagonal.
inline GeneratedSurface torus(int m)
{
    if (m < 3) {
        fail(ErrorKind::InvalidParameter, "torus needs m >= 3");
    }
    Development dev;
    std::vector<detail::Point2> coords;
    auto copy = [m](int i, int j) { return i + (m + 1) * j; };
    for (int j = 0; j <= m; ++j) {
        for (int i = 0; i <= m; ++i) {
            dev.copy_vertex.push_back((i % m) + m * (j % m));
            std::vector<Letter> word;
            if (i == m) {
                word.push_back({0, 1});
            }
            if (j == m) {
                word.push_back({1, 1});
            }
            dev.copy_word.push_back(std::move(word));
            coords.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
        }
    }
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const int a = copy(i, j), b = copy(i + 1, j), c = copy(i + 1, j + 1), d = copy(i, j + 1);
            dev.triangles.push_back({a, b, c});
            dev.triangles.push_back({a, c, d});
        }
    }
    GeneratedSurface s{"torus(" + std::to_string(m) + ")",
                       SurfaceComplex::build(m * m, detail::project(dev)), {}, {}};
    s.metric = detail::metric_from_development(s.complex, dev, coords);
    GeneratorLoops& loops = s.loops;
    loops.genus = 1;
    loops.names = {"a1", "b1"};
    std::vector<int> a, b;
    for (int i = 0; i <= m; ++i) {
        a.push_back(i % m);
        b.push_back(m * (i % m));
    }
    loops.paths = {a, b};
    loops.development = std::move(dev);
    return s;
}

/// Flat cylinder of circumference 1 and height 1 with m vertices per ring and
/// n layers of squares.
inline GeneratedSurface annulus(int m, int n)
{
    if (m < 3 || n < 1) {
        fail(ErrorKind::InvalidParameter, "annulus needs m >= 3 and n >= 1");
    }
    Development dev;
    std::vector<detail::Point2> coords;
    auto copy = [m](int i, int j) { return i + (m + 1) * j; };
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= m; ++i) {
            dev.copy_vertex.push_back((i % m) + m * j);
            dev.copy_word.push_back(i == m ? std::vector<Letter>{{0, 1}} : std::vector<Letter>{});
            coords.push_back({static_cast<double>(i) / m, static_cast<double>(j) / n});
        }
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < m; ++i) {
            const int a = copy(i, j), b = copy(i + 1, j), c = copy(i + 1, j + 1), d = copy(i, j + 1);
            dev.triangles.push_back({a, b, c});
            dev.triangles.push_back({a, c, d});
        }
    }
    GeneratedSurface s{"annulus(" + std::to_string(m) + "," + std::to_string(n) + ")",
                       SurfaceComplex::build(m * (n + 1), detail::project(dev)), {}, {}};
    s.metric = detail::metric_from_development(s.complex, dev, coords);
    GeneratorLoops& loops = s.loops;
    loops.genus = 0;
    loops.boundary_count = 2;
    loops.names = {"c1", "c2"};
    std::vector<int> c1, c2;
    for (int i = 0; i <= m; ++i) {
        c1.push_back(i % m);
    }
    for (int j = 0; j <= n; ++j) {
        c2.push_back(m * j);
    }
    for (int i = m - 1; i >= 0; --i) {
        c2.push_back(m * n + i);
    }
    for (int j = n - 1; j >= 0; --j) {
        c2.push_back(m * j);
    }
    loops.paths = {c1, c2};
    loops.development = std::move(dev);
    return s;
}

/// Regular m-gon of circumradius 1 fanned from its center (vertex 0).
inline GeneratedSurface disk(int m)
{
    if (m < 3) {
        fail(ErrorKind::InvalidParameter, "disk needs m >= 3");
    }
    Development dev;
    std::vector<detail::Point2> coords{{0.0, 0.0}};
    const double pi = std::acos(-1.0);
    for (int i = 0; i <= m; ++i) {
        dev.copy_vertex.push_back(i);
        dev.copy_word.emplace_back();
        if (i > 0) {
            const double th = 2.0 * pi * (i - 1) / m;
            coords.push_back({std::cos(th), std::sin(th)});
        }
    }
    for (int i = 1; i <= m; ++i) {
        dev.triangles.push_back({0, i, i % m + 1});
    }
    GeneratedSurface s{"disk(" + std::to_string(m) + ")",
                       SurfaceComplex::build(m + 1, detail::project(dev)), {}, {}};
    s.metric = detail::metric_from_development(s.complex, dev, coords);
    GeneratorLoops& loops = s.loops;
    loops.boundary_count = 1;
    loops.base_vertex = 1;
    loops.names = {"c1"};
    std::vector<int> c1;
    for (int i = 1; i <= m; ++i) {
        c1.push_back(i);
    }
    c1.push_back(1);
    loops.paths = {c1};
    loops.development = std::move(dev);
    return s;
}

/// Genus g surface with k boundary circles, from the polygon
///   a1 b1 a1^-1 b1^-1 ... ag bg ag^-1 bg^-1  d1 c1 d1^-1 ... dk ck dk^-1
/// with sides split into 2+subdiv segments and subdiv concentric rings
/// inside. All polygon corners are the base vertex 0; c_j is a boundary
/// circle reached from the base along the tail d_j.
inline GeneratedSurface genus_k(int g, int k, int subdiv)
{
    if (g < 0 || k < 0 || subdiv < 1 || (g == 0 && k == 0)) {
        fail(ErrorKind::InvalidParameter, "genus_k needs g >= 0, k >= 0, (g,k) != (0,0), subdiv >= 1");
    }
    const int segments = 2 + subdiv;
    const int rings = subdiv;
    int next_id = 1;
    auto fresh_path = [&](int start, int end_vertex, bool allocate_end) {
        std::vector<int> path{start};
        for (int i = 1; i < segments; ++i) {
            path.push_back(next_id++);
        }
        path.push_back(allocate_end ? next_id++ : end_vertex);
        return path;
    };

    struct Side {
        std::vector<int> vertices;
        int generator; // -1 for tails
    };
    struct Occurrence {
        int side;
        bool reversed;
    };
    std::vector<Side> sides;
    std::vector<Occurrence> word;
    std::vector<std::string> names;
    std::vector<std::vector<int>> paths;
    for (int i = 0; i < g; ++i) {
        const int a = static_cast<int>(sides.size());
        sides.push_back({fresh_path(0, 0, false), 2 * i});
        sides.push_back({fresh_path(0, 0, false), 2 * i + 1});
        word.insert(word.end(), {{a, false}, {a + 1, false}, {a, true}, {a + 1, true}});
    }
    std::vector<int> tails;
    for (int j = 0; j < k; ++j) {
        const int d = static_cast<int>(sides.size());
        sides.push_back({fresh_path(0, 0, true), -1});
        const int w = sides.back().vertices.back();
        sides.push_back({fresh_path(w, w, false), 2 * g + j});
        word.insert(word.end(), {{d, false}, {d + 1, false}, {d, true}});
        tails.push_back(d);
    }
    const int outer_vertex_count = next_id;

    for (int i = 0; i < g; ++i) {
        names.push_back("a" + std::to_string(i + 1));
        names.push_back("b" + std::to_string(i + 1));
        paths.push_back(sides[2 * i].vertices);
        paths.push_back(sides[2 * i + 1].vertices);
    }
    for (int j = 0; j < k; ++j) {
        names.push_back("c" + std::to_string(j + 1));
        const auto& d = sides[tails[j]].vertices;
        const auto& c = sides[tails[j] + 1].vertices;
        std::vector<int> loop(d);
        loop.insert(loop.end(), c.begin() + 1, c.end());
        loop.insert(loop.end(), d.rbegin() + 1, d.rend());
        paths.push_back(std::move(loop));
    }

    // Walk the polygon boundary, recording copies and deck words. A generator
    // side carries its letter on its last edge.
    Development dev;
    std::vector<Letter> prefix;
    for (const auto& occ : word) {
        const Side& side = sides[occ.side];
        std::vector<int> verts = side.vertices;
        if (occ.reversed) {
            std::reverse(verts.begin(), verts.end());
        }
        for (int t = 0; t < segments; ++t) {
            dev.copy_vertex.push_back(verts[t]);
            dev.copy_word.push_back(prefix);
            if (side.generator >= 0) {
                if (occ.reversed && t == 0) {
                    prefix.push_back({side.generator, -1});
                }
                if (!occ.reversed && t == segments - 1) {
                    prefix.push_back({side.generator, 1});
                }
            }
        }
    }
    const int perimeter = static_cast<int>(dev.copy_vertex.size());
    const double pi = std::acos(-1.0);
    std::vector<detail::Point2> coords;
    for (int p = 0; p < perimeter; ++p) {
        const double th = 2.0 * pi * p / perimeter;
        coords.push_back({std::cos(th), std::sin(th)});
    }
    int surface_id = outer_vertex_count;
    std::vector<int> previous(perimeter);
    std::iota(previous.begin(), previous.end(), 0);
    for (int r = 1; r <= rings; ++r) {
        const double radius = 1.0 - static_cast<double>(r) / (rings + 1);
        std::vector<int> ring(perimeter);
        for (int p = 0; p < perimeter; ++p) {
            ring[p] = static_cast<int>(dev.copy_vertex.size());
            dev.copy_vertex.push_back(surface_id++);
            dev.copy_word.emplace_back();
            const double th = 2.0 * pi * p / perimeter;
            coords.push_back({radius * std::cos(th), radius * std::sin(th)});
        }
        for (int p = 0; p < perimeter; ++p) {
            const int q = (p + 1) % perimeter;
            dev.triangles.push_back({previous[p], previous[q], ring[q]});
            dev.triangles.push_back({previous[p], ring[q], ring[p]});
        }
        previous = std::move(ring);
    }
    const int center = static_cast<int>(dev.copy_vertex.size());
    dev.copy_vertex.push_back(surface_id++);
    dev.copy_word.emplace_back();
    coords.push_back({0.0, 0.0});
    for (int p = 0; p < perimeter; ++p) {
        dev.triangles.push_back({center, previous[p], previous[(p + 1) % perimeter]});
    }

    std::ostringstream id;
    id << "genus_k(" << g << "," << k << "," << subdiv << ")";
    GeneratedSurface s{id.str(), SurfaceComplex::build(surface_id, detail::project(dev)), {}, {}};
    s.metric = detail::metric_from_development(s.complex, dev, coords);
    s.loops.genus = g;
    s.loops.boundary_count = k;
    s.loops.base_vertex = 0;
    s.loops.names = std::move(names);
    s.loops.paths = std::move(paths);
    s.loops.development = std::move(dev);
    return s;
}

// ---------------------------------------------------------------------------
// Whitney forms

/// Per-triangle Whitney integrals in local numbering. Local edges are
/// (01), (12), (02), each oriented from the lower to the higher local index.
struct LocalWhitney {
    double area = 0.0;
    Eigen::Matrix3d m0;
    Eigen::Matrix3d m1;
    Eigen::Matrix3d w1; // integral of w_e ^ w_f, orientation of (v0,v1,v2)
};

namespace detail {

constexpr std::array<std::array<int, 2>, 3> kLocalEdges{{{0, 1}, {1, 2}, {0, 2}}};

// integral of lambda_a lambda_b over a triangle, divided by its area
inline double barycentric_moment(int a, int b)
{
    return a == b ? 1.0 / 6.0 : 1.0 / 12.0;
}

// dlambda_a ^ dlambda_b in units of 1/(2 area) for a positively oriented triangle
inline double barycentric_wedge(int a, int b)
{
    if (a == b) {
        return 0.0;
    }
    return ((b - a + 3) % 3 == 1) ? 1.0 : -1.0;
}

} // namespace detail

inline LocalWhitney local_whitney(const TriangleLengths& l)
{
    LocalWhitney out;
    // Lay the triangle out in the plane, counterclockwise.
    const double x2 = (l.l01 * l.l01 + l.l02 * l.l02 - l.l12 * l.l12) / (2.0 * l.l01);
    const double y2 = std::sqrt(std::max(0.0, l.l02 * l.l02 - x2 * x2));
    const std::array<Eigen::Vector2d, 3> p{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(l.l01, 0.0),
                                           Eigen::Vector2d(x2, y2)};
    out.area = heron_area(l.l01, l.l12, l.l02);
    std::array<Eigen::Vector2d, 3> grad;
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector2d opp = p[(i + 2) % 3] - p[(i + 1) % 3];
        grad[i] = Eigen::Vector2d(-opp.y(), opp.x()) / (2.0 * out.area);
    }
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            out.m0(a, b) = out.area * detail::barycentric_moment(a, b);
        }
    }
    // w_ij = l_i dl_j - l_j dl_i, so every product expands into four terms.
    for (int e = 0; e < 3; ++e) {
        const auto [i, j] = detail::kLocalEdges[e];
        for (int f = 0; f < 3; ++f) {
            const auto [k, m] = detail::kLocalEdges[f];
            auto term = [&](int s1, int s2, int g1, int g2, double sign, bool wedge) {
                const double moment = detail::barycentric_moment(s1, s2);
                if (wedge) {
                    return sign * moment * detail::barycentric_wedge(g1, g2) / 2.0;
                }
                return sign * moment * out.area * grad[g1].dot(grad[g2]);
            };
            for (bool wedge : {false, true}) {
                const double v = term(i, k, j, m, 1.0, wedge) - term(i, m, j, k, 1.0, wedge) -
                                 term(j, k, i, m, 1.0, wedge) + term(j, m, i, k, 1.0, wedge);
                (wedge ? out.w1 : out.m1)(e, f) = v;
            }
        }
    }
    return out;
}

struct WhitneyMatrices {
    Matrix m0;
    Matrix m1;
    Matrix m2;
    Matrix w1;
};

/// Scalar Whitney mass matrices and the wedge pairing of Whitney 1-forms.
inline WhitneyMatrices whitney_scalar_matrices(const SurfaceComplex& k, const PLMetric& h,
                                               const Tolerance& tol = {})
{
    validate_metric(k, h, tol);
    WhitneyMatrices out;
    out.m0 = Matrix::Zero(k.vertex_count(), k.vertex_count());
    out.m1 = Matrix::Zero(k.edge_count(), k.edge_count());
    out.m2 = Matrix::Zero(k.triangle_count(), k.triangle_count());
    out.w1 = Matrix::Zero(k.edge_count(), k.edge_count());
    for (int t = 0; t < k.triangle_count(); ++t) {
        const LocalWhitney lw = local_whitney(triangle_lengths(k, h, t));
        const auto& tri = k.triangles()[t];
        const auto& te = k.triangle_edges(t);
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                out.m0(tri[a], tri[b]) += lw.m0(a, b);
                const double s = te[a].sign * te[b].sign;
                out.m1(te[a].index, te[b].index) += s * lw.m1(a, b);
                out.w1(te[a].index, te[b].index) += s * lw.w1(a, b);
            }
        }
        out.m2(t, t) = 1.0 / lw.area;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transformations used by the naturality checks

/// Complex with triangles (v0, v2, v1): every orientation reversed.
inline SurfaceComplex reverse_orientation(const SurfaceComplex& k)
{
    std::vector<Triangle> tris;
    for (const auto& t : k.triangles()) {
        tris.push_back({t[0], t[2], t[1]});
    }
    return SurfaceComplex::build(k.vertex_count(), std::move(tris));
}

/// Vertex v of k becomes perm[v].
inline SurfaceComplex relabel(const SurfaceComplex& k, const std::vector<int>& perm)
{
    std::vector<Triangle> tris;
    for (const auto& t : k.triangles()) {
        tris.push_back({perm[t[0]], perm[t[1]], perm[t[2]]});
    }
    return SurfaceComplex::build(k.vertex_count(), std::move(tris));
}

/// Lengths of `from` carried over to `to` through a vertex map.
inline PLMetric transfer_metric(const SurfaceComplex& from, const PLMetric& h,
                                const SurfaceComplex& to, const std::vector<int>& vertex_map)
{
    PLMetric out;
    out.edge_lengths.assign(to.edge_count(), 0.0);
    for (int e = 0; e < from.edge_count(); ++e) {
        const auto [a, b] = from.edges()[e];
        out.edge_lengths[to.edge_index(vertex_map[a], vertex_map[b])] = h.edge_lengths[e];
    }
    return out;
}

inline std::pair<SurfaceComplex, PLMetric> disjoint_union(const SurfaceComplex& k1, const PLMetric& h1,
                                                          const SurfaceComplex& k2, const PLMetric& h2)
{
    std::vector<Triangle> tris = k1.triangles();
    const int off = k1.vertex_count();
    for (const auto& t : k2.triangles()) {
        tris.push_back({t[0] + off, t[1] + off, t[2] + off});
    }
    SurfaceComplex k = SurfaceComplex::build(off + k2.vertex_count(), std::move(tris));
    PLMetric h;
    h.edge_lengths.assign(k.edge_count(), 0.0);
    for (int e = 0; e < k1.edge_count(); ++e) {
        h.edge_lengths[k.edge_index(k1.edges()[e][0], k1.edges()[e][1])] = h1.edge_lengths[e];
    }
    for (int e = 0; e < k2.edge_count(); ++e) {
        h.edge_lengths[k.edge_index(k2.edges()[e][0] + off, k2.edges()[e][1] + off)] = h2.edge_lengths[e];
    }
    return {std::move(k), std::move(h)};
}

/// Conformal-style perturbation l_uv -> l_uv * exp(eps (phi_u + phi_v)) with
/// phi drawn from a deterministic hash of (seed, vertex); eps is halved
/// until the result is a valid metric.
inline PLMetric perturb_metric(const SurfaceComplex& k, const PLMetric& h, std::uint64_t seed,
                               double eps = 0.1, const Tolerance& tol = {})
{
    auto phi = [seed](int v) {
        std::uint64_t x = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(v) + 1;
        x ^= x >> 30;
        x *= 0xBF58476D1CE4E5B9ULL;
        x ^= x >> 27;
        x *= 0x94D049BB133111EBULL;
        x ^= x >> 31;
        return static_cast<double>(x >> 11) / static_cast<double>(1ULL << 53) * 2.0 - 1.0;
    };
    for (int attempt = 0; attempt < 20; ++attempt, eps *= 0.5) {
        PLMetric out = h;
        for (int e = 0; e < k.edge_count(); ++e) {
            out.edge_lengths[e] *= std::exp(eps * (phi(k.edges()[e][0]) + phi(k.edges()[e][1])));
        }
        try {
            validate_metric(k, out, tol);
            return out;
        } catch (const Error&) {
        }
    }
    return h;
}

inline PLMetric scale_metric(const PLMetric& h, double c)
{
    PLMetric out = h;
    for (double& l : out.edge_lengths) {
        l *= c;
    }
    return out;
}

} // namespace parhodge::surface
