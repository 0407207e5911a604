#pragma once

// The modified Hodge star on parabolic cohomology.
//
// Parabolic classes are represented by their Neumann-harmonic cochains U.
// The Gram matrix of U under M1 and the topological pairing of the classes
// determine G = -M_U^{-1} Omega_U, and J_par = (-G^2)^{-1/2} G.

#include "parhodge/compat.hpp"
#include "parhodge/hodge.hpp"

#include <complex>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

namespace parhodge::parastar {

using hodge::MetricComplex;
using localsys::FlatLocalSystem;
using surface::PLMetric;
using surface::SurfaceComplex;

struct ParabolicStarReport {
    std::string mesh_id;
    std::string metric_hash;
    std::string system_hash;
    int fiber_dim = 0;
    int dim_h1 = 0;
    int dim_h1_rel = 0;
    int dim_h1_bd = 0;
    int dim_h1_par = 0;
    bool exactness_check = false;
    Matrix class_basis; // cocycle representatives of the parabolic classes
    Matrix u_basis;     // their harmonic representatives
    Matrix m_u;
    Matrix omega_u;
    Matrix g;
    Matrix r;
    Matrix j_par;
    std::map<std::string, double> residuals;
    std::vector<ParabolicStarReport> component_split;

    bool compatible(const Tolerance& tol) const
    {
        if (dim_h1_par == 0) {
            return true;
        }
        return residuals.at("jpar_sq") < tol.residual_tol && residuals.at("omega_invariance") < tol.residual_tol &&
               residuals.at("taming_min_eigenvalue") > 0.0;
    }
};

struct StarOptions {
    std::string mesh_id;
    bool ambient_residual = true; // fill p38_residual (needs the full decomposition)
};

namespace detail {

inline void fnv(std::uint64_t& h, const std::string& s)
{
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
}

inline std::string hex(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string g17(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace detail

inline std::string metric_hash(const SurfaceComplex& k, const PLMetric& h)
{
    std::uint64_t x = 0xCBF29CE484222325ULL;
    for (int e = 0; e < k.edge_count(); ++e) {
        detail::fnv(x, std::to_string(k.edges()[e][0]) + "," + std::to_string(k.edges()[e][1]) + ":" +
                           detail::g17(h.edge_lengths[e]) + ";");
    }
    return detail::hex(x);
}

inline std::string system_hash(const FlatLocalSystem& f)
{
    std::uint64_t x = 0xCBF29CE484222325ULL;
    detail::fnv(x, std::to_string(f.fiber_dim) + ";");
    for (const Matrix& p : f.transports) {
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            detail::fnv(x, detail::g17(p.data()[i]) + ",");
        }
        detail::fnv(x, ";");
    }
    return detail::hex(x);
}

/// Star on the span of given parabolic class representatives.
inline ParabolicStarReport star_on_classes(const MetricComplex& mc, const Matrix& classes)
{
    const Tolerance& tol = mc.tolerance();
    const auto& c = mc.cob();
    ParabolicStarReport out;
    out.fiber_dim = mc.fiber_dim();
    out.dim_h1_par = static_cast<int>(classes.cols());
    out.class_basis = classes;
    out.u_basis = hodge::harmonic_projection(mc, classes);
    out.m_u = symmetric_part(out.u_basis.transpose() * mc.m1() * out.u_basis);
    out.omega_u = twisted::parabolic_omega(mc.complex(), mc.system(), c, classes, tol);
    const compat::CompatibleStructureResult cs = compat::compatible_complex_structure(out.m_u, out.omega_u, tol);
    out.g = cs.g;
    out.r = cs.r;
    out.j_par = cs.j_u;
    out.residuals["jpar_sq"] = cs.residuals.at("j_sq");
    out.residuals["omega_invariance"] = cs.residuals.at("omega_invariance");
    out.residuals["taming_min_eigenvalue"] = cs.residuals.at("taming_min_eigenvalue");
    out.residuals["condition_sigma_min"] = cs.residuals.at("condition_sigma_min");
    out.residuals["isometry"] = cs.residuals.at("isometry");
    out.residuals["g_skew"] = cs.residuals.at("g_skew");
    out.residuals["taming_identity"] = cs.residuals.at("taming_identity");
    out.residuals["lift_residual"] = twisted::relative_lift(c, classes, tol).residual;
    out.residuals["closedness"] = twisted::closedness_residual(c, out.u_basis);
    out.residuals["coclosedness"] =
        out.u_basis.cols() == 0 ? 0.0
                                : max_abs(c.d0.transpose() * mc.m1() * out.u_basis) / std::max(max_abs(mc.m1()), 1e-300);
    out.residuals["p38_residual"] = 0.0;
    return out;
}

inline ParabolicStarReport parabolic_star(const SurfaceComplex& k, const PLMetric& h, const FlatLocalSystem& f,
                                          const Tolerance& tol = {}, const StarOptions& opt = {})
{
    tol.validate();
    const MetricComplex mc = MetricComplex::build(k, h, f, tol);
    const twisted::ParabolicCohomology par = twisted::restriction_and_parabolic(mc.cob(), tol);
    ParabolicStarReport out = star_on_classes(mc, par.parabolic);
    out.mesh_id = opt.mesh_id;
    out.metric_hash = metric_hash(k, h);
    out.system_hash = system_hash(f);
    out.dim_h1 = par.h1.dim;
    out.dim_h1_rel = par.h1_rel.dim;
    out.dim_h1_bd = par.h1_bd.dim;
    out.exactness_check = par.exactness_check;
    if (opt.ambient_residual) {
        out.residuals["p38_residual"] = hodge::galerkin_diagnostics(mc).projection_commutator;
    }
    return out;
}

/// p_U J_par p_U as an operator on edge cochains: U J M_U^{-1} U^T M1.
/// Basis-free, so reports built on different class bases compare directly.
inline Matrix ambient_operator(const ParabolicStarReport& r, const Matrix& m1)
{
    if (r.dim_h1_par == 0) {
        return Matrix::Zero(m1.rows(), m1.cols());
    }
    return r.u_basis * r.j_par * r.m_u.llt().solve(r.u_basis.transpose() * m1);
}

// ---------------------------------------------------------------------------
// Connected components

struct ComponentData {
    SurfaceComplex complex;
    PLMetric metric;
    FlatLocalSystem system;
    std::vector<int> vertices; // local -> global
    std::vector<int> edges;    // local -> global
};

inline ComponentData extract_component(const SurfaceComplex& k, const PLMetric& h, const FlatLocalSystem& f,
                                       int component)
{
    ComponentData out;
    std::vector<int> local(k.vertex_count(), -1);
    for (int v = 0; v < k.vertex_count(); ++v) {
        if (k.vertex_component()[v] == component) {
            local[v] = static_cast<int>(out.vertices.size());
            out.vertices.push_back(v);
        }
    }
    std::vector<surface::Triangle> tris;
    for (const auto& t : k.triangles()) {
        if (local[t[0]] >= 0) {
            tris.push_back({local[t[0]], local[t[1]], local[t[2]]});
        }
    }
    out.complex = SurfaceComplex::build(static_cast<int>(out.vertices.size()), std::move(tris));
    out.system.fiber_dim = f.fiber_dim;
    for (const auto& e : out.complex.edges()) {
        const int a = out.vertices[e[0]];
        const int b = out.vertices[e[1]];
        const int ge = k.edge_index(a, b);
        out.edges.push_back(ge);
        out.metric.edge_lengths.push_back(h.edge_lengths[ge]);
        out.system.transports.push_back(f.transport(k, a, b));
    }
    out.system.flat_residual = localsys::flatness_residual(out.complex, out.system);
    return out;
}

struct DirectSumCheck {
    ParabolicStarReport whole;
    std::vector<ParabolicStarReport> components;
    double residual = 0.0; // ambient operators of the whole vs the direct sum
    bool ok = false;
};

inline DirectSumCheck disconnected_split(const SurfaceComplex& k, const PLMetric& h, const FlatLocalSystem& f,
                                         const Tolerance& tol = {})
{
    DirectSumCheck out;
    StarOptions opt;
    opt.ambient_residual = false;
    out.whole = parabolic_star(k, h, f, tol, opt);
    const MetricComplex mc = MetricComplex::build(k, h, f, tol);
    const int n = f.fiber_dim;
    Matrix sum = Matrix::Zero(mc.m1().rows(), mc.m1().cols());
    for (int comp = 0; comp < k.component_count(); ++comp) {
        const ComponentData cd = extract_component(k, h, f, comp);
        ParabolicStarReport sub = parabolic_star(cd.complex, cd.metric, cd.system, tol, opt);
        const MetricComplex sub_mc = MetricComplex::build(cd.complex, cd.metric, cd.system, tol);
        const Matrix a = ambient_operator(sub, sub_mc.m1());
        const std::vector<int> dofs = twisted::expand_dofs(cd.edges, n);
        sum(dofs, dofs) = a;
        out.components.push_back(std::move(sub));
    }
    out.whole.component_split = out.components;
    out.residual = max_abs(ambient_operator(out.whole, mc.m1()) - sum);
    const double scale = std::max(1.0, max_abs(sum));
    out.ok = out.residual < tol.residual_tol * scale && out.whole.compatible(tol);
    for (const auto& c : out.components) {
        out.ok = out.ok && c.compatible(tol);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ambient route

struct AmbientRouteReport {
    bool kernel_is_complement = false; // ker P_N is the complement of T in H_D
    bool rank_equal = false;   // dim U = dim T
    double kernel_residual = 0.0;
    int rank_p_n = 0;
    int rank_p_d = 0;
    int dim_h_n = 0;
    int dim_h_d = 0;
    double u_span_angle = 0.0;  // im P_N versus the parabolic harmonic reps
    bool u_span_agrees = false;
    double angle_jh_u_t = 0.0;  // J_h(U) versus T
    double p38_residual = 0.0;
    double jh_sq_harmonic = 0.0;
    double jh_skew = 0.0;
};

inline AmbientRouteReport ambient_route_diagnostic(const SurfaceComplex& k, const PLMetric& h,
                                                   const FlatLocalSystem& f, const Tolerance& tol = {})
{
    const MetricComplex mc = MetricComplex::build(k, h, f, tol);
    const Matrix& m1 = mc.m1();
    const hodge::HarmonicSpaces hs = hodge::harmonic_spaces(mc);
    const compat::SubspaceTransfer st = compat::subspace_transfer(m1, hs.h_n, hs.h_d, tol);
    const twisted::ParabolicCohomology par = twisted::restriction_and_parabolic(mc.cob(), tol);
    const Matrix u_par = hodge::harmonic_projection(mc, par.parabolic);
    const hodge::GalerkinDiagnostics gd = hodge::galerkin_diagnostics(mc);

    AmbientRouteReport out;
    out.kernel_is_complement = st.kernel_check;
    out.rank_equal = st.rank_equal;
    out.kernel_residual = st.kernel_residual;
    out.rank_p_n = static_cast<int>(st.rank_p_n);
    out.rank_p_d = static_cast<int>(st.rank_p_d);
    out.dim_h_n = hs.dim_n;
    out.dim_h_d = hs.dim_d;
    out.u_span_angle = compat::detail::span_distance(st.u_basis, u_par, m1, tol);
    out.u_span_agrees = st.u_basis.cols() == u_par.cols() && out.u_span_angle < 1e-8;
    if (st.u_basis.cols() > 0 && st.u_basis.cols() == st.t_basis.cols()) {
        const Matrix jh = hodge::galerkin_star(mc);
        out.angle_jh_u_t = compat::detail::span_distance(jh * st.u_basis, st.t_basis, m1, tol);
    }
    out.p38_residual = gd.projection_commutator;
    out.jh_sq_harmonic = gd.j_sq_harmonic;
    out.jh_skew = gd.skew_residual;
    return out;
}

// ---------------------------------------------------------------------------
// Naturality

struct DeterminismReport {
    double relabel_operator_residual = 0.0; // Q A Q^T vs A'
    double relabel_conjugacy_residual = 0.0; // J' T - T J
    double eigenvalue_residual = 0.0;        // eigenvalues of J' vs +-i
    double reversal_omega_residual = 0.0;    // Omega_rev + Omega
    double reversal_j_residual = 0.0;        // J_rev + J
    bool ok = false;
};

/// Largest distance of the eigenvalues of j from +-i, plus the imbalance
/// between the two multiplicities.
inline double eigenvalue_defect(const Matrix& j)
{
    if (j.rows() == 0) {
        return 0.0;
    }
    const Eigen::EigenSolver<Matrix> es(j, false);
    double d = 0.0;
    int plus = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const std::complex<double> z = es.eigenvalues()[i];
        const double dp = std::abs(z - std::complex<double>(0.0, 1.0));
        const double dm = std::abs(z + std::complex<double>(0.0, 1.0));
        d = std::max(d, std::min(dp, dm));
        plus += dp < dm ? 1 : 0;
    }
    return 2 * plus == j.rows() ? d : std::max(d, 1.0);
}

/// Cochain map from the edge coordinates of k to those of relabel(k, perm).
inline Matrix relabel_cochain_map(const SurfaceComplex& k, const FlatLocalSystem& f, const SurfaceComplex& k2,
                                  const std::vector<int>& perm)
{
    const int n = f.fiber_dim;
    Matrix q = Matrix::Zero(n * k.edge_count(), n * k.edge_count());
    for (int e = 0; e < k.edge_count(); ++e) {
        const auto [a, b] = k.edges()[e];
        const int e2 = k2.edge_index(perm[a], perm[b]);
        if (perm[a] < perm[b]) {
            q.block(e2 * n, e * n, n, n).setIdentity();
        } else {
            // value now lives at the old head: u(b->a) = -P_{ba} u(a->b)
            q.block(e2 * n, e * n, n, n) = -f.transport(k, b, a);
        }
    }
    return q;
}

inline FlatLocalSystem relabel_system(const SurfaceComplex& k, const FlatLocalSystem& f, const SurfaceComplex& k2,
                                      const std::vector<int>& perm)
{
    std::vector<int> inv(perm.size());
    for (std::size_t v = 0; v < perm.size(); ++v) {
        inv[perm[v]] = static_cast<int>(v);
    }
    FlatLocalSystem out;
    out.fiber_dim = f.fiber_dim;
    for (const auto& e : k2.edges()) {
        out.transports.push_back(f.transport(k, inv[e[0]], inv[e[1]]));
    }
    out.flat_residual = localsys::flatness_residual(k2, out);
    return out;
}

inline DeterminismReport determinism_check(const SurfaceComplex& k, const PLMetric& h, const FlatLocalSystem& f,
                                           const std::vector<int>& perm, const Tolerance& tol = {})
{
    DeterminismReport out;
    StarOptions opt;
    opt.ambient_residual = false;
    const MetricComplex mc = MetricComplex::build(k, h, f, tol);
    const twisted::ParabolicCohomology par = twisted::restriction_and_parabolic(mc.cob(), tol);
    const ParabolicStarReport base = star_on_classes(mc, par.parabolic);

    const SurfaceComplex k2 = surface::relabel(k, perm);
    const PLMetric h2 = surface::transfer_metric(k, h, k2, perm);
    const FlatLocalSystem f2 = relabel_system(k, f, k2, perm);
    const ParabolicStarReport other = parabolic_star(k2, h2, f2, tol, opt);
    const MetricComplex mc2 = MetricComplex::build(k2, h2, f2, tol);
    const Matrix q = relabel_cochain_map(k, f, k2, perm);
    if (other.dim_h1_par != base.dim_h1_par) {
        out.relabel_operator_residual = out.relabel_conjugacy_residual = 1.0;
    } else if (base.dim_h1_par > 0) {
        out.relabel_operator_residual =
            max_abs(q * ambient_operator(base, mc.m1()) * q.transpose() - ambient_operator(other, mc2.m1()));
        const Matrix t = other.m_u.llt().solve(other.u_basis.transpose() * mc2.m1() * q * base.u_basis);
        out.relabel_conjugacy_residual = max_abs(other.j_par * t - t * base.j_par) / std::max(max_abs(t), 1e-300);
        out.eigenvalue_residual = eigenvalue_defect(other.j_par);
    }

    // reversal: same edges and transports, same class representatives
    const SurfaceComplex kr = surface::reverse_orientation(k);
    const MetricComplex mcr = MetricComplex::build(kr, h, f, tol);
    if (base.dim_h1_par > 0) {
        const ParabolicStarReport rev = star_on_classes(mcr, par.parabolic);
        const double os = std::max(max_abs(base.omega_u), 1e-300);
        out.reversal_omega_residual = max_abs(rev.omega_u + base.omega_u) / os;
        out.reversal_j_residual = max_abs(rev.j_par + base.j_par);
    }
    out.ok = out.relabel_operator_residual < tol.residual_tol && out.relabel_conjugacy_residual < tol.residual_tol &&
             out.eigenvalue_residual < 1e-8 && out.reversal_omega_residual < tol.residual_tol &&
             out.reversal_j_residual < tol.residual_tol;
    return out;
}

} // namespace parhodge::parastar
