#pragma once

// Points of the moduli space of flat SU(2) connections on a surface with
// prescribed boundary classes, and the structures on the tangent space
// H^1_par(S; g_phi) at such a point.

#include "parhodge/parastar.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

namespace parhodge::moduli {

using localsys::Quaternion;

struct ModuliPoint {
    int genus = 0;
    int boundary_count = 0;
    int subdiv = 1;
    std::vector<double> boundary_angles; // rotation angles of the adjoint boundary images
    std::vector<Quaternion> phi_images;  // a_1, b_1, ..., a_g, b_g, c_1, ..., c_k
    std::uint64_t seed = 0;
    int attempts = 0;
};

namespace detail {

constexpr double pi = 3.14159265358979323846;

inline Quaternion random_unit(std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Quaternion q{normal(rng), normal(rng), normal(rng), normal(rng)};
    return q.normalized();
}

inline Eigen::Vector3d random_direction(std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    return Eigen::Vector3d(normal(rng), normal(rng), normal(rng)).normalized();
}

inline Quaternion with_axis(double theta, const Eigen::Vector3d& axis)
{
    return Quaternion::from_axis_angle(axis, theta);
}

inline Quaternion inverse(const Quaternion& q) { return q.conjugate(); }

// Unit rotation quaternion carrying unit p to unit q.
inline Quaternion shortest_arc(const Eigen::Vector3d& p, const Eigen::Vector3d& q)
{
    const double c = p.dot(q);
    if (c < -1.0 + 1e-12) {
        Eigen::Vector3d axis = p.cross(Eigen::Vector3d::UnitX());
        if (axis.norm() < 1e-6) {
            axis = p.cross(Eigen::Vector3d::UnitY());
        }
        return Quaternion::from_axis_angle(axis, pi);
    }
    const Eigen::Vector3d x = p.cross(q);
    return Quaternion{1.0 + c, x.x(), x.y(), x.z()}.normalized();
}

// A unit v with z.v = s, or nothing when |s| > |z|.
inline bool axis_with_projection(const Eigen::Vector3d& z, double s, std::mt19937_64& rng, Eigen::Vector3d& v)
{
    const double zn = z.norm();
    if (zn < 1e-12 || std::abs(s) > zn) {
        return false;
    }
    const Eigen::Vector3d u = z / zn;
    Eigen::Vector3d perp = random_direction(rng);
    perp -= perp.dot(u) * u;
    if (perp.norm() < 1e-8) {
        return false;
    }
    perp.normalize();
    const double t = s / zn;
    v = t * u + std::sqrt(std::max(0.0, 1.0 - t * t)) * perp;
    return true;
}

// Unit axis v such that z * (cos(beta/2) + sin(beta/2) v) has real part w.
inline bool solve_axis(const Quaternion& z, double beta, double w, std::mt19937_64& rng, Eigen::Vector3d& v)
{
    const double sb = std::sin(beta / 2.0);
    if (std::abs(sb) < 1e-12) {
        return false;
    }
    return axis_with_projection(z.vec(), (z.w * std::cos(beta / 2.0) - w) / sb, rng, v);
}

// SO(3) rotation angle in [0, pi] of the class of angle theta in (0, 2 pi).
inline double folded(double theta) { return theta <= pi ? theta : 2.0 * pi - theta; }

inline double adjoint_angle(const Quaternion& q) { return localsys::rotation_angle(localsys::su2_adjoint(q.normalized())); }

inline Quaternion product(const std::vector<Quaternion>& xs)
{
    Quaternion r;
    for (const auto& x : xs) {
        r = r * x;
    }
    return r;
}

inline Quaternion commutator(const Quaternion& a, const Quaternion& b) { return a * b * inverse(a) * inverse(b); }

} // namespace detail

inline void validate_surface(int g, int k)
{
    if (g < 0 || k < 0 || !(2 * g - 2 + k > 0 || (g == 1 && k == 0))) {
        std::ostringstream os;
        os << "surface (g=" << g << ", k=" << k << ") needs 2g - 2 + k > 0 or (g, k) = (1, 0)";
        fail(ErrorKind::InvalidParameter, os.str());
    }
}

inline std::vector<Matrix> adjoint_images(const ModuliPoint& p, const Tolerance& tol = {})
{
    std::vector<Matrix> out;
    for (const auto& q : p.phi_images) {
        out.push_back(localsys::su2_adjoint(q, tol));
    }
    return out;
}

/// Relation residual and largest boundary angle mismatch after the adjoint map.
inline std::pair<double, double> point_residuals(const ModuliPoint& p, const Tolerance& tol = {})
{
    const auto loops = surface::genus_k(p.genus, p.boundary_count, p.subdiv).loops;
    const auto images = adjoint_images(p, tol);
    const double rel = max_abs(localsys::relation_product(loops, images, 3) - Matrix::Identity(3, 3));
    double ang = 0.0;
    for (int j = 0; j < p.boundary_count; ++j) {
        ang = std::max(ang, std::abs(localsys::rotation_angle(images[2 * p.genus + j]) -
                                     detail::folded(p.boundary_angles[j])));
    }
    return {rel, ang};
}

/// The trivial representation.
inline ModuliPoint trivial_point(int g, int k, int subdiv = 1)
{
    validate_surface(g, k);
    ModuliPoint p;
    p.genus = g;
    p.boundary_count = k;
    p.subdiv = subdiv;
    p.phi_images.assign(2 * g + k, Quaternion{});
    p.boundary_angles.assign(k, 0.0);
    return p;
}

/// Random representation with boundary images in the given classes. The
/// last free element is placed by solving for its axis, so that the
/// element forced by the relation lands in the last class.
inline ModuliPoint sample_point(int g, int k, const std::vector<double>& angles, std::uint64_t seed,
                                int subdiv = 1, const Tolerance& tol = {})
{
    validate_surface(g, k);
    if (static_cast<int>(angles.size()) != k) {
        std::ostringstream os;
        os << "expected " << k << " boundary angles, got " << angles.size();
        fail(ErrorKind::InvalidAngles, os.str());
    }
    for (double a : angles) {
        if (!(a > 0.0 && a < 2.0 * detail::pi)) {
            std::ostringstream os;
            os << "boundary angle " << a << " is outside (0, 2 pi)";
            fail(ErrorKind::InvalidAngles, os.str());
        }
    }
    ModuliPoint p;
    p.genus = g;
    p.boundary_count = k;
    p.subdiv = subdiv;
    p.boundary_angles = angles;
    p.seed = seed;
    std::mt19937_64 rng(seed);

    constexpr int max_attempts = 1000;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        std::vector<Quaternion> ab;
        for (int i = 0; i < 2 * g; ++i) {
            ab.push_back(detail::random_unit(rng));
        }
        std::vector<Quaternion> cs;
        for (int j = 0; j + 1 < k; ++j) {
            cs.push_back(detail::with_axis(angles[j], detail::random_direction(rng)));
        }
        bool ok = true;
        if (k == 0) {
            if (g == 1) {
                // closed torus: commuting pair
                const Eigen::Vector3d axis = ab[0].vec().norm() > 1e-12 ? Eigen::Vector3d(ab[0].vec())
                                                                         : detail::random_direction(rng);
                std::uniform_real_distribution<double> angle(0.0, 2.0 * detail::pi);
                ab[1] = detail::with_axis(angle(rng), axis);
            } else {
                // [a_g, b_g] must equal the inverse of the other commutators
                std::vector<Quaternion> prefix;
                for (int i = 0; i + 1 < g; ++i) {
                    prefix.push_back(detail::commutator(ab[2 * i], ab[2 * i + 1]));
                }
                const Quaternion target = detail::inverse(detail::product(prefix));
                Quaternion& a = ab[2 * g - 2];
                Quaternion& b = ab[2 * g - 1];
                const double alpha = 2.0 * std::acos(std::clamp(a.w, -1.0, 1.0));
                const Eigen::Vector3d u = a.vec().normalized();
                Eigen::Vector3d v;
                // b a^-1 b^-1 has angle alpha and axis b(-u)
                if (!detail::solve_axis(a, alpha, target.w, rng, v)) {
                    ok = false;
                } else {
                    const Quaternion spin = Quaternion::from_axis_angle(-u, std::uniform_real_distribution<double>(
                                                                                0.0, 2.0 * detail::pi)(rng));
                    b = detail::shortest_arc(-u, v) * spin;
                    const Quaternion x = detail::commutator(a, b);
                    if (x.vec().norm() < 1e-9 || target.vec().norm() < 1e-9) {
                        ok = ok && std::abs(x.w - target.w) < 1e-9;
                    } else {
                        // conjugate the pair so that the commutator becomes the target
                        const Quaternion h = detail::shortest_arc(x.vec().normalized(), target.vec().normalized());
                        a = h * a * detail::inverse(h);
                        b = h * b * detail::inverse(h);
                    }
                }
            }
        } else {
            const double want = std::cos(angles[k - 1] / 2.0);
            std::uniform_int_distribution<int> coin(0, 1);
            const double sign = coin(rng) == 0 ? 1.0 : -1.0;
            Eigen::Vector3d v;
            if (k >= 2) {
                std::vector<Quaternion> prefix;
                for (int i = 0; i < g; ++i) {
                    prefix.push_back(detail::commutator(ab[2 * i], ab[2 * i + 1]));
                }
                for (int j = 0; j + 2 < k; ++j) {
                    prefix.push_back(cs[j]);
                }
                const Quaternion z = detail::product(prefix);
                const double beta = angles[k - 2];
                if (detail::solve_axis(z, beta, sign * want, rng, v) ||
                    detail::solve_axis(z, beta, -sign * want, rng, v)) {
                    cs[k - 2] = detail::with_axis(beta, v);
                } else {
                    ok = false;
                }
            } else if (g >= 1) {
                std::vector<Quaternion> prefix;
                for (int i = 0; i + 1 < g; ++i) {
                    prefix.push_back(detail::commutator(ab[2 * i], ab[2 * i + 1]));
                }
                Quaternion& a = ab[2 * g - 2];
                Quaternion& b = ab[2 * g - 1];
                prefix.push_back(a);
                const Quaternion z = detail::product(prefix);
                const double alpha = 2.0 * std::acos(std::clamp(a.w, -1.0, 1.0));
                const Eigen::Vector3d u = a.vec().normalized();
                if (detail::solve_axis(z, alpha, sign * want, rng, v) ||
                    detail::solve_axis(z, alpha, -sign * want, rng, v)) {
                    const Quaternion spin = Quaternion::from_axis_angle(
                        -u, std::uniform_real_distribution<double>(0.0, 2.0 * detail::pi)(rng));
                    b = detail::shortest_arc(-u, v) * spin;
                } else {
                    ok = false;
                }
            }
            if (ok) {
                std::vector<Quaternion> all;
                for (int i = 0; i < g; ++i) {
                    all.push_back(detail::commutator(ab[2 * i], ab[2 * i + 1]));
                }
                all.insert(all.end(), cs.begin(), cs.end());
                cs.push_back(detail::inverse(detail::product(all)).normalized());
            }
        }
        if (!ok) {
            continue;
        }
        p.phi_images = ab;
        p.phi_images.insert(p.phi_images.end(), cs.begin(), cs.end());
        for (auto& q : p.phi_images) {
            q = q.normalized();
        }
        p.attempts = attempt;
        const auto [rel, ang] = point_residuals(p, tol);
        if (rel < tol.residual_tol && ang < 1e-6) {
            return p;
        }
    }
    std::ostringstream os;
    os << "no representation found in the prescribed classes after " << max_attempts << " attempts";
    fail(ErrorKind::SamplingFailed, os.str());
}

/// Unit quaternions for the generators of `loops` satisfying the surface
/// relation: free generators are random, the last boundary generator is
/// forced, and closed tori get a commuting pair.
inline std::vector<Quaternion> random_representation(const surface::GeneratorLoops& loops, std::uint64_t seed)
{
    const int g = loops.genus;
    const int k = loops.boundary_count;
    if (k == 0 && g >= 2) {
        return sample_point(g, 0, {}, seed).phi_images;
    }
    std::mt19937_64 rng(seed);
    std::vector<Quaternion> out;
    for (int i = 0; i < loops.generator_count(); ++i) {
        out.push_back(detail::random_unit(rng));
    }
    if (k == 0 && g == 1) {
        std::uniform_real_distribution<double> angle(0.0, 2.0 * detail::pi);
        out[1] = detail::with_axis(angle(rng), out[0].vec());
        return out;
    }
    std::vector<Quaternion> all;
    for (int i = 0; i < g; ++i) {
        all.push_back(detail::commutator(out[2 * i], out[2 * i + 1]));
    }
    for (int j = 0; j + 1 < k; ++j) {
        all.push_back(out[2 * g + j]);
    }
    out.back() = detail::inverse(detail::product(all)).normalized();
    return out;
}

struct PointModel {
    surface::GeneratedSurface surface;
    localsys::FlatLocalSystem system;
};

inline PointModel build_model(const ModuliPoint& p, const Tolerance& tol = {})
{
    PointModel m;
    m.surface = surface::genus_k(p.genus, p.boundary_count, p.subdiv);
    m.system = localsys::from_representation(m.surface.complex, m.surface.loops, adjoint_images(p, tol), tol);
    return m;
}

struct TangentSpace {
    int dim_h0 = 0;
    int dim_h1 = 0;
    int dim_h1_par = 0;       // kernel of the restriction
    int dim_h1_par_image = 0; // rank of H^1_rel -> H^1
    int expected_dim = 0;     // 6g - 6 + 2k, reported only
    int omega_rank = 0;
    bool reducible = false;
    double relation_residual = 0.0;
    double boundary_angle_residual = 0.0;
};

inline TangentSpace tangent_space(const ModuliPoint& p, const Tolerance& tol = {})
{
    const PointModel m = build_model(p, tol);
    const twisted::Coboundaries c = twisted::coboundaries(m.surface.complex, m.system);
    const twisted::ParabolicCohomology par = twisted::restriction_and_parabolic(c, tol);
    TangentSpace out;
    out.dim_h0 = twisted::cohomology(c, 0, twisted::Flavor::Absolute, tol).dim;
    out.dim_h1 = par.h1.dim;
    out.dim_h1_par = par.dim;
    out.dim_h1_par_image = static_cast<int>(numerical_rank(par.i_star, tol, RankCutoff::Absolute));
    out.expected_dim = 6 * p.genus - 6 + 2 * p.boundary_count;
    if (par.dim > 0) {
        const Matrix omega = twisted::parabolic_omega(m.surface.complex, m.system, c, par.parabolic, tol);
        out.omega_rank = static_cast<int>(numerical_rank(omega, tol, RankCutoff::Absolute));
    }
    out.reducible = out.dim_h0 > 0;
    std::tie(out.relation_residual, out.boundary_angle_residual) = point_residuals(p, tol);
    return out;
}

struct ModuliStructure {
    TangentSpace tangent;
    parastar::ParabolicStarReport star;
    Matrix goldman_omega; // -Omega_U
    Matrix acs;           // -J_par
    std::map<std::string, double> residuals;
};

/// The almost complex structure -J_par compatible with the Goldman form
/// -omega on H^1_par. Uses the surface's own metric unless one is given.
inline ModuliStructure moduli_acs(const ModuliPoint& p, const surface::PLMetric* metric = nullptr,
                                  const Tolerance& tol = {})
{
    ModuliStructure out;
    out.tangent = tangent_space(p, tol);
    if (out.tangent.reducible) {
        std::ostringstream os;
        os << "representation is reducible (dim H^0 = " << out.tangent.dim_h0 << "); the point may be singular";
        fail(ErrorKind::SingularPoint, os.str());
    }
    const PointModel m = build_model(p, tol);
    parastar::StarOptions opt;
    opt.ambient_residual = false;
    std::ostringstream id;
    id << "genus_k(" << p.genus << "," << p.boundary_count << "," << p.subdiv << ")";
    opt.mesh_id = id.str();
    out.star = parastar::parabolic_star(m.surface.complex, metric ? *metric : m.surface.metric, m.system, tol, opt);
    out.goldman_omega = -out.star.omega_u;
    out.acs = -out.star.j_par;
    const Eigen::Index n = out.acs.rows();
    if (n == 0) {
        out.residuals = {{"acs_sq", 0.0}, {"goldman_invariance", 0.0}, {"taming_min_eigenvalue", 0.0}};
        return out;
    }
    const Matrix& j = out.acs;
    const Matrix& w = out.goldman_omega;
    out.residuals["acs_sq"] = max_abs(j * j + Matrix::Identity(n, n));
    out.residuals["goldman_invariance"] = max_abs(j.transpose() * w * j - w) / std::max(max_abs(w), 1e-300);
    out.residuals["taming_min_eigenvalue"] = sym_eig(symmetric_part(w * j), tol).values[n - 1];
    return out;
}

} // namespace parhodge::moduli
