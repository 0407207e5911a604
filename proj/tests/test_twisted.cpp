#include "parhodge/twisted.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace parhodge;
using namespace parhodge::twisted;
namespace ts = parhodge::testing;

namespace {

struct Case {
    std::string label;
    surface::GeneratedSurface s;
    localsys::FlatLocalSystem f;
};

std::vector<Case> cases(int random_per_surface, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Case> out;
    for (const auto& s : {surface::torus(4), surface::annulus(6, 2), surface::disk(4), surface::genus_k(1, 1, 1),
                          surface::genus_k(0, 3, 1)}) {
        out.push_back({s.id + " trivial R", s, localsys::trivial_system(s.complex, 1)});
        out.push_back({s.id + " trivial R3", s, localsys::trivial_system(s.complex, 3)});
        for (int r = 0; r < random_per_surface; ++r) {
            out.push_back({s.id + " random SO(3) #" + std::to_string(r), s, ts::random_flat_so3(rng, s)});
        }
    }
    return out;
}

int wrapped(int d, int m)
{
    d = ((d % m) + m) % m;
    return d > m / 2 ? d - m : d;
}

} // namespace

TEST(Coboundaries, SquareToZero)
{
    for (const auto& c : cases(2, 1)) {
        const auto d = coboundaries(c.s.complex, c.f);
        EXPECT_LT(d.d1d0_residual, 1e-12) << c.label;
        EXPECT_LT(max_abs(d.d1_rel * d.d0(d.interior_edge_dofs, d.interior_vertex_dofs)), 1e-12) << c.label;
    }
}

TEST(Coboundaries, ExplicitFormula)
{
    // (d1 u)(t) = P_{v0v1} u(v1v2) - u(v0v2) + u(v0v1), values in local orientation
    std::mt19937_64 rng(8);
    const auto s = surface::genus_k(1, 1, 1);
    const auto f = ts::random_flat_so3(rng, s);
    const auto& k = s.complex;
    const auto d = coboundaries(k, f);
    const Vector u = ts::random_matrix(rng, 3 * k.edge_count(), 1).col(0);
    const Vector du = d.d1 * u;
    auto local_value = [&](int from, int to) -> Vector {
        const auto ref = k.oriented_edge(from, to);
        const Vector canonical = u.segment(3 * ref.index, 3);
        if (ref.sign > 0) {
            return canonical;
        }
        return -f.transport(k, from, to) * canonical;
    };
    for (int t = 0; t < k.triangle_count(); ++t) {
        const auto& tri = k.triangles()[t];
        const Vector expected = f.transport(k, tri[0], tri[1]) * local_value(tri[1], tri[2]) -
                                local_value(tri[0], tri[2]) + local_value(tri[0], tri[1]);
        EXPECT_LT((du.segment(3 * t, 3) - expected).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Cohomology, TrivialCoefficients)
{
    const auto disk = surface::disk(5);
    const auto dd = coboundaries(disk.complex, localsys::trivial_system(disk.complex, 1));
    EXPECT_EQ(numerical_rank(dd.d0), disk.complex.vertex_count() - 1);

    const auto torus = surface::torus(4);
    const auto dt = coboundaries(torus.complex, localsys::trivial_system(torus.complex, 1));
    EXPECT_EQ(cohomology(dt, 0, Flavor::Absolute).dim, 1);
    EXPECT_EQ(cohomology(dt, 1, Flavor::Absolute).dim, 2);
    EXPECT_EQ(cohomology(dt, 2, Flavor::Absolute).dim, 1);
    EXPECT_EQ(numerical_rank(dt.d1), torus.complex.edge_count() - numerical_rank(dt.d0) - 2);

    const auto ann = surface::annulus(6, 2);
    const auto da = coboundaries(ann.complex, localsys::trivial_system(ann.complex, 1));
    EXPECT_EQ(cohomology(da, 0, Flavor::Absolute).dim, 1);
    EXPECT_EQ(cohomology(da, 1, Flavor::Absolute).dim, 1);
    EXPECT_EQ(cohomology(da, 2, Flavor::Absolute).dim, 0);
    EXPECT_EQ(cohomology(da, 0, Flavor::Relative).dim, 0);
    EXPECT_EQ(cohomology(da, 1, Flavor::Relative).dim, 1);
    EXPECT_EQ(cohomology(da, 2, Flavor::Relative).dim, 1);
    EXPECT_EQ(cohomology(da, 0, Flavor::Boundary).dim, 2);
    EXPECT_EQ(cohomology(da, 1, Flavor::Boundary).dim, 2);
}

TEST(Cohomology, RepresentativesAreCocyclesOrthogonalToCoboundaries)
{
    for (const auto& c : cases(1, 2)) {
        const auto d = coboundaries(c.s.complex, c.f);
        const auto h1 = cohomology(d, 1, Flavor::Absolute);
        EXPECT_LT(h1.dim == 0 ? 0.0 : max_abs(d.d1 * h1.reps), 1e-10) << c.label;
        EXPECT_LT(h1.dim == 0 ? 0.0 : max_abs(d.d0.transpose() * h1.reps), 1e-10) << c.label;
        const auto h1r = cohomology(d, 1, Flavor::Relative);
        if (h1r.dim > 0) {
            EXPECT_LT(max_abs(d.d1 * h1r.reps), 1e-10) << c.label;
            for (int i : d.boundary_edge_dofs) {
                EXPECT_EQ(h1r.reps.row(i).cwiseAbs().maxCoeff(), 0.0);
            }
        }
    }
}

TEST(Cohomology, EulerCharacteristicAndDuality)
{
    for (const auto& c : cases(4, 3)) {
        const auto d = coboundaries(c.s.complex, c.f);
        const int n = c.f.fiber_dim;
        const int chi = c.s.complex.euler_characteristic();
        EXPECT_EQ(euler_characteristic(d), n * chi) << c.label;
        int rel = 0;
        for (int p = 0; p <= 2; ++p) {
            const int abs_dim = cohomology(d, p, Flavor::Absolute).dim;
            const int rel_dual = cohomology(d, 2 - p, Flavor::Relative).dim;
            EXPECT_EQ(abs_dim, rel_dual) << c.label << " degree " << p;
            rel += (p % 2 == 0 ? 1 : -1) * cohomology(d, p, Flavor::Relative).dim;
        }
        EXPECT_EQ(rel, n * chi) << c.label;
    }
}

TEST(Parabolic, Dimensions)
{
    const auto ann = surface::annulus(6, 2);
    const auto pa = restriction_and_parabolic(coboundaries(ann.complex, localsys::trivial_system(ann.complex, 1)));
    EXPECT_EQ(pa.dim, 0);
    EXPECT_TRUE(pa.exactness_check);

    const auto torus = surface::torus(4);
    const auto pt = restriction_and_parabolic(coboundaries(torus.complex, localsys::trivial_system(torus.complex, 1)));
    EXPECT_EQ(pt.dim, 2);
    EXPECT_EQ(pt.h1.dim, 2);
    EXPECT_TRUE(pt.exactness_check);

    // generic irreducible SO(3) on the one-holed torus
    std::mt19937_64 rng(21);
    const auto g = surface::genus_k(1, 1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = ts::random_flat_so3(rng, g);
        const auto d = coboundaries(g.complex, f);
        EXPECT_EQ(cohomology(d, 0, Flavor::Absolute).dim, 0);
        const auto p = restriction_and_parabolic(d);
        EXPECT_EQ(p.h1.dim, 3);
        EXPECT_EQ(p.h1_bd.dim, 1);
        EXPECT_EQ(p.dim, 2);
        EXPECT_TRUE(p.exactness_check) << p.exactness_residual;
        // brute force: classes whose boundary restriction is a boundary coboundary
        const Matrix restricted = restrict_rows(p.h1.reps, d.boundary_edge_dofs);
        Matrix stacked(restricted.rows(), restricted.cols() + d.d0_bd.cols());
        stacked << restricted, d.d0_bd;
        const int kernel = static_cast<int>(stacked.cols() - numerical_rank(stacked));
        const int bd_kernel = static_cast<int>(d.d0_bd.cols() - numerical_rank(d.d0_bd));
        EXPECT_EQ(kernel - bd_kernel, 2);
    }
}

TEST(Parabolic, EvenAndExactEverywhere)
{
    for (const auto& c : cases(3, 4)) {
        const auto d = coboundaries(c.s.complex, c.f);
        const auto p = restriction_and_parabolic(d);
        EXPECT_EQ(p.dim % 2, 0) << c.label;
        EXPECT_TRUE(p.exactness_check) << c.label << " residual " << p.exactness_residual;
        if (p.dim > 0) {
            const Matrix omega = parabolic_omega(c.s.complex, c.f, d, p.parabolic);
            const Vector sv = singular_values(omega);
            EXPECT_GT(sv[sv.size() - 1], 1e-6) << c.label;
        }
    }
}

TEST(CupProduct, TorusBruteForce)
{
    for (int m : {4, 5}) {
        const auto s = surface::torus(m);
        const auto& k = s.complex;
        const auto f = localsys::trivial_system(k, 1);
        const auto d = coboundaries(k, f);
        Matrix u(k.edge_count(), 2);
        for (int e = 0; e < k.edge_count(); ++e) {
            const auto [a, b] = k.edges()[e];
            u(e, 0) = wrapped(b % m - a % m, m) / static_cast<double>(m);
            u(e, 1) = wrapped(b / m - a / m, m) / static_cast<double>(m);
        }
        auto value = [&](int col, int from, int to) {
            const int e = k.edge_index(from, to);
            return (from < to ? 1.0 : -1.0) * u(e, col);
        };
        double cup01 = 0.0, cup10 = 0.0;
        for (const auto& t : k.triangles()) {
            cup01 += value(0, t[0], t[1]) * value(1, t[1], t[2]);
            cup10 += value(1, t[0], t[1]) * value(0, t[1], t[2]);
        }
        const Matrix omega = cup_omega(k, f, d, u);
        EXPECT_NEAR(omega(0, 1), 0.5 * (cup01 - cup10), 1e-13);
        EXPECT_NEAR(omega(0, 1), 1.0, 1e-13);
        EXPECT_NEAR(omega(1, 0), -1.0, 1e-13);
        EXPECT_EQ(omega(0, 0), 0.0);
    }
}

TEST(CupProduct, AgreesWithWhitneyWedge)
{
    const auto s = surface::genus_k(1, 1, 1);
    const auto wt = wedge_matrix(s.complex, localsys::trivial_system(s.complex, 1));
    EXPECT_LT(max_abs(wt - surface::whitney_scalar_matrices(s.complex, s.metric).w1), 1e-15);

    for (const auto& c : cases(3, 5)) {
        const auto d = coboundaries(c.s.complex, c.f);
        const auto h1 = cohomology(d, 1, Flavor::Absolute);
        if (h1.dim == 0) {
            continue;
        }
        const Matrix cup = cup_omega(c.s.complex, c.f, d, h1.reps);
        const Matrix wedge = h1.reps.transpose() * wedge_matrix(c.s.complex, c.f) * h1.reps;
        EXPECT_LT(max_abs(cup - wedge), 1e-9) << c.label;
        const Matrix raw = h1.reps.transpose() * cup_matrix(c.s.complex, c.f) * h1.reps;
        // on a closed surface the symmetric part of the raw cup is a coboundary artifact
        if (c.s.complex.boundary_edges().empty()) {
            EXPECT_LT(max_abs(symmetric_part(raw)), 1e-9) << c.label;
        }
    }
}

TEST(CupProduct, RepresentativeIndependence)
{
    std::mt19937_64 rng(6);
    for (const auto& c : cases(3, 7)) {
        const auto d = coboundaries(c.s.complex, c.f);
        const auto p = restriction_and_parabolic(d);
        if (p.dim == 0) {
            continue;
        }
        const Matrix base = parabolic_omega(c.s.complex, c.f, d, p.parabolic);
        const Matrix shift = d.d0 * ts::random_matrix(rng, d.d0.cols(), p.dim);
        const Matrix moved = parabolic_omega(c.s.complex, c.f, d, p.parabolic + shift);
        EXPECT_LT(max_abs(moved - base), 1e-9) << c.label;
        if (c.s.complex.boundary_edges().empty()) {
            EXPECT_LT(max_abs(cup_omega(c.s.complex, c.f, d, p.parabolic + shift) - base), 1e-9) << c.label;
        }
        const Matrix self = cup_omega(c.s.complex, c.f, d, p.parabolic.col(0));
        EXPECT_EQ(self(0, 0), 0.0);
    }
}

TEST(CupProduct, RejectsOpenCochains)
{
    std::mt19937_64 rng(1);
    const auto s = surface::torus(4);
    const auto f = localsys::trivial_system(s.complex, 1);
    const auto d = coboundaries(s.complex, f);
    try {
        cup_omega(s.complex, f, d, ts::random_matrix(rng, s.complex.edge_count(), 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotClosed);
    }
}
