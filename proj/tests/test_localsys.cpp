#include "parhodge/localsys.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace parhodge;
using namespace parhodge::localsys;

namespace {

Matrix rotation2(double theta)
{
    Matrix r(2, 2);
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}

// Conjugacy in SO(n) is detected by the spectrum up to rounding: compare the
// sorted characteristic data (trace of powers).
double conjugacy_gap(const Matrix& a, const Matrix& b)
{
    double gap = 0.0;
    Matrix pa = a, pb = b;
    for (int k = 1; k <= a.rows(); ++k) {
        gap = std::max(gap, std::abs(pa.trace() - pb.trace()));
        pa = pa * a;
        pb = pb * b;
    }
    return gap;
}

} // namespace

TEST(LocalSystem, Trivial)
{
    const auto t = surface::torus(4);
    auto f = trivial_system(t.complex, 1);
    EXPECT_EQ(flatness_residual(t.complex, f), 0.0);
    const auto a = surface::annulus(6, 2);
    auto g = trivial_system(a.complex, 3);
    EXPECT_EQ(flatness_residual(a.complex, g), 0.0);
    for (const auto& m : boundary_monodromies(a.complex, g)) {
        EXPECT_EQ(max_abs(m - Matrix::Identity(3, 3)), 0.0);
    }
    EXPECT_EQ(max_abs(path_holonomy(a.complex, g, a.loops.paths[1]) - Matrix::Identity(3, 3)), 0.0);
}

TEST(LocalSystem, EdgeTransports)
{
    const auto a = surface::annulus(6, 2);
    const auto& k = a.complex;
    const double theta = std::acos(-1.0);

    // every edge crossing the seam between column 5 and column 0
    std::vector<OrientedTransport> seam, single;
    bool placed_single = false;
    for (const auto& [u, v] : k.edges()) {
        const int iu = u % 6, iv = v % 6;
        Matrix p = Matrix::Identity(2, 2);
        if ((iu == 5 && iv == 0) || (iu == 0 && iv == 5)) {
            const int tail = iu == 5 ? u : v;
            const int head = iu == 5 ? v : u;
            seam.push_back({tail, head, rotation2(theta)});
            single.push_back({tail, head, placed_single ? Matrix(Matrix::Identity(2, 2)) : rotation2(theta)});
            placed_single = true;
            continue;
        }
        seam.push_back({u, v, p});
        single.push_back({u, v, p});
    }
    const auto f = from_edge_transports(k, 2, seam);
    EXPECT_LT(f.flat_residual, 1e-15);
    for (const auto& m : boundary_monodromies(k, f)) {
        EXPECT_LT(conjugacy_gap(m, rotation2(theta)), 1e-12);
    }
    try {
        from_edge_transports(k, 2, single);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFlat);
    }

    auto bad = seam;
    bad[3].matrix(0, 0) += 0.3;
    try {
        from_edge_transports(k, 2, bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotOrthogonal);
    }
    auto missing = seam;
    missing.pop_back();
    EXPECT_THROW(from_edge_transports(k, 2, missing), Error);
}

TEST(Representation, IdentityImagesGiveTrivialSystem)
{
    for (const auto& s : {surface::torus(4), surface::genus_k(1, 1, 1), surface::genus_k(2, 1, 1)}) {
        std::vector<Matrix> images(s.loops.generator_count(), Matrix::Identity(3, 3));
        const auto f = from_representation(s.complex, s.loops, images);
        for (const auto& p : f.transports) {
            EXPECT_EQ(max_abs(p - Matrix::Identity(3, 3)), 0.0) << s.id;
        }
    }
}

TEST(Representation, TorusCommutingRotations)
{
    const auto s = surface::torus(4);
    const Matrix a = rotation2(0.7), b = rotation2(-1.9);
    const auto f = from_representation(s.complex, s.loops, std::vector<Matrix>{a, b});
    EXPECT_LT(f.flat_residual, 1e-14);
    EXPECT_LT(max_abs(path_holonomy(s.complex, f, s.loops.paths[0]) - a), 1e-14);
    EXPECT_LT(max_abs(path_holonomy(s.complex, f, s.loops.paths[1]) - b), 1e-14);
    // non-commuting images violate the torus relation
    std::mt19937_64 rng(3);
    try {
        from_representation(s.complex, s.loops, std::vector<Matrix>{parhodge::testing::random_rotation(rng), parhodge::testing::random_rotation(rng)});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::RelationViolated);
    }
}

TEST(Representation, GenusOneOneBoundary)
{
    std::mt19937_64 rng(11);
    for (int subdiv : {1, 2}) {
        const auto s = surface::genus_k(1, 1, subdiv);
        for (int trial = 0; trial < 5; ++trial) {
            const Matrix a = parhodge::testing::random_rotation(rng), b = parhodge::testing::random_rotation(rng);
            const Matrix c = (a * b * a.transpose() * b.transpose()).transpose();
            const auto f = from_representation(s.complex, s.loops, std::vector<Matrix>{a, b, c});
            EXPECT_LT(f.flat_residual, 1e-12);
            const auto mono = boundary_monodromies(s.complex, f);
            ASSERT_EQ(mono.size(), 1u);
            EXPECT_LT(conjugacy_gap(mono[0], c), 1e-12);
        }
    }
}

TEST(Representation, RandomSystemsOnEverySurface)
{
    std::mt19937_64 rng(5);
    const std::vector<surface::GeneratedSurface> surfaces{
        surface::torus(4), surface::annulus(6, 2), surface::disk(4), surface::genus_k(1, 1, 1),
        surface::genus_k(0, 3, 1), surface::genus_k(2, 2, 1), surface::genus_k(2, 0, 1)};
    for (const auto& s : surfaces) {
        for (int trial = 0; trial < 3; ++trial) {
            const auto images = parhodge::testing::random_so3_images(rng, s.loops);
            const auto f = from_representation(s.complex, s.loops, images);
            EXPECT_LT(f.flat_residual, 1e-12) << s.id;
            for (int i = 0; i < s.loops.generator_count(); ++i) {
                EXPECT_LT(max_abs(path_holonomy(s.complex, f, s.loops.paths[i]) - images[i]), 1e-12) << s.id;
            }
            const auto mono = boundary_monodromies(s.complex, f);
            ASSERT_EQ(static_cast<int>(mono.size()), s.loops.boundary_count);
            for (int j = 0; j < s.loops.boundary_count; ++j) {
                EXPECT_LT(conjugacy_gap(mono[j], images[2 * s.loops.genus + j]), 1e-11) << s.id;
            }
            const auto g = parhodge::testing::random_flat_so3(rng, s);
            EXPECT_LT(g.flat_residual, 1e-12) << s.id;
        }
    }
}

TEST(Representation, Deterministic)
{
    std::mt19937_64 rng(2);
    const auto s = surface::genus_k(1, 1, 1);
    const auto images = parhodge::testing::random_so3_images(rng, s.loops);
    const auto f1 = from_representation(s.complex, s.loops, images);
    const auto f2 = from_representation(s.complex, s.loops, images);
    for (std::size_t e = 0; e < f1.transports.size(); ++e) {
        EXPECT_EQ(max_abs(f1.transports[e] - f2.transports[e]), 0.0);
    }
}

TEST(Representation, GaugeKeepsFlatness)
{
    std::mt19937_64 rng(9);
    const auto s = surface::annulus(6, 2);
    const auto f = from_representation(s.complex, s.loops, parhodge::testing::random_so3_images(rng, s.loops));
    const auto g = gauge_transform(s.complex, f, parhodge::testing::random_gauge(rng, s.complex.vertex_count(), 3));
    EXPECT_LT(g.flat_residual, 1e-12);
    const auto m1 = boundary_monodromies(s.complex, f);
    const auto m2 = boundary_monodromies(s.complex, g);
    for (std::size_t j = 0; j < m1.size(); ++j) {
        EXPECT_LT(conjugacy_gap(m1[j], m2[j]), 1e-12);
    }
}

TEST(Su2, Adjoint)
{
    EXPECT_EQ(max_abs(su2_adjoint(Quaternion{}) - Matrix::Identity(3, 3)), 0.0);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Vector3d axis(normal(rng), normal(rng), normal(rng));
        const double theta = 6.0 * (trial + 0.5) / 20.0;
        const Quaternion q = Quaternion::from_axis_angle(axis, theta);
        const Matrix r = su2_adjoint(q);
        EXPECT_LT(max_abs(r - parhodge::testing::rodrigues(axis, theta)), 1e-14);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-14);
        EXPECT_EQ(max_abs(su2_adjoint(-q) - r), 0.0);
        const Quaternion p = parhodge::testing::random_unit_quaternion(rng);
        EXPECT_LT(max_abs(su2_adjoint(p * q) - su2_adjoint(p) * r), 1e-14);
    }
    try {
        su2_adjoint(Quaternion{2.0, 0, 0, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotUnit);
    }
}
