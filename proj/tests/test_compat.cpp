#include "parhodge/compat.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace parhodge::compat {
namespace {

// C^2 = R^4 via (Re z1, Im z1, Re z2, Im z2); U_r = span{(1,0), (i,r)}.
std::pair<AmbientSpace, Subspace> example_u_r(double r)
{
    AmbientSpace v{Matrix::Identity(4, 4), testing::standard_complex_structure(2)};
    Matrix b = Matrix::Zero(4, 2);
    b(0, 0) = 1.0;
    b(1, 1) = 1.0;
    b(2, 1) = r;
    return {v, Subspace{b}};
}

struct RandomInstance {
    AmbientSpace v;
    Subspace u;
};

// J = P J0 P^-1 and Q = P^-T P^-1 satisfy J^2 = -I and J^T Q J = Q.
RandomInstance random_instance(std::mt19937_64& rng, Eigen::Index m, Eigen::Index k)
{
    const Matrix p = testing::random_invertible(rng, 2 * m);
    const Matrix p_inv = p.inverse();
    RandomInstance inst;
    inst.v.j = p * testing::standard_complex_structure(m) * p_inv;
    inst.v.q = symmetric_part(p_inv.transpose() * p_inv);
    inst.u.basis = testing::random_matrix(rng, 2 * m, k);
    return inst;
}

TEST(GramAndOmega, ExampleRIsOne)
{
    auto [v, u] = example_u_r(1.0);
    auto [m, omega] = gram_and_omega(v, u);
    Matrix m_expected(2, 2), o_expected(2, 2);
    m_expected << 1, 0, 0, 2;
    o_expected << 0, 1, -1, 0;
    EXPECT_LT(max_abs(m - m_expected), 1e-15);
    EXPECT_LT(max_abs(omega - o_expected), 1e-15);
}

TEST(GramAndOmega, FullSpaceGivesJ)
{
    AmbientSpace v{Matrix::Identity(4, 4), testing::standard_complex_structure(2)};
    auto [m, omega] = gram_and_omega(v, Subspace{Matrix::Identity(4, 4)});
    // omega(e_i, e_j) = (J e_i, e_j) = J[j][i]
    EXPECT_LT(max_abs(omega - v.j.transpose()), 1e-15);
    EXPECT_LT(max_abs(m - Matrix::Identity(4, 4)), 1e-15);
}

TEST(GramAndOmega, RandomIsSkew)
{
    std::mt19937_64 rng(21);
    auto inst = random_instance(rng, 4, 5);
    auto [m, omega] = gram_and_omega(inst.v, inst.u);
    EXPECT_LT(max_abs(omega + omega.transpose()), 1e-15 * std::max(1.0, max_abs(omega)));
}

TEST(CheckCondition, ExampleCases)
{
    {
        auto [v, u] = example_u_r(1.0);
        const auto d = check_condition(v, u);
        EXPECT_TRUE(d.omega_nondegenerate);
        EXPECT_TRUE(d.totally_real);
    }
    {
        auto [v, u] = example_u_r(0.0);
        const auto d = check_condition(v, u);
        EXPECT_TRUE(d.omega_nondegenerate);
        EXPECT_FALSE(d.totally_real);
    }
    {
        AmbientSpace v{Matrix::Identity(4, 4), testing::standard_complex_structure(2)};
        Matrix b = Matrix::Zero(4, 1);
        b(0, 0) = 1.0;
        EXPECT_FALSE(check_condition(v, Subspace{b}).omega_nondegenerate);
    }
}

TEST(CompatibleStructure, ExampleGoldenValues)
{
    for (double r : {0.0, 0.5, 1.0, 2.0, 10.0}) {
        auto [v, u] = example_u_r(r);
        auto [m, omega] = gram_and_omega(v, u);
        const auto res = compatible_complex_structure(m, omega);
        const double s = 1.0 + r * r;
        // G(u1) = u2 / (1 + r^2), G(u2) = -u1
        EXPECT_NEAR(res.g(0, 0), 0.0, 1e-12);
        EXPECT_NEAR(res.g(1, 0), 1.0 / s, 1e-12);
        EXPECT_NEAR(res.g(0, 1), -1.0, 1e-12);
        EXPECT_NEAR(res.g(1, 1), 0.0, 1e-12);
        const Matrix g2 = res.g * res.g;
        EXPECT_LT(max_abs(g2 + Matrix::Identity(2, 2) / s), 1e-12);
        EXPECT_LT(max_abs(res.r - Matrix::Identity(2, 2) / std::sqrt(s)), 1e-12);
        EXPECT_NEAR(res.j_u(1, 0), 1.0 / std::sqrt(s), 1e-12);
        EXPECT_NEAR(res.j_u(0, 1), -std::sqrt(s), 1e-12);
        EXPECT_NEAR(res.j_u(0, 0), 0.0, 1e-12);
        EXPECT_NEAR(res.j_u(1, 1), 0.0, 1e-12);
    }
}

TEST(CompatibleStructure, IdentityGramGivesG)
{
    Matrix omega(2, 2);
    omega << 0, 1, -1, 0;
    const auto res = compatible_complex_structure(Matrix::Identity(2, 2), omega);
    Matrix expected(2, 2);
    expected << 0, -1, 1, 0;
    EXPECT_LT(max_abs(res.g - expected), 1e-15);
    EXPECT_LT(max_abs(res.j_u - expected), 1e-15);
}

TEST(CompatibleStructure, TamesRandomVectors)
{
    auto [v, u] = example_u_r(2.0);
    auto [m, omega] = gram_and_omega(v, u);
    const auto res = compatible_complex_structure(m, omega);
    std::mt19937_64 rng(22);
    for (int i = 0; i < 100; ++i) {
        const Vector x = testing::random_matrix(rng, 2, 1).col(0);
        EXPECT_GT(x.dot(omega * (res.j_u * x)), 0.0);
    }
}

TEST(CompatibleStructure, DegenerateOmegaFails)
{
    Matrix omega = Matrix::Zero(2, 2);
    try {
        compatible_complex_structure(Matrix::Identity(2, 2), omega);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConditionFailed);
    }
}

TEST(CompatibleStructure, RandomInstancesSatisfyAllConclusions)
{
    std::mt19937_64 rng(23);
    int accepted = 0;
    for (int seed = 0; seed < 60; ++seed) {
        const Eigen::Index m = 2 + seed % 8;
        const Eigen::Index k = 2 * (1 + seed % std::min<Eigen::Index>(m, 6));
        auto inst = random_instance(rng, m, k);
        inst.v.validate();
        if (!check_condition(inst.v, inst.u).omega_nondegenerate) {
            continue;
        }
        ++accepted;
        auto [mu, omega] = gram_and_omega(inst.v, inst.u);
        const auto res = compatible_complex_structure(mu, omega);
        const Matrix& j = res.j_u;
        EXPECT_LT(res.residuals.at("j_sq"), 1e-9);
        EXPECT_LT(res.residuals.at("isometry"), 1e-9);
        EXPECT_LT(res.residuals.at("omega_invariance"), 1e-9);
        EXPECT_LT(res.residuals.at("taming_identity"), 1e-9);
        EXPECT_LT(res.residuals.at("g_skew"), 1e-9);
        EXPECT_LT(res.residuals.at("g_r_commute"), 1e-9);
        EXPECT_GT(res.residuals.at("g_sq_negative_min"), 0.0);
        EXPECT_GT(res.residuals.at("taming_min_eigenvalue"), 0.0);
        EXPECT_LT(max_abs(j.transpose() * mu * j - mu) / max_abs(mu), 1e-9);

        const Matrix g_ambient = ambient_G(inst.v, inst.u);
        EXPECT_LT(max_abs(g_ambient - res.g) / std::max(1.0, max_abs(res.g)), 1e-10);

        // scaling the inner product leaves J_U unchanged
        AmbientSpace scaled{3.7 * inst.v.q, inst.v.j};
        auto [ms, os] = gram_and_omega(scaled, inst.u);
        const auto rs = compatible_complex_structure(ms, os);
        EXPECT_LT(max_abs(rs.j_u - j) / std::max(1.0, max_abs(j)), 1e-9);
    }
    EXPECT_GT(accepted, 50);
}

TEST(AmbientG, JInvariantSubspaceGivesRestriction)
{
    auto [v, u] = example_u_r(0.0);
    const Matrix g = ambient_G(v, u);
    Matrix expected(2, 2);
    expected << 0, -1, 1, 0;
    EXPECT_LT(max_abs(g - expected), 1e-15);
}

TEST(SubspaceTransfer, EqualSubspaces)
{
    std::mt19937_64 rng(24);
    const Matrix n = testing::random_matrix(rng, 6, 3);
    const auto t = subspace_transfer(Matrix::Identity(6, 6), n, n);
    EXPECT_LT(max_abs(t.p_n - Matrix::Identity(3, 3)), 1e-12);
    EXPECT_EQ(t.u_basis.cols(), 3);
    EXPECT_TRUE(t.kernel_check);
    EXPECT_TRUE(t.rank_equal);
}

TEST(SubspaceTransfer, OrthogonalSubspaces)
{
    const Matrix id = Matrix::Identity(6, 6);
    const auto t = subspace_transfer(id, id.leftCols(2), id.rightCols(3));
    EXPECT_LT(max_abs(t.p_n), 1e-15);
    EXPECT_EQ(t.u_basis.cols(), 0);
    EXPECT_EQ(t.t_basis.cols(), 0);
    EXPECT_TRUE(t.kernel_check);
    EXPECT_TRUE(t.rank_equal);
}

TEST(SubspaceTransfer, RandomMutuallyAdjoint)
{
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix w = testing::random_matrix(rng, 8, 8);
        const Matrix q = w.transpose() * w + Matrix::Identity(8, 8);
        const Matrix n = testing::random_matrix(rng, 8, 3);
        const Matrix d = testing::random_matrix(rng, 8, 3);
        const auto t = subspace_transfer(q, n, d);
        // brute force: (P_N x, y) = (x, P_D y) for x in span D, y in span N
        const Matrix lhs = (n * t.p_n).transpose() * q * n;
        const Matrix rhs = d.transpose() * q * (d * t.p_d);
        EXPECT_LT(max_abs(lhs - rhs), 1e-10 * max_abs(q));
        EXPECT_TRUE(t.kernel_check);
        EXPECT_TRUE(t.rank_equal);
    }
}

TEST(SubspaceTransfer, DependentInputRejected)
{
    Matrix n(4, 2);
    n << 1, 2, 0, 0, 0, 0, 0, 0;
    try {
        subspace_transfer(Matrix::Identity(4, 4), n, n);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
    }
}

} // namespace
} // namespace parhodge::compat
