#pragma once

#include "parhodge/localsys.hpp"

#include <random>

namespace parhodge::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            a(i, j) = normal(rng);
        }
    }
    return a;
}

inline Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n)
{
    const Matrix a = random_matrix(rng, n, n);
    return 0.5 * (a + a.transpose());
}

inline Matrix random_orthogonal(std::mt19937_64& rng, Eigen::Index n)
{
    Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n, n));
    Matrix q = qr.householderQ();
    return q;
}

inline Matrix standard_complex_structure(Eigen::Index m)
{
    Matrix j = Matrix::Zero(2 * m, 2 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
        j(2 * k + 1, 2 * k) = 1.0;
        j(2 * k, 2 * k + 1) = -1.0;
    }
    return j;
}

// Random invertible matrix with singular values in [lo, hi].
inline Matrix random_invertible(std::mt19937_64& rng, Eigen::Index n, double lo = 0.5, double hi = 2.0)
{
    std::uniform_real_distribution<double> uni(lo, hi);
    Vector s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s[i] = uni(rng);
    }
    return random_orthogonal(rng, n) * s.asDiagonal() * random_orthogonal(rng, n);
}

inline localsys::Quaternion random_unit_quaternion(std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    return localsys::Quaternion{normal(rng), normal(rng), normal(rng), normal(rng)}.normalized();
}

inline Matrix random_rotation(std::mt19937_64& rng)
{
    return localsys::su2_adjoint(random_unit_quaternion(rng));
}

// Rodrigues' formula, kept independent of the quaternion code.
inline Matrix rodrigues(const Eigen::Vector3d& axis, double theta)
{
    const Eigen::Vector3d u = axis.normalized();
    Matrix k(3, 3);
    k << 0, -u.z(), u.y(), u.z(), 0, -u.x(), -u.y(), u.x(), 0;
    return Matrix::Identity(3, 3) + std::sin(theta) * k + (1 - std::cos(theta)) * k * k;
}

// Images of the generators in SO(3) satisfying the surface relation. With
// boundary the last boundary image absorbs the relation; on closed surfaces
// all images rotate about one common axis.
inline std::vector<Matrix> random_so3_images(std::mt19937_64& rng, const surface::GeneratorLoops& loops)
{
    std::vector<Matrix> images;
    const int count = loops.generator_count();
    if (loops.boundary_count == 0) {
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * std::acos(-1.0));
        const Eigen::Vector3d axis(normal(rng), normal(rng), normal(rng));
        for (int i = 0; i < count; ++i) {
            images.push_back(rodrigues(axis, angle(rng)));
        }
        return images;
    }
    for (int i = 0; i + 1 < count; ++i) {
        images.push_back(random_rotation(rng));
    }
    images.push_back(Matrix::Identity(3, 3));
    images.back() = localsys::relation_product(loops, images, 3).transpose();
    return images;
}

inline std::vector<Matrix> random_gauge(std::mt19937_64& rng, int vertex_count, int n)
{
    std::vector<Matrix> g;
    for (int v = 0; v < vertex_count; ++v) {
        Matrix q = random_orthogonal(rng, n);
        if (q.determinant() < 0) {
            q.col(0) *= -1.0;
        }
        g.push_back(q);
    }
    return g;
}

// A random flat SO(3) system on a generated surface, in a random gauge.
inline localsys::FlatLocalSystem random_flat_so3(std::mt19937_64& rng, const surface::GeneratedSurface& s)
{
    const auto images = random_so3_images(rng, s.loops);
    const auto f = localsys::from_representation(s.complex, s.loops, images);
    return localsys::gauge_transform(s.complex, f, random_gauge(rng, s.complex.vertex_count(), 3));
}

} // namespace parhodge::testing
