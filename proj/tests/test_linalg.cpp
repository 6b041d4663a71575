#include <gtest/gtest.h>

#include <random>

#include "cstsim/linalg.hpp"
#include "cstsim/ode.hpp"

using namespace cstsim;

TEST(Linalg, SolvesSmallSystem) {
    Matrix a(3, 3);
    const double v[3][3] = {{4, -2, 1}, {-2, 4, -2}, {1, -2, 4}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = v[i][j];
    const std::vector<double> b{11, -16, 17};
    const auto x = solve_linear(a, b);
    EXPECT_NEAR(x[0], 1.0, 1e-14);
    EXPECT_NEAR(x[1], -2.0, 1e-14);
    EXPECT_NEAR(x[2], 3.0, 1e-14);
}

TEST(Linalg, PivotingHandlesZeroLeadingEntry) {
    Matrix a(2, 2);
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    const std::vector<double> b{2.0, 3.0};
    const auto x = solve_linear(a, b);
    EXPECT_DOUBLE_EQ(x[0], 3.0);
    EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(Linalg, SingularMatrixThrows) {
    Matrix a(2, 2, 1.0);
    const std::vector<double> b{1.0, 1.0};
    EXPECT_THROW(solve_linear(a, b), SingularSystem);
}

TEST(Linalg, IllConditionedMatrixThrows) {
    Matrix a = Matrix::identity(2);
    a(1, 1) = 1e-16;
    const std::vector<double> b{1.0, 1.0};
    EXPECT_THROW(solve_linear(a, b), SingularSystem);
    EXPECT_NO_THROW(solve_linear(a, b, 1e20));
}

TEST(Linalg, InverseTimesMatrixIsIdentity) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) a(i, j) = u(rng) + (i == j ? 3.0 : 0.0);
    const Matrix inv = LuDecomposition(a).inverse();
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 5; ++k) s += a(i, k) * inv(k, j);
            EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-13);
        }
}

TEST(Linalg, CrossProductIsOrthogonal) {
    const Vec3 a{1.0, 2.0, 3.0}, b{-4.0, 0.5, 2.0};
    const Vec3 c = cross(a, b);
    EXPECT_NEAR(dot(a, c), 0.0, 1e-14);
    EXPECT_NEAR(dot(b, c), 0.0, 1e-14);
}

TEST(Rk4, ExponentialDecayIsFourthOrder) {
    auto f = [](const std::array<double, 1>& x) { return std::array<double, 1>{-x[0]}; };
    auto run = [&](double dt) {
        std::array<double, 1> x{1.0};
        for (std::size_t i = 0; i < step_count(1.0, dt); ++i) x = rk4_step(f, x, dt);
        return std::abs(x[0] - std::exp(-1.0));
    };
    const double e1 = run(0.1), e2 = run(0.05);
    EXPECT_NEAR(e1 / e2, 16.0, 1.0);
}
