#include "gorelm/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using gorelm::Mat;

namespace {

Mat random_mat(std::mt19937& gen, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = dist(gen);
    return m;
}

Mat random_spd(std::mt19937& gen, std::size_t n) {
    const Mat m = random_mat(gen, n + 2, n);
    Mat g = matmul(transpose(m), m);
    for (std::size_t i = 0; i < n; ++i) g(i, i) += 0.5;
    return g;
}

// Independent dense solver: Gaussian elimination with partial pivoting.
Mat gauss_solve(Mat a, Mat b) {
    const std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
        if (piv != col)
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
        if (piv != col)
            for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(col, j), b(piv, j));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) -= f * b(col, j);
        }
    }
    Mat x(n, b.cols());
    for (std::size_t col = 0; col < b.cols(); ++col)
        for (std::size_t i = n; i-- > 0;) {
            double s = b(i, col);
            for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x(j, col);
            x(i, col) = s / a(i, i);
        }
    return x;
}

double max_diff(const Mat& a, const Mat& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::fabs(a(i, j) - b(i, j)));
    return d;
}

void expect_penrose(const Mat& a, const Mat& p, double tol) {
    const Mat ap = matmul(a, p), pa = matmul(p, a);
    EXPECT_LE(max_diff(matmul(ap, a), a), tol);
    EXPECT_LE(max_diff(matmul(pa, p), p), tol);
    EXPECT_LE(max_diff(transpose(ap), ap), tol);
    EXPECT_LE(max_diff(transpose(pa), pa), tol);
}

}  // namespace

TEST(SolveSpd, MatchesGaussianElimination) {
    std::mt19937 gen(31);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 + gen() % 10;
        const Mat g = random_spd(gen, n);
        const Mat rhs = random_mat(gen, n, 1 + gen() % 3);
        const Mat x = gorelm::solve_spd(g, 0.0, rhs);
        const Mat want = gauss_solve(g, rhs);
        EXPECT_LE(max_diff(x, want), 1e-10);
    }
}

TEST(SolveSpd, ShiftEqualsExplicitDiagonal) {
    std::mt19937 gen(32);
    const std::size_t n = 6;
    const Mat g = random_spd(gen, n);
    const Mat rhs = random_mat(gen, n, 2);
    const double shift = 0.37;
    Mat shifted = g;
    for (std::size_t i = 0; i < n; ++i) shifted(i, i) += shift;
    const Mat a = gorelm::solve_spd(g, shift, rhs);
    const Mat b = gorelm::solve_spd(shifted, 0.0, rhs);
    EXPECT_LE(max_diff(a, b), 1e-12);
}

TEST(SolveSpd, RejectsIndefiniteAndAsymmetric) {
    const Mat indef = Mat::from_rows({{1.0, 0.0}, {0.0, -1.0}});
    EXPECT_THROW(gorelm::solve_spd(indef, 0.0, Mat(2, 1)), gorelm::FactorizationError);
    const Mat asym = Mat::from_rows({{1.0, 2.0}, {0.0, 1.0}});
    EXPECT_THROW(gorelm::solve_spd(asym, 0.0, Mat(2, 1)), std::invalid_argument);
}

TEST(InvertSpd, ProducesInverseAndExactSymmetry) {
    std::mt19937 gen(33);
    const std::size_t n = 8;
    const Mat g = random_spd(gen, n);
    const Mat inv = gorelm::invert_spd(g, 0.25);
    Mat shifted = g;
    for (std::size_t i = 0; i < n; ++i) shifted(i, i) += 0.25;
    EXPECT_LE(max_diff(matmul(shifted, inv), Mat::identity(n)), 1e-10);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(inv(i, j), inv(j, i));
}

TEST(Pinv, HandValues) {
    // Column vector: pinv([3;4]) = [3/25 4/25].
    const Mat v = Mat::from_rows({{3.0}, {4.0}});
    const Mat p = gorelm::pinv(v);
    ASSERT_EQ(p.rows(), 1u);
    ASSERT_EQ(p.cols(), 2u);
    EXPECT_NEAR(p(0, 0), 3.0 / 25.0, 1e-14);
    EXPECT_NEAR(p(0, 1), 4.0 / 25.0, 1e-14);

    // Rank-1 square: A = [[1,1],[0,0]] has pinv [[0.5,0],[0.5,0]].
    const Mat a = Mat::from_rows({{1.0, 1.0}, {0.0, 0.0}});
    const Mat pa = gorelm::pinv(a);
    EXPECT_NEAR(pa(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(pa(1, 0), 0.5, 1e-14);
    EXPECT_NEAR(pa(0, 1), 0.0, 1e-14);
    EXPECT_NEAR(pa(1, 1), 0.0, 1e-14);
}

TEST(Pinv, PenroseConditionsTallWideAndDeficient) {
    std::mt19937 gen(34);
    const Mat tall = random_mat(gen, 9, 4);
    expect_penrose(tall, gorelm::pinv(tall), 1e-10);

    const Mat wide = random_mat(gen, 3, 8);
    expect_penrose(wide, gorelm::pinv(wide), 1e-10);

    // Rank-deficient by construction: outer product of random factors.
    const Mat low = matmul(random_mat(gen, 7, 2), random_mat(gen, 2, 5));
    expect_penrose(low, gorelm::pinv(low), 1e-9);

    const Mat zero(4, 3);
    const Mat pz = gorelm::pinv(zero);
    EXPECT_EQ(pz.rows(), 3u);
    EXPECT_EQ(pz.cols(), 4u);
    EXPECT_EQ(max_abs(pz), 0.0);
}

TEST(Pinv, InverseOnNonsingularSquare) {
    std::mt19937 gen(35);
    const Mat g = random_spd(gen, 5);
    const Mat p = gorelm::pinv(g);
    EXPECT_LE(max_diff(matmul(g, p), Mat::identity(5)), 1e-9);
}

TEST(Pinv, EmptyMatrixGivesTransposedEmpty) {
    const Mat e(0, 3);
    const Mat p = gorelm::pinv(e);
    EXPECT_EQ(p.rows(), 3u);
    EXPECT_EQ(p.cols(), 0u);
}

TEST(Pinv, SingularValueCutoffZerosTinyDirections) {
    // One singular value far below the cutoff behaves as exact zero: the
    // pseudoinverse must not blow up.
    Mat a = Mat::from_rows({{1.0, 0.0}, {0.0, 1e-18}});
    const Mat p = gorelm::pinv(a);
    EXPECT_NEAR(p(0, 0), 1.0, 1e-12);
    EXPECT_EQ(p(1, 1), 0.0);
}
