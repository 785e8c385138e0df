#include "gorelm/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

using gorelm::Alternative;
using gorelm::Mat;
using gorelm::TestResult;

namespace {

// Multi-target benchmark errors for four methods on fifteen tasks; the kind
// of table the report command feeds into the rank tests.
Mat score_table() {
    return Mat::from_rows({{3.220, 2.861, 3.220, 3.040},
                           {0.887, 0.504, 0.884, 0.486},
                           {1.074, 0.941, 1.072, 1.474},
                           {1.307, 1.338, 1.393, 1.370},
                           {2.093, 1.159, 2.176, 0.715},
                           {0.915, 0.746, 0.915, 0.679},
                           {0.616, 0.463, 0.613, 0.399},
                           {0.749, 0.641, 0.744, 0.586},
                           {0.558, 0.242, 0.558, 0.238},
                           {0.950, 0.285, 0.950, 0.282},
                           {0.672, 0.367, 0.671, 0.361},
                           {0.925, 0.547, 0.928, 0.525},
                           {105.413, 82.823, 105.412, 9.330},
                           {3.153, 3.153, 3.153, 3.138},
                           {40.083, 55.728, 426.030, 2.087}});
}

}  // namespace

TEST(Chi2Sf, MatchesReferenceValues) {
    EXPECT_NEAR(gorelm::chi2_sf(24.681333333333333, 3), 1.800007221012843e-05, 1e-17);
    EXPECT_NEAR(gorelm::chi2_sf(1.0, 1), 0.31731050786291115, 1e-13);
    EXPECT_NEAR(gorelm::chi2_sf(10.0, 5), 0.07523524614651217, 1e-13);
    EXPECT_NEAR(gorelm::chi2_sf(0.5, 2), 0.7788007830714049, 1e-13);
    EXPECT_NEAR(gorelm::chi2_sf(40.0, 3), 1.065509033425585e-08, 1e-20);
    EXPECT_EQ(gorelm::chi2_sf(0.0, 3), 1.0);
    EXPECT_EQ(gorelm::chi2_sf(-2.0, 3), 1.0);
    EXPECT_THROW(gorelm::chi2_sf(1.0, 0), std::invalid_argument);
}

TEST(NormalCdf, MatchesReferenceValues) {
    EXPECT_NEAR(gorelm::normal_cdf(-2.81), 0.002477074998785861, 1e-16);
    EXPECT_NEAR(gorelm::normal_cdf(1.2345), 0.8914916766373298, 1e-15);
    EXPECT_NEAR(gorelm::normal_cdf(-0.5), 0.3085375387259869, 1e-15);
    EXPECT_EQ(gorelm::normal_cdf(0.0), 0.5);
}

TEST(Midranks, AveragesTiedPositions) {
    const std::vector<double> plain = {3.0, 1.0, 2.0};
    EXPECT_EQ(gorelm::midranks(plain), (std::vector<double>{3.0, 1.0, 2.0}));
    const std::vector<double> tied = {1.0, 2.0, 2.0, 5.0};
    EXPECT_EQ(gorelm::midranks(tied), (std::vector<double>{1.0, 2.5, 2.5, 4.0}));
    const std::vector<double> all_same = {7.0, 7.0, 7.0};
    EXPECT_EQ(gorelm::midranks(all_same), (std::vector<double>{2.0, 2.0, 2.0}));
    const std::vector<double> three_way = {4.0, 4.0, 4.0, 1.0, 9.0};
    EXPECT_EQ(gorelm::midranks(three_way), (std::vector<double>{3.0, 3.0, 3.0, 1.0, 5.0}));
}

TEST(FriedmanTest, BenchmarkTableReproducesKnownStatistic) {
    const auto res = gorelm::friedman_test(score_table(), 0.05);
    EXPECT_NEAR(res.statistic, 24.68, 1e-10);
    EXPECT_NEAR(res.p_value, 1.801162504541732e-05, 1e-17);
    ASSERT_TRUE(res.reject_at.has_value());
    EXPECT_TRUE(*res.reject_at);
    const auto no_alpha = gorelm::friedman_test(score_table());
    EXPECT_FALSE(no_alpha.reject_at.has_value());
}

TEST(FriedmanTest, IdenticalColumnsCannotReject) {
    const Mat same = Mat::from_rows({{1.0, 1.0, 1.0}, {2.0, 2.0, 2.0}, {0.5, 0.5, 0.5}});
    const auto res = gorelm::friedman_test(same, 0.05);
    EXPECT_EQ(res.statistic, 0.0);
    EXPECT_EQ(res.p_value, 1.0);
    EXPECT_FALSE(*res.reject_at);
}

TEST(FriedmanTest, RejectsUndersizedTables) {
    EXPECT_THROW(gorelm::friedman_test(Mat(1, 4)), std::invalid_argument);
    EXPECT_THROW(gorelm::friedman_test(Mat(5, 1)), std::invalid_argument);
}

TEST(NemenyiCd, TabulatedCriticalDistances) {
    EXPECT_NEAR(gorelm::nemenyi_cd(4, 15, 0.10), 1.0799877571322536, 1e-12);
    EXPECT_NEAR(gorelm::nemenyi_cd(4, 15, 0.05), 1.2110382139121603, 1e-12);
    EXPECT_NEAR(gorelm::nemenyi_cd(2, 10, 0.05), 1.960 * std::sqrt(6.0 / 60.0), 1e-12);
    EXPECT_THROW(gorelm::nemenyi_cd(1, 15, 0.05), std::invalid_argument);
    EXPECT_THROW(gorelm::nemenyi_cd(11, 15, 0.05), std::invalid_argument);
    EXPECT_THROW(gorelm::nemenyi_cd(4, 0, 0.05), std::invalid_argument);
    EXPECT_THROW(gorelm::nemenyi_cd(4, 15, 0.01), std::invalid_argument);
}

TEST(Wilcoxon, ExactEnumerationSmallSample) {
    const std::vector<double> a = {0.62, -0.17, 0.93, 0.31, -0.48, 0.55, 0.74, -0.21};
    const std::vector<double> zeros(8, 0.0);
    const auto less = gorelm::wilcoxon_signed_rank(a, zeros, Alternative::less);
    EXPECT_EQ(less.statistic, 29.0);
    EXPECT_DOUBLE_EQ(less.p_value, 0.9453125);  // dyadic: exact in binary
    const auto two = gorelm::wilcoxon_signed_rank(a, zeros, Alternative::two_sided, 0.05);
    EXPECT_EQ(two.statistic, 29.0);
    EXPECT_DOUBLE_EQ(two.p_value, 0.1484375);
    EXPECT_FALSE(*two.reject_at);
}

TEST(Wilcoxon, NormalApproximationWithTies) {
    std::vector<double> a(13), b(13);
    const double d[13] = {1, -2, 3, -4, 5, 6, 7, -8, 9, 10, 11, -12, 3};
    for (std::size_t i = 0; i < 13; ++i) {
        a[i] = static_cast<double>(i + 1);
        b[i] = a[i] - d[i];
    }
    const auto less = gorelm::wilcoxon_signed_rank(a, b, Alternative::less);
    EXPECT_EQ(less.statistic, 62.0);
    EXPECT_NEAR(less.p_value, 0.875640308670335, 1e-12);
    const auto two = gorelm::wilcoxon_signed_rank(a, b, Alternative::two_sided);
    EXPECT_NEAR(two.p_value, 0.2487193826593299, 1e-12);
}

TEST(Wilcoxon, DetectsAOneSidedImprovement) {
    // Fifteen paired errors where the first method wins nearly everywhere.
    const std::vector<double> first = {3.256, 0.487, 1.430, 1.340, 0.792, 0.659, 0.400, 0.584,
                                       0.335, 0.284, 0.361, 0.525, 32.769, 2.920, 5.102};
    const std::vector<double> second = {3.220, 0.789, 1.183, 1.296, 1.913, 0.860, 0.616, 0.662,
                                        0.483, 0.951, 0.670, 0.927, 140.212, 3.167, 41.922};
    const auto less = gorelm::wilcoxon_signed_rank(first, second, Alternative::less, 0.05);
    EXPECT_EQ(less.statistic, 10.5);
    EXPECT_NEAR(less.p_value, 0.00246189302666178, 1e-14);
    EXPECT_TRUE(*less.reject_at);
    const auto two = gorelm::wilcoxon_signed_rank(first, second, Alternative::two_sided);
    EXPECT_NEAR(two.p_value, 0.00492378605332356, 1e-14);
}

TEST(Wilcoxon, DropsZeroDifferencesAndValidates) {
    const std::vector<double> same = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    const auto res = gorelm::wilcoxon_signed_rank(same, same, Alternative::two_sided, 0.05);
    EXPECT_EQ(res.statistic, 0.0);
    EXPECT_EQ(res.p_value, 1.0);
    EXPECT_FALSE(*res.reject_at);
    // Four nonzero differences are too few to say anything.
    std::vector<double> b = same;
    b[0] += 1.0;
    b[1] -= 1.0;
    b[2] += 2.0;
    b[3] -= 0.5;
    EXPECT_THROW(gorelm::wilcoxon_signed_rank(same, b, Alternative::less),
                 std::invalid_argument);
    EXPECT_THROW(
        gorelm::wilcoxon_signed_rank(same, std::vector<double>{1.0}, Alternative::less),
        std::invalid_argument);
}

TEST(Wilcoxon, TwoSidedIsDirectionSymmetric) {
    const std::vector<double> a = {0.62, -0.17, 0.93, 0.31, -0.48, 0.55, 0.74, -0.21};
    const std::vector<double> zeros(8, 0.0);
    const auto ab = gorelm::wilcoxon_signed_rank(a, zeros, Alternative::two_sided);
    const auto ba = gorelm::wilcoxon_signed_rank(zeros, a, Alternative::two_sided);
    EXPECT_DOUBLE_EQ(ab.p_value, ba.p_value);
    // W+ complements across the flip: the rank total is n(n+1)/2 = 36.
    EXPECT_EQ(ab.statistic + ba.statistic, 36.0);
}
