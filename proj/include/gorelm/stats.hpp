#pragma once

// Nonparametric comparison machinery: Friedman test over datasets x methods
// score tables (midrank ties, chi-square reference), Nemenyi critical
// distance with the embedded studentized-range table, and the Wilcoxon
// signed-rank test (exact enumeration for small samples, tie-corrected
// normal approximation otherwise).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gorelm/matrix.hpp"

namespace gorelm {

namespace detail {

// Regularized upper incomplete gamma Q(a, x): the series gives the lower
// tail when x < a+1; the continued fraction gives Q directly otherwise, so
// small survival probabilities keep their full relative precision.
inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0)
        throw std::invalid_argument("regularized_gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - lg) * h;
}

}  // namespace detail

// Survival function of the chi-square distribution with dof degrees of
// freedom: P(X > x).
inline double chi2_sf(double x, std::size_t dof) {
    if (dof == 0) throw std::invalid_argument("chi2_sf: zero degrees of freedom");
    if (x <= 0.0) return 1.0;
    return detail::regularized_gamma_q(static_cast<double>(dof) / 2.0, x / 2.0);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Ranks 1..n in ascending value order; tied values share the average of the
// rank positions they occupy.
inline std::vector<double> midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::optional<bool> reject_at;
};

// Friedman test on a datasets x methods score table (smaller scores rank
// better). Chi-square reference with k-1 degrees of freedom.
inline TestResult friedman_test(const Mat& scores,
                                std::optional<double> alpha = std::nullopt) {
    const std::size_t n = scores.rows(), k = scores.cols();
    if (k < 2 || n < 2)
        throw std::invalid_argument("friedman_test: need at least 2 methods and 2 datasets, got " +
                                    shape_str(scores));
    std::vector<double> rank_sum(k, 0.0);
    std::vector<double> row(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) row[j] = scores(i, j);
        const std::vector<double> ranks = midranks(row);
        for (std::size_t j = 0; j < k; ++j) rank_sum[j] += ranks[j];
    }
    const double kd = static_cast<double>(k), nd = static_cast<double>(n);
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double avg = rank_sum[j] / nd;
        sum_sq += avg * avg;
    }
    double stat = 12.0 * nd / (kd * (kd + 1.0)) * (sum_sq - kd * (kd + 1.0) * (kd + 1.0) / 4.0);
    if (stat < 0.0) stat = 0.0;
    TestResult result;
    result.statistic = stat;
    result.p_value = chi2_sf(stat, k - 1);
    if (alpha) result.reject_at = result.p_value < *alpha;
    return result;
}

// Critical distance for the Nemenyi post-hoc test: CD = q_alpha(k) *
// sqrt(k(k+1)/(6N)). q values are the standard two-tailed studentized
// range points divided by sqrt(2), tabulated for k = 2..10.
inline double nemenyi_cd(std::size_t k_methods, std::size_t n_datasets, double alpha) {
    static const double q05[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
    static const double q10[] = {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920};
    if (k_methods < 2 || k_methods > 10)
        throw std::invalid_argument("nemenyi_cd: k outside the tabulated range [2,10]");
    if (n_datasets == 0) throw std::invalid_argument("nemenyi_cd: no datasets");
    const double* table = nullptr;
    if (std::fabs(alpha - 0.05) < 1e-12) table = q05;
    else if (std::fabs(alpha - 0.10) < 1e-12) table = q10;
    else
        throw std::invalid_argument("nemenyi_cd: alpha must be 0.05 or 0.10");
    const double kd = static_cast<double>(k_methods);
    return table[k_methods - 2] *
           std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(n_datasets)));
}

enum class Alternative { less, two_sided };

// Wilcoxon signed-rank test on paired samples. Zero differences are
// dropped; |differences| are midranked; the statistic is W+, the rank sum
// over positive differences. Exact p by enumerating all 2^n sign patterns
// for n <= 12; otherwise a normal approximation with tie-corrected
// variance. alternative=less tests median(a - b) < 0.
inline TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b,
                                       Alternative alternative,
                                       std::optional<double> alpha = std::nullopt) {
    if (a.size() != b.size())
        throw std::invalid_argument("wilcoxon_signed_rank: length mismatch " +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diff.push_back(d);
    }
    TestResult result;
    if (diff.empty()) {
        result.statistic = 0.0;
        result.p_value = 1.0;
        if (alpha) result.reject_at = false;
        return result;
    }
    const std::size_t n = diff.size();
    if (n < 5)
        throw std::invalid_argument("wilcoxon_signed_rank: need at least 5 nonzero differences, "
                                    "have " + std::to_string(n));
    std::vector<double> absd(n);
    for (std::size_t i = 0; i < n; ++i) absd[i] = std::fabs(diff[i]);
    const std::vector<double> ranks = midranks(absd);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (diff[i] > 0.0) w_plus += ranks[i];
    result.statistic = w_plus;
    if (n <= 12) {
        const std::uint64_t total = 1ull << n;
        std::uint64_t le = 0, ge = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double w = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1ull << i)) w += ranks[i];
            if (w <= w_plus + 1e-9) ++le;
            if (w >= w_plus - 1e-9) ++ge;
        }
        const double p_le = static_cast<double>(le) / static_cast<double>(total);
        const double p_ge = static_cast<double>(ge) / static_cast<double>(total);
        result.p_value = alternative == Alternative::less
                             ? p_le
                             : std::min(1.0, 2.0 * std::min(p_le, p_ge));
    } else {
        const double nd = static_cast<double>(n);
        const double mean = nd * (nd + 1.0) / 4.0;
        double tie_term = 0.0;
        std::size_t i = 0;
        std::vector<double> sorted = absd;
        std::sort(sorted.begin(), sorted.end());
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
        const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
        const double z = (w_plus - mean) / std::sqrt(var);
        const double p_less = normal_cdf(z);
        result.p_value = alternative == Alternative::less
                             ? p_less
                             : std::min(1.0, 2.0 * std::min(p_less, 1.0 - p_less));
    }
    if (alpha) result.reject_at = result.p_value < *alpha;
    return result;
}

}  // namespace gorelm
