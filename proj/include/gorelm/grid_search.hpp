#pragma once

// Seeded k-fold cross-validated grid search over (regularization, alpha)
// pairs, scoring validation aRRMSE. The regularization axis carries C for
// the ridge-style solvers and lambda for the robust ones.

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gorelm/matrix.hpp"
#include "gorelm/metrics.hpp"
#include "gorelm/rng.hpp"

namespace gorelm {

struct GridSpec {
    std::vector<double> reg_grid;
    std::vector<double> alpha_grid{0.0};
    std::size_t folds = 5;

    void validate() const {
        if (reg_grid.empty()) throw std::invalid_argument("GridSpec: empty regularization grid");
        if (alpha_grid.empty()) throw std::invalid_argument("GridSpec: empty alpha grid");
        if (folds < 2) throw std::invalid_argument("GridSpec: folds must be at least 2");
    }
};

inline std::vector<double> pow2_grid(int lo, int hi) {
    std::vector<double> out;
    for (int e = lo; e <= hi; ++e) out.push_back(std::ldexp(1.0, e));
    return out;
}

// The default search ranges: 2^-20..2^20 and {0, 0.25, 0.5, 0.75, 1}.
inline std::vector<double> default_reg_grid() { return pow2_grid(-20, 20); }

inline std::vector<double> default_alpha_grid() { return {0.0, 0.25, 0.5, 0.75, 1.0}; }

// Trains on the given fold split and returns predictions for x_val.
using SolverHandle = std::function<Mat(const Mat& x_train, const Mat& t_train, const Mat& x_val,
                                       double reg, double alpha, std::uint64_t fold_seed)>;

struct CvCell {
    double reg = 0.0;
    double alpha = 0.0;
    std::size_t fold = 0;
    double val_arrmse = 0.0;
    bool skipped = false;
};

struct GridSearchResult {
    double best_reg = 0.0;
    double best_alpha = 0.0;
    double best_score = 0.0;
    std::vector<CvCell> table;
    std::vector<std::string> warnings;
};

// Deterministic seeded fold assignment (one shuffle, contiguous chunks);
// every index lands in exactly one fold. A fold whose validation metric is
// undefined (constant target column) or whose training fails is skipped
// with a warning; a grid point with every fold skipped is excluded. Best
// point by mean validation aRRMSE, ties broken by smaller regularization
// value then smaller alpha.
inline GridSearchResult kfold_grid_search(const Mat& x, const Mat& t, const GridSpec& grid,
                                          const SolverHandle& trainer, std::uint64_t seed) {
    grid.validate();
    if (x.rows() != t.rows())
        throw std::invalid_argument("kfold_grid_search: x rows " + std::to_string(x.rows()) +
                                    " vs t rows " + std::to_string(t.rows()));
    const std::size_t n = x.rows();
    if (n < grid.folds)
        throw std::invalid_argument("kfold_grid_search: " + std::to_string(n) +
                                    " samples cannot fill " + std::to_string(grid.folds) +
                                    " folds");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    SplitMix64 rng(seed);
    for (std::size_t i = n; i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    std::vector<std::size_t> fold_of(n);
    for (std::size_t f = 0; f < grid.folds; ++f) {
        const std::size_t begin = f * n / grid.folds, end = (f + 1) * n / grid.folds;
        for (std::size_t i = begin; i < end; ++i) fold_of[idx[i]] = f;
    }
    auto gather = [&](std::size_t fold, bool validation, Mat& xs, Mat& ts) {
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i)
            if ((fold_of[i] == fold) == validation) ++count;
        xs = Mat(count, x.cols());
        ts = Mat(count, t.cols());
        std::size_t r = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if ((fold_of[i] == fold) != validation) continue;
            for (std::size_t j = 0; j < x.cols(); ++j) xs(r, j) = x(i, j);
            for (std::size_t j = 0; j < t.cols(); ++j) ts(r, j) = t(i, j);
            ++r;
        }
    };
    GridSearchResult result;
    bool have_best = false;
    for (const double reg : grid.reg_grid) {
        for (const double alpha : grid.alpha_grid) {
            double sum = 0.0;
            std::size_t scored = 0;
            for (std::size_t f = 0; f < grid.folds; ++f) {
                Mat x_tr, t_tr, x_val, t_val;
                gather(f, false, x_tr, t_tr);
                gather(f, true, x_val, t_val);
                CvCell cell{reg, alpha, f, 0.0, false};
                try {
                    const Mat pred = trainer(x_tr, t_tr, x_val, reg, alpha, mix_seed(seed, f + 1));
                    cell.val_arrmse = arrmse(pred, t_val).arrmse;
                    sum += cell.val_arrmse;
                    ++scored;
                } catch (const std::exception& err) {
                    cell.skipped = true;
                    cell.val_arrmse = std::nan("");
                    result.warnings.push_back("fold " + std::to_string(f) + " at reg=" +
                                              format_full(reg) + " alpha=" + format_full(alpha) +
                                              " skipped: " + err.what());
                }
                result.table.push_back(cell);
            }
            if (scored == 0) {
                result.warnings.push_back("grid point reg=" + format_full(reg) + " alpha=" +
                                          format_full(alpha) + " excluded: all folds skipped");
                continue;
            }
            const double score = sum / static_cast<double>(scored);
            const bool better =
                !have_best || score < result.best_score ||
                (score == result.best_score &&
                 (reg < result.best_reg ||
                  (reg == result.best_reg && alpha < result.best_alpha)));
            if (better) {
                result.best_reg = reg;
                result.best_alpha = alpha;
                result.best_score = score;
                have_best = true;
            }
        }
    }
    if (!have_best)
        throw std::runtime_error("kfold_grid_search: every grid point was excluded");
    return result;
}

inline void write_cv_table(std::ostream& os, const GridSearchResult& result) {
    os << "reg,alpha,fold,val_arrmse,skipped\n";
    for (const CvCell& cell : result.table)
        os << format_full(cell.reg) << "," << format_full(cell.alpha) << "," << cell.fold << ","
           << (cell.skipped ? "nan" : format_full(cell.val_arrmse)) << ","
           << (cell.skipped ? 1 : 0) << "\n";
}

}  // namespace gorelm
