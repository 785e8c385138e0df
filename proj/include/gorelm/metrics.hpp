#pragma once

// Multi-target regression error: per-target relative RMSE and its average.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gorelm/matrix.hpp"

namespace gorelm {

struct MetricReport {
    std::vector<double> per_target_rrmse;
    double arrmse = 0.0;
};

// Per target: sqrt(sum (pred - truth)^2 / sum (mean(truth) - truth)^2).
// A constant truth column has no scale to divide by and is rejected.
inline MetricReport arrmse(const Mat& pred, const Mat& truth) {
    require_same_shape(pred, truth, "arrmse");
    if (truth.rows() == 0 || truth.cols() == 0)
        throw std::invalid_argument("arrmse: empty input " + shape_str(truth));
    MetricReport rep;
    rep.per_target_rrmse.resize(truth.cols());
    double total = 0.0;
    for (std::size_t j = 0; j < truth.cols(); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < truth.rows(); ++i) mean += truth(i, j);
        mean /= static_cast<double>(truth.rows());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < truth.rows(); ++i) {
            const double d = pred(i, j) - truth(i, j);
            const double c = mean - truth(i, j);
            num += d * d;
            den += c * c;
        }
        if (den == 0.0)
            throw std::invalid_argument("arrmse: target column " + std::to_string(j) +
                                        " is constant; relative error undefined");
        rep.per_target_rrmse[j] = std::sqrt(num / den);
        total += rep.per_target_rrmse[j];
    }
    rep.arrmse = total / static_cast<double>(truth.cols());
    return rep;
}

}  // namespace gorelm
