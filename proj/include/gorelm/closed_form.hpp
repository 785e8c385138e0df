#pragma once

// Closed-form and recursive least-squares trainers: ELM (minimum-norm least
// squares), ridge R-ELM, incremental I-ELM, error-minimized EM-ELM growth,
// and incremental ridge IR-ELM growth.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "gorelm/linalg.hpp"
#include "gorelm/matrix.hpp"
#include "gorelm/rng.hpp"
#include "gorelm/slfn.hpp"

namespace gorelm {

struct RidgeHyper {
    double c = 1.0;

    void validate() const {
        if (!(c > 0.0)) throw std::invalid_argument("RidgeHyper: c must be positive");
    }
};

inline Mat train_elm(const Mat& h, const Mat& t) {
    if (h.rows() != t.rows())
        throw std::invalid_argument("train_elm: h rows " + std::to_string(h.rows()) +
                                    " vs t rows " + std::to_string(t.rows()));
    return matmul(pinv(h), t);
}

// B solves (HtH + I/C) B = HtT, all target columns jointly.
inline Mat train_relm(const Mat& h, const Mat& t, const RidgeHyper& hyper) {
    hyper.validate();
    if (h.rows() != t.rows())
        throw std::invalid_argument("train_relm: h rows " + std::to_string(h.rows()) +
                                    " vs t rows " + std::to_string(t.rows()));
    const Mat ht = transpose(h);
    return solve_spd(matmul(ht, h), 1.0 / hyper.c, matmul(ht, t));
}

// Grows one random node at a time; node j gets the scalar output weight
// beta_j = H_j . e / (H_j . H_j) and the residual shrinks accordingly.
// Stops at max_nodes or when the residual 2-norm falls to target_error.
// Node draws: per node, one column of input weights then its bias, from a
// single SplitMix64 stream seeded here.
inline SlfnModel train_ielm(const Mat& x, const Mat& t, std::uint64_t seed,
                            std::size_t max_nodes, double target_error) {
    if (t.cols() != 1)
        throw std::invalid_argument("train_ielm: expects a single target column; "
                                    "train each target separately");
    if (x.rows() != t.rows())
        throw std::invalid_argument("train_ielm: x rows " + std::to_string(x.rows()) +
                                    " vs t rows " + std::to_string(t.rows()));
    if (max_nodes == 0) throw std::invalid_argument("train_ielm: max_nodes must be at least 1");
    const std::size_t n = x.cols(), big_n = x.rows();
    SplitMix64 rng(seed);
    SlfnModel model;
    model.hidden.a = Mat(n, 0);
    model.b = Mat(0, 1);
    std::vector<double> e(big_n);
    for (std::size_t i = 0; i < big_n; ++i) e[i] = t(i, 0);
    std::vector<double> acol(n), hcol(big_n);
    for (std::size_t node = 0; node < max_nodes; ++node) {
        for (double& v : acol) v = rng.uniform_pm1();
        const double bias = rng.uniform_pm1();
        double denom = 0.0, num = 0.0;
        for (std::size_t i = 0; i < big_n; ++i) {
            double pre = bias;
            const double* xr = x.row_ptr(i);
            for (std::size_t d = 0; d < n; ++d) pre += xr[d] * acol[d];
            hcol[i] = sigmoid(pre);
            denom += hcol[i] * hcol[i];
            num += hcol[i] * e[i];
        }
        if (denom <= 0.0) {
            std::cerr << "train_ielm: skipping degenerate node draw " << node
                      << " (zero-variance activation column)\n";
            continue;
        }
        const double beta = num / denom;
        Mat acol_m(n, 1);
        for (std::size_t d = 0; d < n; ++d) acol_m(d, 0) = acol[d];
        model.hidden.a = hconcat(model.hidden.a, acol_m);
        model.hidden.nu.push_back(bias);
        model.b = vconcat(model.b, Mat(1, 1, beta));
        double enorm = 0.0;
        for (std::size_t i = 0; i < big_n; ++i) {
            e[i] -= beta * hcol[i];
            enorm += e[i] * e[i];
        }
        if (std::sqrt(enorm) <= target_error) break;
    }
    return model;
}

// Error-minimized growth: cache holds the current H and its pseudoinverse.
struct EmElmCache {
    Mat h;       // N x n_tilde
    Mat pinv_h;  // n_tilde x N
};

inline std::pair<Mat, EmElmCache> init_emelm(const Mat& h1, const Mat& t) {
    if (h1.rows() != t.rows())
        throw std::invalid_argument("init_emelm: h rows " + std::to_string(h1.rows()) +
                                    " vs t rows " + std::to_string(t.rows()));
    EmElmCache cache{h1, pinv(h1)};
    return {matmul(cache.pinv_h, t), cache};
}

// One growth step: with P = I - H H† the update operators are
// D = (P dH)†, U = H† (I - dH D), and the new weights are [U; D] t.
// The new pseudoinverse is exactly the stacked [U; D].
inline std::pair<Mat, EmElmCache> grow_emelm(const EmElmCache& cache, const Mat& delta_h,
                                             const Mat& t) {
    if (delta_h.rows() != cache.h.rows())
        throw std::invalid_argument("grow_emelm: delta_h rows " + std::to_string(delta_h.rows()) +
                                    " do not match cached H rows " + std::to_string(cache.h.rows()));
    if (t.rows() != cache.h.rows())
        throw std::invalid_argument("grow_emelm: t rows " + std::to_string(t.rows()) +
                                    " do not match cached H rows " + std::to_string(cache.h.rows()));
    const Mat proj = matmul(cache.h, cache.pinv_h);  // N x N projector onto range(H)
    Mat residual_block = delta_h - matmul(proj, delta_h);
    const Mat d = pinv(residual_block);
    const Mat u = matmul(cache.pinv_h, Mat::identity(cache.h.rows()) - matmul(delta_h, d));
    EmElmCache next{hconcat(cache.h, delta_h), vconcat(u, d)};
    return {matmul(next.pinv_h, t), next};
}

// Incremental ridge growth: cache holds H and D = (I/C + HtH)^-1 Ht.
struct IrElmCache {
    Mat h;  // N x n_tilde
    Mat d;  // n_tilde x N
};

// Bootstrap from any starting H, including the empty N x 0 network.
inline std::pair<Mat, IrElmCache> init_irelm(const Mat& h, const Mat& t, const RidgeHyper& hyper) {
    hyper.validate();
    if (h.rows() != t.rows())
        throw std::invalid_argument("init_irelm: h rows " + std::to_string(h.rows()) +
                                    " vs t rows " + std::to_string(t.rows()));
    const Mat ht = transpose(h);
    IrElmCache cache{h, solve_spd(matmul(ht, h), 1.0 / hyper.c, ht)};
    return {matmul(cache.d, t), cache};
}

// Adds a single node column v:
//   M = vT (I - H D) / (vT (I - H D) v + 1/C)
//   L = D (I - v M)
// and the new solve operator is the stacked [L; M].
inline std::pair<Mat, IrElmCache> grow_irelm(const IrElmCache& cache, const Mat& v, const Mat& t,
                                             const RidgeHyper& hyper) {
    hyper.validate();
    if (v.cols() != 1 || v.rows() != cache.h.rows())
        throw std::invalid_argument("grow_irelm: v must be " + std::to_string(cache.h.rows()) +
                                    "x1, got " + shape_str(v));
    if (cache.d.rows() != cache.h.cols() || cache.d.cols() != cache.h.rows())
        throw std::invalid_argument("grow_irelm: stale cache, D is " + shape_str(cache.d) +
                                    " for H " + shape_str(cache.h));
    if (t.rows() != cache.h.rows())
        throw std::invalid_argument("grow_irelm: t rows " + std::to_string(t.rows()) +
                                    " do not match cached H rows " + std::to_string(cache.h.rows()));
    const Mat vt = transpose(v);
    const Mat m_num = vt - matmul(matmul(vt, cache.h), cache.d);  // 1 x N
    double denom = 1.0 / hyper.c;
    for (std::size_t i = 0; i < v.rows(); ++i) denom += m_num(0, i) * v(i, 0);
    const Mat m_row = (1.0 / denom) * m_num;
    const Mat l = cache.d - matmul(matmul(cache.d, v), m_row);
    IrElmCache next{hconcat(cache.h, v), vconcat(l, m_row)};
    return {matmul(next.d, t), next};
}

}  // namespace gorelm
