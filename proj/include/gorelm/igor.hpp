#pragma once

// Incremental GOR-ELM: grow the hidden layer in batches, warm-start the
// ADMM state with zero-padded rows for the new nodes, and extend the cached
// (HtH + eta I)^-1 through the Schur-complement block-inverse identity
// instead of refactorizing from scratch.

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gorelm/admm.hpp"
#include "gorelm/linalg.hpp"
#include "gorelm/matrix.hpp"
#include "gorelm/metrics.hpp"
#include "gorelm/rng.hpp"
#include "gorelm/slfn.hpp"

namespace gorelm {

struct GrowthPolicy {
    std::size_t batch_size = 100;
    std::size_t max_total_nodes = 1000;
    std::optional<double> target_metric;      // stop once train aRRMSE falls to this
    std::optional<double> pruned_ratio_stop;  // stop once this fraction of nodes is pruned

    void validate() const {
        if (batch_size == 0) throw std::invalid_argument("GrowthPolicy: batch_size must be >= 1");
        if (max_total_nodes < batch_size)
            throw std::invalid_argument("GrowthPolicy: max_total_nodes " +
                                        std::to_string(max_total_nodes) +
                                        " is below the initial node count " +
                                        std::to_string(batch_size) + "; no stop is reachable");
        if (target_metric && !(*target_metric >= 0.0))
            throw std::invalid_argument("GrowthPolicy: target_metric must be nonnegative");
        if (pruned_ratio_stop && !(*pruned_ratio_stop > 0.0 && *pruned_ratio_stop < 1.0))
            throw std::invalid_argument("GrowthPolicy: pruned_ratio_stop must lie in (0,1)");
    }
};

struct GrowthLogRow {
    std::size_t batch_index = 0;
    std::size_t n_tilde = 0;
    std::size_t admm_iterations = 0;
    double primal_norm = 0.0;
    double dual_norm = 0.0;
    double train_arrmse = 0.0;
    std::size_t pruned_nodes = 0;
    double elapsed_seconds = 0.0;
};

inline std::size_t zero_row_count(const Mat& z) {
    std::size_t zero_rows = 0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        bool all_zero = true;
        const double* r = z.row_ptr(i);
        for (std::size_t j = 0; j < z.cols(); ++j)
            if (r[j] != 0.0) {
                all_zero = false;
                break;
            }
        if (all_zero) ++zero_rows;
    }
    return zero_rows;
}

inline double pruned_ratio(const Mat& z) {
    if (z.rows() == 0) return 0.0;
    return static_cast<double>(zero_row_count(z)) / static_cast<double>(z.rows());
}

// Block-inverse extension: with J = H_old^T H_old + eta I already inverted,
// K = H_old^T dH and L = dH^T dH + eta I, the enlarged inverse is
//   [ J' K' ]    J' = J^-1 + J^-1 K Sc^-1 K^T J^-1
//   [ K'^T L' ]  K' = -J^-1 K Sc^-1,  L' = Sc^-1,  Sc = L - K^T J^-1 K.
inline InverseCache schur_extend(const InverseCache& cache, const Mat& h_old,
                                 const Mat& delta_h) {
    if (cache.n_tilde != h_old.cols() || cache.m_inv.rows() != h_old.cols())
        throw std::invalid_argument("schur_extend: cache built for " +
                                    std::to_string(cache.n_tilde) + " nodes but h_old has " +
                                    std::to_string(h_old.cols()));
    if (delta_h.rows() != h_old.rows())
        throw std::invalid_argument("schur_extend: delta_h rows " +
                                    std::to_string(delta_h.rows()) + " do not match h_old rows " +
                                    std::to_string(h_old.rows()));
    if (delta_h.cols() == 0) return cache;
    const std::size_t old_n = h_old.cols(), add_n = delta_h.cols();
    const Mat k = matmul(transpose(h_old), delta_h);
    Mat l = matmul(transpose(delta_h), delta_h);
    for (std::size_t i = 0; i < add_n; ++i) l(i, i) += cache.eta;
    const Mat jinv_k = matmul(cache.m_inv, k);
    Mat sc = l - matmul(transpose(k), jinv_k);
    // The complement is symmetric in exact arithmetic but its entries are
    // small differences of large products, so rounding asymmetry must be
    // averaged out before the SPD inversion sees it.
    for (std::size_t i = 0; i < add_n; ++i)
        for (std::size_t j = i + 1; j < add_n; ++j) {
            const double v = 0.5 * (sc(i, j) + sc(j, i));
            sc(i, j) = v;
            sc(j, i) = v;
        }
    Mat l_new;
    try {
        l_new = invert_spd(sc, 0.0);
    } catch (const FactorizationError& err) {
        throw FactorizationError(std::string("schur_extend: Schur complement lost positive "
                                             "definiteness (") +
                                 err.what() + ")");
    }
    const Mat k_new = -1.0 * matmul(jinv_k, l_new);
    const Mat j_new = cache.m_inv + matmul(matmul(jinv_k, l_new), transpose(jinv_k));
    Mat out(old_n + add_n, old_n + add_n);
    for (std::size_t i = 0; i < old_n; ++i) {
        out(i, i) = j_new(i, i);
        for (std::size_t j = i + 1; j < old_n; ++j) {
            const double v = 0.5 * (j_new(i, j) + j_new(j, i));
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    for (std::size_t i = 0; i < old_n; ++i)
        for (std::size_t j = 0; j < add_n; ++j) {
            out(i, old_n + j) = k_new(i, j);
            out(old_n + j, i) = k_new(i, j);
        }
    for (std::size_t i = 0; i < add_n; ++i)
        for (std::size_t j = 0; j < add_n; ++j) out(old_n + i, old_n + j) = l_new(i, j);
    return InverseCache{out, cache.eta, old_n + add_n};
}

struct IgorResult {
    SlfnModel model;
    std::vector<GrowthLogRow> log;
    StopReport report;
    AdmmState state;
};

// Batch growth loop. Stop conditions are checked after each batch in fixed
// precedence: max_total_nodes, then target_metric, then pruned_ratio_stop.
// Batch s draws its nodes from mix_seed(seed, s) so any batch reproduces in
// isolation.
inline IgorResult train_igorelm(const Mat& x, const Mat& t, const GorHyper& hyper,
                                const GrowthPolicy& policy, std::uint64_t seed) {
    policy.validate();
    hyper.validate();
    if (x.rows() != t.rows())
        throw std::invalid_argument("train_igorelm: x rows " + std::to_string(x.rows()) +
                                    " vs t rows " + std::to_string(t.rows()));
    using clock = std::chrono::steady_clock;
    HiddenLayer layer = init_random(seed, x.cols(), policy.batch_size);
    Mat h = hidden_output(layer, x);
    InverseCache cache = make_inverse_cache(h, hyper.eta());
    std::optional<AdmmState> warm;
    IgorResult result;
    std::size_t batch_index = 0;
    for (;;) {
        const auto started = clock::now();
        GorTrainResult fit = train_gorelm(h, t, hyper, warm, &cache);
        const double elapsed = std::chrono::duration<double>(clock::now() - started).count();
        const double train_err = arrmse(matmul(h, fit.b), t).arrmse;
        const std::size_t pruned = zero_row_count(fit.state.z);
        result.log.push_back(GrowthLogRow{batch_index, layer.nodes(), fit.report.iterations,
                                          fit.report.primal_norm, fit.report.dual_norm, train_err,
                                          pruned, elapsed});
        result.report = fit.report;
        result.state = fit.state;
        result.model = SlfnModel{layer, fit.b};
        if (layer.nodes() >= policy.max_total_nodes) break;
        if (policy.target_metric && train_err <= *policy.target_metric) break;
        if (policy.pruned_ratio_stop && pruned_ratio(fit.state.z) >= *policy.pruned_ratio_stop)
            break;
        const std::size_t delta =
            std::min(policy.batch_size, policy.max_total_nodes - layer.nodes());
        ++batch_index;
        HiddenLayer grown = append_nodes(layer, mix_seed(seed, batch_index), delta);
        const HiddenLayer fresh = slice_nodes(grown, layer.nodes(), grown.nodes());
        const Mat delta_h = hidden_output(fresh, x);
        cache = schur_extend(cache, h, delta_h);
        h = hconcat(h, delta_h);
        layer = grown;
        AdmmState padded = fit.state;
        const Mat pad(delta, t.cols());
        padded.b = vconcat(padded.b, pad);
        padded.z = vconcat(padded.z, pad);
        padded.u2 = vconcat(padded.u2, pad);
        warm = padded;
    }
    return result;
}

inline void write_growth_log(std::ostream& os, const std::vector<GrowthLogRow>& log) {
    os << "batch_index,n_tilde,admm_iterations,primal_norm,dual_norm,train_arrmse,"
          "pruned_nodes,elapsed_seconds\n";
    for (const GrowthLogRow& row : log) {
        os << row.batch_index << "," << row.n_tilde << "," << row.admm_iterations << ","
           << format_full(row.primal_norm) << "," << format_full(row.dual_norm) << ","
           << format_full(row.train_arrmse) << "," << row.pruned_nodes << ","
           << format_full(row.elapsed_seconds) << "\n";
    }
}

}  // namespace gorelm
