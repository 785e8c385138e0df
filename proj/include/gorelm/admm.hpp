#pragma once

// ADMM solvers for the robust ELM family: the 3-block GOR-ELM solver
// (errors E, weights B, sparsity surrogate Z with two scaled duals), the
// 2-block GR-ELM solver, OR-ELM as the single-output specialization, block
// soft thresholding, and the primal/dual residual stopping rule.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "gorelm/linalg.hpp"
#include "gorelm/matrix.hpp"

namespace gorelm {

class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct GorHyper {
    double tau = 1.0;
    double lambda = 1.0;
    double alpha = 0.0;
    double rho = 1.0;
    double eps_abs = 1e-3;
    double eps_rel = 1e-2;
    std::size_t k_max = 1000;

    double eta() const { return (lambda * (1.0 - alpha) + rho) / rho; }

    void validate() const {
        if (!(tau > 0.0)) throw std::invalid_argument("GorHyper: tau must be positive");
        if (!(lambda >= 0.0)) throw std::invalid_argument("GorHyper: lambda must be nonnegative");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw std::invalid_argument("GorHyper: alpha must lie in [0,1]");
        if (!(rho > 0.0)) throw std::invalid_argument("GorHyper: rho must be positive");
        if (!(eps_abs > 0.0)) throw std::invalid_argument("GorHyper: eps_abs must be positive");
        if (!(eps_rel > 0.0)) throw std::invalid_argument("GorHyper: eps_rel must be positive");
        if (k_max == 0) throw std::invalid_argument("GorHyper: k_max must be at least 1");
    }
};

struct GrHyper {
    double c = 1.0;
    double lambda = 1.0;
    double alpha = 0.0;
    double rho = 1.0;
    double eps_abs = 1e-3;
    double eps_rel = 1e-2;
    std::size_t k_max = 1000;

    void validate() const {
        if (!(c > 0.0)) throw std::invalid_argument("GrHyper: c must be positive");
        if (!(lambda >= 0.0)) throw std::invalid_argument("GrHyper: lambda must be nonnegative");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw std::invalid_argument("GrHyper: alpha must lie in [0,1]");
        if (!(rho > 0.0)) throw std::invalid_argument("GrHyper: rho must be positive");
        if (!(eps_abs > 0.0)) throw std::invalid_argument("GrHyper: eps_abs must be positive");
        if (!(eps_rel > 0.0)) throw std::invalid_argument("GrHyper: eps_rel must be positive");
        if (k_max == 0) throw std::invalid_argument("GrHyper: k_max must be at least 1");
    }
};

struct AdmmState {
    Mat b;   // n_tilde x m
    Mat z;   // n_tilde x m
    Mat e;   // N x m, 3-block solver only
    Mat u1;  // N x m, 3-block solver only
    Mat u2;  // n_tilde x m (the single dual for the 2-block solver)
    std::size_t k = 0;
};

struct StopReport {
    double primal_norm = 0.0;
    double dual_norm = 0.0;
    double eps_pri = 0.0;
    double eps_dual = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

// Cached explicit inverse (HtH + eta I)^-1 keyed by eta so a stale cache is
// detectable. Extended incrementally by the growth module.
struct InverseCache {
    Mat m_inv;
    double eta = 0.0;
    std::size_t n_tilde = 0;
};

inline InverseCache make_inverse_cache(const Mat& h, double eta) {
    const Mat ht = transpose(h);
    return InverseCache{invert_spd(matmul(ht, h), eta), eta, h.cols()};
}

// Row-wise shrinkage: each row a becomes (1 - kappa/|a|)+ a; rows at or
// below kappa in 2-norm collapse to exactly zero. kappa = 0 is the identity.
inline Mat block_soft_threshold(const Mat& a, double kappa) {
    if (kappa < 0.0) throw std::invalid_argument("block_soft_threshold: negative kappa");
    if (kappa == 0.0) return a;
    Mat out = a;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double s = 0.0;
        const double* src = a.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s += src[j] * src[j];
        const double norm = std::sqrt(s);
        double* dst = out.row_ptr(i);
        if (norm <= kappa) {
            for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = 0.0;
        } else {
            const double scale = 1.0 - kappa / norm;
            for (std::size_t j = 0; j < a.cols(); ++j) dst[j] *= scale;
        }
    }
    return out;
}

inline void check_cache(const InverseCache& cache, const Mat& h, double eta, const char* where) {
    if (cache.n_tilde != h.cols() || cache.m_inv.rows() != h.cols() ||
        cache.m_inv.cols() != h.cols())
        throw std::invalid_argument(std::string(where) + ": stale inverse cache, built for " +
                                    std::to_string(cache.n_tilde) + " nodes but H has " +
                                    std::to_string(h.cols()));
    if (std::fabs(cache.eta - eta) > 1e-12 * std::max(1.0, std::fabs(eta)))
        throw std::invalid_argument(std::string(where) + ": stale inverse cache, eta " +
                                    format_full(cache.eta) + " but solver needs " +
                                    format_full(eta));
}

// B step: B = (HtH + eta I)^-1 [Ht (T + E - U1) + (Z - U2)].
inline Mat gor_b_update(const Mat& h, const Mat& t, const AdmmState& state,
                        const GorHyper& hyper, const InverseCache& inv_cache) {
    check_cache(inv_cache, h, hyper.eta(), "gor_b_update");
    const Mat rhs = matmul(transpose(h), t + state.e - state.u1) + (state.z - state.u2);
    return matmul(inv_cache.m_inv, rhs);
}

// Z step: row shrinkage of B + U2 at level lambda*alpha/rho.
inline Mat gor_z_update(const Mat& b_next, const Mat& u2, const GorHyper& hyper) {
    return block_soft_threshold(b_next + u2, hyper.lambda * hyper.alpha / hyper.rho);
}

// E step: row shrinkage of the training residual HB - T + U1 at level tau/rho.
inline Mat gor_e_update(const Mat& h, const Mat& b_next, const Mat& t, const Mat& u1,
                        const GorHyper& hyper) {
    return block_soft_threshold(matmul(h, b_next) - t + u1, hyper.tau / hyper.rho);
}

// Scaled dual ascent without a rho multiplier: U1 += (HB - T - E),
// U2 += (B - Z). Expects b, z, e already advanced to k+1.
inline std::pair<Mat, Mat> gor_dual_update(const AdmmState& state, const Mat& h, const Mat& t) {
    return {state.u1 + (matmul(h, state.b) - t - state.e), state.u2 + (state.b - state.z)};
}

// Residual stopping rule over the stacked constraint
//   [-I; 0] E + [H; I] B + [0; -I] Z = [T; 0].
// Primal residual stacks HB - T - E over B - Z; the dual residual is
// rho (-Ht dE - dZ); tolerances follow the sqrt(m*n_tilde) scaling.
inline StopReport gor_residuals(const AdmmState& state_prev, const AdmmState& state_next,
                                const Mat& h, const Mat& t, const GorHyper& hyper) {
    const Mat hb = matmul(h, state_next.b);
    const Mat r_top = hb - t - state_next.e;
    const Mat r_bottom = state_next.b - state_next.z;
    const double fr_top = frobenius_norm(r_top), fr_bottom = frobenius_norm(r_bottom);
    StopReport rep;
    rep.primal_norm = std::sqrt(fr_top * fr_top + fr_bottom * fr_bottom);
    const Mat s = matmul(transpose(h), state_next.e - state_prev.e) +
                  (state_next.z - state_prev.z);
    rep.dual_norm = hyper.rho * frobenius_norm(s);
    const double root = std::sqrt(static_cast<double>(t.cols()) * static_cast<double>(h.cols()));
    const double fhb = frobenius_norm(hb), fb = frobenius_norm(state_next.b);
    const double scale_pri = std::max(std::max(frobenius_norm(state_next.e),
                                               std::sqrt(fhb * fhb + fb * fb)),
                                      std::max(frobenius_norm(state_next.z), frobenius_norm(t)));
    rep.eps_pri = root * hyper.eps_abs + hyper.eps_rel * scale_pri;
    rep.eps_dual = root * hyper.eps_abs +
                   hyper.eps_rel * hyper.rho *
                       frobenius_norm(matmul(transpose(h), state_next.u1) + state_next.u2);
    rep.converged = rep.primal_norm < rep.eps_pri && rep.dual_norm < rep.eps_dual;
    rep.iterations = state_next.k;
    return rep;
}

inline double gor_objective(const Mat& h, const Mat& t, const Mat& b, const Mat& z,
                            const GorHyper& hyper) {
    const double fb = frobenius_norm(b);
    return hyper.tau * l21_norm(matmul(h, b) - t) + hyper.lambda * hyper.alpha * l21_norm(z) +
           0.5 * hyper.lambda * (1.0 - hyper.alpha) * fb * fb;
}

namespace detail {

inline void write_trace(std::ostream* trace, std::size_t iteration, const StopReport& rep,
                        double objective) {
    if (!trace) return;
    *trace << iteration << "," << format_full(rep.primal_norm) << ","
           << format_full(rep.dual_norm) << "," << format_full(objective) << "\n";
}

inline void check_state_shapes(const AdmmState& st, std::size_t big_n, std::size_t n_tilde,
                               std::size_t m, bool three_block, const char* where) {
    auto bad = [&](const Mat& mat, std::size_t r, std::size_t c) {
        return mat.rows() != r || mat.cols() != c;
    };
    if (bad(st.b, n_tilde, m) || bad(st.z, n_tilde, m) || bad(st.u2, n_tilde, m) ||
        (three_block && (bad(st.e, big_n, m) || bad(st.u1, big_n, m))))
        throw std::invalid_argument(std::string(where) + ": warm-start state shapes do not match "
                                                         "the problem dimensions");
}

}  // namespace detail

struct GorTrainResult {
    Mat b;
    StopReport report;
    AdmmState state;
};

// 3-block ADMM, update order B -> Z -> E -> duals, zero cold start. The
// (HtH + eta I)^-1 factor is computed once per call unless a prebuilt cache
// is supplied (the growth solver extends one across batches).
// stop_on_residuals=false runs exactly k_max iterations (the OR-ELM rule).
inline GorTrainResult train_gorelm(const Mat& h, const Mat& t, const GorHyper& hyper,
                                   const std::optional<AdmmState>& warm = std::nullopt,
                                   const InverseCache* cache = nullptr,
                                   std::ostream* trace = nullptr,
                                   bool stop_on_residuals = true) {
    hyper.validate();
    if (h.rows() != t.rows())
        throw std::invalid_argument("train_gorelm: h rows " + std::to_string(h.rows()) +
                                    " vs t rows " + std::to_string(t.rows()));
    if (h.rows() == 0 || h.cols() == 0 || t.cols() == 0)
        throw std::invalid_argument("train_gorelm: empty problem " + shape_str(h) + " / " +
                                    shape_str(t));
    const std::size_t big_n = h.rows(), n_tilde = h.cols(), m = t.cols();
    InverseCache local;
    if (cache) {
        check_cache(*cache, h, hyper.eta(), "train_gorelm");
    } else {
        local = make_inverse_cache(h, hyper.eta());
        cache = &local;
    }
    AdmmState st;
    if (warm) {
        detail::check_state_shapes(*warm, big_n, n_tilde, m, true, "train_gorelm");
        st = *warm;
    } else {
        st.b = Mat(n_tilde, m);
        st.z = Mat(n_tilde, m);
        st.e = Mat(big_n, m);
        st.u1 = Mat(big_n, m);
        st.u2 = Mat(n_tilde, m);
    }
    StopReport rep;
    std::size_t performed = 0;
    for (std::size_t iter = 1; iter <= hyper.k_max; ++iter) {
        AdmmState prev = st;
        st.b = gor_b_update(h, t, st, hyper, *cache);
        st.z = gor_z_update(st.b, st.u2, hyper);
        st.e = gor_e_update(h, st.b, t, st.u1, hyper);
        auto duals = gor_dual_update(st, h, t);
        st.u1 = std::move(duals.first);
        st.u2 = std::move(duals.second);
        st.k += 1;
        performed = iter;
        if (!is_finite(st.b) || !is_finite(st.z) || !is_finite(st.e) || !is_finite(st.u1) ||
            !is_finite(st.u2))
            throw DivergenceError("train_gorelm: diverged at iteration " + std::to_string(st.k) +
                                  " (non-finite state)");
        rep = gor_residuals(prev, st, h, t, hyper);
        detail::write_trace(trace, st.k, rep, gor_objective(h, t, st.b, st.z, hyper));
        if (stop_on_residuals && rep.converged) break;
    }
    rep.iterations = performed;
    return GorTrainResult{st.b, rep, st};
}

inline double gr_objective(const Mat& h, const Mat& t, const Mat& b, const Mat& z,
                           const GrHyper& hyper) {
    const double fit = frobenius_norm(matmul(h, b) - t);
    const double fb = frobenius_norm(b);
    return 0.5 * hyper.c * fit * fit + hyper.lambda * hyper.alpha * l21_norm(z) +
           0.5 * hyper.lambda * (1.0 - hyper.alpha) * fb * fb;
}

// 2-block ADMM on the split B = Z:
//   B = (C HtH + (lambda(1-alpha)+rho) I)^-1 (C HtT + rho (Z - U))
//   Z = shrink(B + U), U += (B - Z)
// with the residual rule restricted to the single constraint.
inline GorTrainResult train_grelm(const Mat& h, const Mat& t, const GrHyper& hyper,
                                  const std::optional<AdmmState>& warm = std::nullopt,
                                  std::ostream* trace = nullptr) {
    hyper.validate();
    if (h.rows() != t.rows())
        throw std::invalid_argument("train_grelm: h rows " + std::to_string(h.rows()) +
                                    " vs t rows " + std::to_string(t.rows()));
    if (h.rows() == 0 || h.cols() == 0 || t.cols() == 0)
        throw std::invalid_argument("train_grelm: empty problem " + shape_str(h) + " / " +
                                    shape_str(t));
    const std::size_t n_tilde = h.cols(), m = t.cols();
    const Mat ht = transpose(h);
    const double shift = hyper.lambda * (1.0 - hyper.alpha) + hyper.rho;
    const Mat inv = invert_spd(hyper.c * matmul(ht, h), shift);
    const Mat c_htt = hyper.c * matmul(ht, t);
    AdmmState st;
    if (warm) {
        detail::check_state_shapes(*warm, h.rows(), n_tilde, m, false, "train_grelm");
        st = *warm;
    } else {
        st.b = Mat(n_tilde, m);
        st.z = Mat(n_tilde, m);
        st.u2 = Mat(n_tilde, m);
    }
    const double kappa = hyper.lambda * hyper.alpha / hyper.rho;
    const double root = std::sqrt(static_cast<double>(m) * static_cast<double>(n_tilde));
    StopReport rep;
    std::size_t performed = 0;
    for (std::size_t iter = 1; iter <= hyper.k_max; ++iter) {
        const Mat z_prev = st.z;
        st.b = matmul(inv, c_htt + hyper.rho * (st.z - st.u2));
        st.z = block_soft_threshold(st.b + st.u2, kappa);
        st.u2 += st.b - st.z;
        st.k += 1;
        performed = iter;
        if (!is_finite(st.b) || !is_finite(st.z) || !is_finite(st.u2))
            throw DivergenceError("train_grelm: diverged at iteration " + std::to_string(st.k) +
                                  " (non-finite state)");
        rep.primal_norm = frobenius_norm(st.b - st.z);
        rep.dual_norm = hyper.rho * frobenius_norm(st.z - z_prev);
        rep.eps_pri = root * hyper.eps_abs +
                      hyper.eps_rel * std::max(frobenius_norm(st.b), frobenius_norm(st.z));
        rep.eps_dual = root * hyper.eps_abs + hyper.eps_rel * hyper.rho * frobenius_norm(st.u2);
        rep.converged = rep.primal_norm < rep.eps_pri && rep.dual_norm < rep.eps_dual;
        rep.iterations = st.k;
        detail::write_trace(trace, st.k, rep, gr_objective(h, t, st.b, st.z, hyper));
        if (rep.converged) break;
    }
    rep.iterations = performed;
    return GorTrainResult{st.b, rep, st};
}

// Single-output robust solver: the 3-block solver at m=1 with tau=1,
// alpha=0, lambda=1/c, rho=1, run for a fixed iteration budget.
inline Mat train_orelm(const Mat& h, const Mat& t_col, double c, std::size_t iterations = 20) {
    if (t_col.cols() != 1)
        throw std::invalid_argument("train_orelm: t has " + std::to_string(t_col.cols()) +
                                    " columns; train one target column at a time");
    if (!(c > 0.0)) throw std::invalid_argument("train_orelm: c must be positive");
    if (iterations == 0) throw std::invalid_argument("train_orelm: iterations must be at least 1");
    GorHyper hyper;
    hyper.tau = 1.0;
    hyper.lambda = 1.0 / c;
    hyper.alpha = 0.0;
    hyper.rho = 1.0;
    hyper.k_max = iterations;
    return train_gorelm(h, t_col, hyper, std::nullopt, nullptr, nullptr, false).b;
}

}  // namespace gorelm
