#pragma once

// Symmetric positive-definite solves (Cholesky), explicit SPD inverse for
// the growth cache, and a Moore-Penrose pseudoinverse built on one-sided
// Jacobi SVD. No external linear-algebra dependency.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gorelm/matrix.hpp"

namespace gorelm {

class FactorizationError : public std::runtime_error {
public:
    explicit FactorizationError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require_symmetric(const Mat& g, const char* where) {
    if (g.rows() != g.cols())
        throw std::invalid_argument(std::string(where) + ": matrix not square, " + shape_str(g));
    const double scale = std::max(max_abs(g), 1.0);
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = i + 1; j < g.cols(); ++j)
            if (std::fabs(g(i, j) - g(j, i)) > 1e-10 * scale)
                throw std::invalid_argument(std::string(where) + ": matrix not symmetric at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
}

// Lower-triangular Cholesky factor of g + shift*I.
inline Mat cholesky(const Mat& g, double shift, const char* where) {
    const std::size_t n = g.rows();
    Mat l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = g(j, j) + shift;
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d))
            throw FactorizationError(std::string(where) + ": matrix not positive definite " +
                                     "(pivot " + std::to_string(j) + " = " + format_full(d) + ")");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = g(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

// Solves (L Lᵀ) X = rhs in place of X.
inline Mat cholesky_solve(const Mat& l, const Mat& rhs) {
    const std::size_t n = l.rows();
    Mat x = rhs;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
            x(i, c) = s / l(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
            x(ii, c) = s / l(ii, ii);
        }
    }
    return x;
}

inline Mat shifted(const Mat& g, double shift) {
    Mat a = g;
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += shift;
    return a;
}

}  // namespace detail

// Solve (g + shift*I) X = rhs through a Cholesky factorization with one
// iterative-refinement pass.
inline Mat solve_spd(const Mat& g, double shift, const Mat& rhs) {
    detail::require_symmetric(g, "solve_spd");
    if (shift < 0.0) throw std::invalid_argument("solve_spd: negative shift");
    if (rhs.rows() != g.rows())
        throw std::invalid_argument("solve_spd: rhs rows " + std::to_string(rhs.rows()) +
                                    " do not match system size " + std::to_string(g.rows()));
    const Mat l = detail::cholesky(g, shift, "solve_spd");
    const Mat a = detail::shifted(g, shift);
    Mat x = detail::cholesky_solve(l, rhs);
    Mat r = rhs - matmul(a, x);
    x += detail::cholesky_solve(l, r);
    return x;
}

// Explicit inverse of g + shift*I. Kept separate from solve_spd because the
// node-growth cache needs the materialized inverse for its block extension.
inline Mat invert_spd(const Mat& g, double shift) {
    detail::require_symmetric(g, "invert_spd");
    if (shift < 0.0) throw std::invalid_argument("invert_spd: negative shift");
    const Mat l = detail::cholesky(g, shift, "invert_spd");
    const Mat a = detail::shifted(g, shift);
    Mat x = detail::cholesky_solve(l, Mat::identity(g.rows()));
    Mat r = Mat::identity(g.rows()) - matmul(a, x);
    x += detail::cholesky_solve(l, r);
    // Symmetrize: the inverse of a symmetric matrix is symmetric and the
    // downstream Schur extension relies on that exactly.
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = i + 1; j < x.cols(); ++j) {
            const double v = 0.5 * (x(i, j) + x(j, i));
            x(i, j) = v;
            x(j, i) = v;
        }
    return x;
}

namespace detail {

struct Svd {
    Mat u;                       // rows x k, orthonormal columns for nonzero sigma
    std::vector<double> sigma;   // k = cols(a)
    Mat v;                       // cols x cols, orthogonal
};

// One-sided Jacobi on a tall matrix (rows >= cols): orthogonalize column
// pairs of W = A until convergence, accumulating rotations in V.
inline Svd jacobi_svd_tall(const Mat& a) {
    const std::size_t r = a.rows(), c = a.cols();
    Mat w = a;
    Mat v = Mat::identity(c);
    const double tol = 1e-15;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < c; ++p) {
            for (std::size_t q = p + 1; q < c; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < r; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if (app == 0.0 || aqq == 0.0) continue;
                if (std::fabs(apq) <= tol * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t i = 0; i < r; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = cs * wp - sn * wq;
                    w(i, q) = sn * wp + cs * wq;
                }
                for (std::size_t i = 0; i < c; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = cs * vp - sn * vq;
                    v(i, q) = sn * vp + cs * vq;
                }
            }
        }
        if (!rotated) break;
    }
    Svd out;
    out.sigma.assign(c, 0.0);
    out.u = Mat(r, c);
    out.v = v;
    for (std::size_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < r; ++i) s += w(i, j) * w(i, j);
        const double sj = std::sqrt(s);
        out.sigma[j] = sj;
        if (sj > 0.0)
            for (std::size_t i = 0; i < r; ++i) out.u(i, j) = w(i, j) / sj;
    }
    return out;
}

}  // namespace detail

// Moore-Penrose pseudoinverse. Singular values at or below
// max(rows, cols) * sigma_max * 1e-12 are treated as zero.
inline Mat pinv(const Mat& a) {
    if (a.rows() == 0 || a.cols() == 0) return Mat(a.cols(), a.rows());
    if (a.rows() < a.cols()) return transpose(pinv(transpose(a)));
    const detail::Svd svd = detail::jacobi_svd_tall(a);
    double smax = 0.0;
    for (double s : svd.sigma) smax = std::max(smax, s);
    const double cutoff = static_cast<double>(std::max(a.rows(), a.cols())) * smax * 1e-12;
    Mat out(a.cols(), a.rows());
    for (std::size_t j = 0; j < svd.sigma.size(); ++j) {
        const double sj = svd.sigma[j];
        if (sj <= cutoff || sj == 0.0) continue;
        const double inv = 1.0 / sj;
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double vij = svd.v(i, j) * inv;
            if (vij == 0.0) continue;
            for (std::size_t k = 0; k < a.rows(); ++k) out(i, k) += vij * svd.u(k, j);
        }
    }
    return out;
}

}  // namespace gorelm
