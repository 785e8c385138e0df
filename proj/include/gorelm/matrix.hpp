#pragma once

// Dense row-major double matrix plus the handful of kernels the solvers
// consume. Everything is a pure function; Mat values never alias.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gorelm {

class Mat {
public:
    Mat() = default;

    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Mat m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& r : rows) {
            if (r.size() != m.cols_)
                throw std::invalid_argument("Mat::from_rows: ragged initializer");
            std::size_t j = 0;
            for (double v : r) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline std::string shape_str(const Mat& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_same_shape(const Mat& a, const Mat& b, const char* where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch " +
                                    shape_str(a) + " vs " + shape_str(b));
}

inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions disagree, " +
                                    shape_str(a) + " times " + shape_str(b));
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline Mat transpose(const Mat& a) {
    Mat t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline Mat operator+(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "Mat operator+");
    Mat c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] += b.values()[i];
    return c;
}

inline Mat operator-(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "Mat operator-");
    Mat c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] -= b.values()[i];
    return c;
}

inline Mat& operator+=(Mat& a, const Mat& b) {
    require_same_shape(a, b, "Mat operator+=");
    for (std::size_t i = 0; i < a.size(); ++i) a.values()[i] += b.values()[i];
    return a;
}

inline Mat& operator-=(Mat& a, const Mat& b) {
    require_same_shape(a, b, "Mat operator-=");
    for (std::size_t i = 0; i < a.size(); ++i) a.values()[i] -= b.values()[i];
    return a;
}

inline Mat operator*(double s, const Mat& a) {
    Mat c = a;
    for (double& v : c.values()) v *= s;
    return c;
}

inline Mat operator*(const Mat& a, double s) { return s * a; }

inline Mat hconcat(const Mat& a, const Mat& b) {
    if (a.empty() && a.rows() == 0 && a.cols() == 0) return b;
    if (b.empty() && b.rows() == 0 && b.cols() == 0) return a;
    if (a.rows() != b.rows())
        throw std::invalid_argument("hconcat: row counts disagree, " +
                                    shape_str(a) + " vs " + shape_str(b));
    Mat c(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.row_ptr(i);
        const double* arow = a.row_ptr(i);
        const double* brow = b.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) crow[j] = arow[j];
        for (std::size_t j = 0; j < b.cols(); ++j) crow[a.cols() + j] = brow[j];
    }
    return c;
}

inline Mat vconcat(const Mat& a, const Mat& b) {
    if (a.empty() && a.rows() == 0 && a.cols() == 0) return b;
    if (b.empty() && b.rows() == 0 && b.cols() == 0) return a;
    if (a.cols() != b.cols())
        throw std::invalid_argument("vconcat: column counts disagree, " +
                                    shape_str(a) + " vs " + shape_str(b));
    Mat c(a.rows() + b.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) c(a.rows() + i, j) = b(i, j);
    return c;
}

inline double frobenius_norm(const Mat& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

inline std::vector<double> row_norms(const Mat& a) {
    std::vector<double> out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.row_ptr(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += r[j] * r[j];
        out[i] = std::sqrt(s);
    }
    return out;
}

inline double l21_norm(const Mat& a) {
    double s = 0.0;
    for (double v : row_norms(a)) s += v;
    return s;
}

inline double max_abs(const Mat& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::fabs(v));
    return m;
}

inline bool is_finite(const Mat& a) {
    for (double v : a.values())
        if (!std::isfinite(v)) return false;
    return true;
}

inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Golden-file format: first line "rows cols", then one text row per matrix
// row, entries space separated at 17 significant digits.
inline void write_matrix(std::ostream& os, const Mat& m) {
    os << m.rows() << " " << m.cols() << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) os << " ";
            os << format_full(m(i, j));
        }
        os << "\n";
    }
}

inline Mat read_matrix(std::istream& is) {
    std::size_t rows = 0, cols = 0;
    if (!(is >> rows >> cols))
        throw std::runtime_error("read_matrix: missing or malformed header line");
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (!(is >> m(i, j)))
                throw std::runtime_error("read_matrix: truncated at row " + std::to_string(i));
    return m;
}

}  // namespace gorelm
