#pragma once

// Dataset ingestion (numeric ARFF subset, numeric CSV), seeded train/test
// splitting, min-max normalization to [-1,1] fitted on the training split,
// and boxplot-IQR target contamination with a reproducible manifest.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gorelm/matrix.hpp"
#include "gorelm/rng.hpp"

namespace gorelm {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct Dataset {
    Mat x;  // N x n features
    Mat t;  // N x m targets
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;

    std::size_t samples() const { return x.rows(); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline bool starts_with_keyword(const std::string& line, const char* keyword) {
    const std::string low = lower(line);
    const std::size_t n = std::string(keyword).size();
    if (low.compare(0, n, keyword) != 0) return false;
    return low.size() == n || std::isspace(static_cast<unsigned char>(low[n]));
}

inline double parse_number(const std::string& token, std::size_t line, const std::string& where) {
    const std::string t = trim(token);
    if (t.empty()) throw ParseError(where + ": empty value", line);
    if (t == "?") throw ParseError(where + ": missing value '?' not supported", line);
    const char* begin = t.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + t.size())
        throw ParseError(where + ": not a number: '" + t + "'", line);
    return v;
}

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline Dataset assemble(std::vector<std::vector<double>>& rows,
                        std::vector<std::string>& names, std::size_t n_targets) {
    const std::size_t total = names.size();
    if (n_targets == 0 || n_targets >= total)
        throw std::invalid_argument("dataset: target count " + std::to_string(n_targets) +
                                    " must lie in [1, " + std::to_string(total) + ")");
    const std::size_t n_features = total - n_targets;
    Dataset ds;
    ds.x = Mat(rows.size(), n_features);
    ds.t = Mat(rows.size(), n_targets);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < n_features; ++j) ds.x(i, j) = rows[i][j];
        for (std::size_t j = 0; j < n_targets; ++j) ds.t(i, j) = rows[i][n_features + j];
    }
    ds.feature_names.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(n_features));
    ds.target_names.assign(names.begin() + static_cast<std::ptrdiff_t>(n_features), names.end());
    return ds;
}

}  // namespace detail

// Numeric ARFF subset: '%' comments, case-insensitive @relation/@attribute/
// @data, numeric|real|integer attributes only, comma-separated data rows.
// The last n_targets attributes are the targets.
inline Dataset parse_arff(std::istream& is, std::size_t n_targets) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    bool in_data = false;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '%') continue;
        if (!in_data && line[0] == '@') {
            if (detail::starts_with_keyword(line, "@relation")) continue;
            if (detail::starts_with_keyword(line, "@data")) {
                if (names.empty()) throw ParseError("@data before any @attribute", line_no);
                in_data = true;
                continue;
            }
            if (detail::starts_with_keyword(line, "@attribute")) {
                std::string rest = detail::trim(line.substr(std::string("@attribute").size()));
                if (rest.empty()) throw ParseError("@attribute without a name", line_no);
                std::string name;
                std::size_t pos = 0;
                if (rest[0] == '\'' || rest[0] == '"') {
                    const char quote = rest[0];
                    const std::size_t close = rest.find(quote, 1);
                    if (close == std::string::npos)
                        throw ParseError("unterminated quoted attribute name", line_no);
                    name = rest.substr(1, close - 1);
                    pos = close + 1;
                } else {
                    while (pos < rest.size() &&
                           !std::isspace(static_cast<unsigned char>(rest[pos])))
                        ++pos;
                    name = rest.substr(0, pos);
                }
                const std::string type = detail::lower(detail::trim(rest.substr(pos)));
                if (type != "numeric" && type != "real" && type != "integer")
                    throw ParseError("unsupported attribute type '" + type +
                                         "' for attribute '" + name +
                                         "' (only numeric attributes are supported)",
                                     line_no);
                names.push_back(name);
                continue;
            }
            throw ParseError("unrecognized directive: " + line, line_no);
        }
        if (!in_data) throw ParseError("data row before @data: " + line, line_no);
        const std::vector<std::string> fields = detail::split_fields(line, ',');
        if (fields.size() != names.size())
            throw ParseError("row has " + std::to_string(fields.size()) + " values, expected " +
                                 std::to_string(names.size()),
                             line_no);
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j)
            row[j] = detail::parse_number(fields[j], line_no, "attribute " + std::to_string(j + 1));
        rows.push_back(std::move(row));
    }
    if (!in_data) throw ParseError("missing @data section", line_no);
    if (rows.empty()) throw ParseError("no data rows", line_no);
    return detail::assemble(rows, names, n_targets);
}

// Rectangular numeric CSV; the last n_targets columns are the targets.
// Without a header, columns get synthetic names x1..xn / t1..tm.
inline Dataset parse_csv(std::istream& is, std::size_t n_targets, bool has_header = true,
                         char delimiter = ',') {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::string raw;
    std::size_t line_no = 0;
    bool header_pending = has_header;
    while (std::getline(is, raw)) {
        ++line_no;
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_fields(line, delimiter);
        if (header_pending) {
            for (const std::string& f : fields) names.push_back(detail::trim(f));
            header_pending = false;
            continue;
        }
        if (!names.empty() && fields.size() != names.size())
            throw ParseError("row has " + std::to_string(fields.size()) + " values, expected " +
                                 std::to_string(names.size()),
                             line_no);
        if (!rows.empty() && fields.size() != rows.front().size())
            throw ParseError("row has " + std::to_string(fields.size()) + " values, expected " +
                                 std::to_string(rows.front().size()),
                             line_no);
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j)
            row[j] = detail::parse_number(fields[j], line_no, "column " + std::to_string(j + 1));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no data rows", line_no);
    if (names.empty()) {
        const std::size_t total = rows.front().size();
        if (n_targets == 0 || n_targets >= total)
            throw std::invalid_argument("parse_csv: target count " + std::to_string(n_targets) +
                                        " must lie in [1, " + std::to_string(total) + ")");
        for (std::size_t j = 0; j < total - n_targets; ++j)
            names.push_back("x" + std::to_string(j + 1));
        for (std::size_t j = 0; j < n_targets; ++j) names.push_back("t" + std::to_string(j + 1));
    }
    return detail::assemble(rows, names, n_targets);
}

inline void write_csv(std::ostream& os, const Dataset& ds, char delimiter = ',') {
    for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
        if (j) os << delimiter;
        os << ds.feature_names[j];
    }
    for (const std::string& name : ds.target_names) os << delimiter << name;
    os << "\n";
    for (std::size_t i = 0; i < ds.samples(); ++i) {
        for (std::size_t j = 0; j < ds.x.cols(); ++j) {
            if (j) os << delimiter;
            os << format_full(ds.x(i, j));
        }
        for (std::size_t j = 0; j < ds.t.cols(); ++j)
            os << delimiter << format_full(ds.t(i, j));
        os << "\n";
    }
}

namespace detail {

inline Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.x = Mat(idx.size(), ds.x.cols());
    out.t = Mat(idx.size(), ds.t.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < ds.x.cols(); ++j) out.x(i, j) = ds.x(idx[i], j);
        for (std::size_t j = 0; j < ds.t.cols(); ++j) out.t(i, j) = ds.t(idx[i], j);
    }
    out.feature_names = ds.feature_names;
    out.target_names = ds.target_names;
    return out;
}

}  // namespace detail

// Seeded Fisher-Yates shuffle, then split at ceil(train_fraction * N).
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction,
                                                 std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("split_dataset: train_fraction must lie strictly in (0,1)");
    const std::size_t n = ds.samples();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    SplitMix64 rng(seed);
    for (std::size_t i = n; i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    const std::size_t n_train =
        static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n)
        throw std::invalid_argument("split_dataset: split leaves an empty part (" +
                                    std::to_string(n_train) + " train of " + std::to_string(n) +
                                    ")");
    const std::vector<std::size_t> train_idx(idx.begin(),
                                             idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<std::size_t> test_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                                            idx.end());
    return {detail::take_rows(ds, train_idx), detail::take_rows(ds, test_idx)};
}

struct ColumnRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct NormalizationMap {
    std::vector<ColumnRange> features;
    std::vector<ColumnRange> targets;
};

namespace detail {

inline std::vector<ColumnRange> column_ranges(const Mat& m) {
    std::vector<ColumnRange> out(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double lo = m(0, j), hi = m(0, j);
        for (std::size_t i = 1; i < m.rows(); ++i) {
            lo = std::min(lo, m(i, j));
            hi = std::max(hi, m(i, j));
        }
        out[j] = ColumnRange{lo, hi};
    }
    return out;
}

inline void map_columns(Mat& m, const std::vector<ColumnRange>& ranges, bool forward,
                        const char* where) {
    if (m.cols() != ranges.size())
        throw std::invalid_argument(std::string(where) + ": map has " +
                                    std::to_string(ranges.size()) + " columns, data has " +
                                    std::to_string(m.cols()));
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const double span = ranges[j].hi - ranges[j].lo;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (forward) {
                m(i, j) = span == 0.0
                              ? 0.0
                              : 2.0 * (m(i, j) - ranges[j].lo) / span - 1.0;
            } else {
                m(i, j) = ranges[j].lo + (m(i, j) + 1.0) * 0.5 * span;
            }
        }
    }
}

}  // namespace detail

// Per-column [min,max] -> [-1,1], fitted on the training split only.
// Zero-range columns map to 0.
inline NormalizationMap fit_normalizer(const Dataset& train) {
    if (train.samples() == 0) throw std::invalid_argument("fit_normalizer: empty dataset");
    return NormalizationMap{detail::column_ranges(train.x), detail::column_ranges(train.t)};
}

// Applies the training-split affine map; values outside the training range
// land outside [-1,1] and are not clamped.
inline Dataset apply_normalizer(const NormalizationMap& map, const Dataset& ds) {
    Dataset out = ds;
    detail::map_columns(out.x, map.features, true, "apply_normalizer");
    detail::map_columns(out.t, map.targets, true, "apply_normalizer");
    return out;
}

inline Dataset invert_normalizer(const NormalizationMap& map, const Dataset& ds) {
    Dataset out = ds;
    detail::map_columns(out.x, map.features, false, "invert_normalizer");
    detail::map_columns(out.t, map.targets, false, "invert_normalizer");
    return out;
}

// Linear-interpolation quantile on order statistics with positions
// p(k) = (k-1)/(N-1); q in [0,1].
inline double type7_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("type7_quantile: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("type7_quantile: q outside [0,1]");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

struct ContaminationSpec {
    double ratio = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> q1;
    std::vector<double> q3;
    std::vector<double> iqr;
};

// Per-target-column quartiles; ratio and seed are left for the caller.
inline ContaminationSpec boxplot_stats(const Mat& train_targets) {
    if (train_targets.rows() < 2)
        throw std::invalid_argument("boxplot_stats: need at least 2 rows, have " +
                                    std::to_string(train_targets.rows()));
    ContaminationSpec spec;
    spec.q1.resize(train_targets.cols());
    spec.q3.resize(train_targets.cols());
    spec.iqr.resize(train_targets.cols());
    std::vector<double> col(train_targets.rows());
    for (std::size_t j = 0; j < train_targets.cols(); ++j) {
        for (std::size_t i = 0; i < train_targets.rows(); ++i) col[i] = train_targets(i, j);
        spec.q1[j] = type7_quantile(col, 0.25);
        spec.q3[j] = type7_quantile(col, 0.75);
        spec.iqr[j] = spec.q3[j] - spec.q1[j];
    }
    return spec;
}

struct ContaminationRecord {
    std::size_t row = 0;
    std::size_t target_column = 0;
    double old_value = 0.0;
    double new_value = 0.0;
    bool high_side = false;
};

struct ContaminationResult {
    Dataset data;
    std::vector<std::size_t> rows;
    std::vector<ContaminationRecord> manifest;
};

// Replaces every target attribute of floor(ratio*N) seeded-chosen distinct
// rows with draws from U(Q1-3IQR, Q1-1.5IQR) or U(Q3+1.5IQR, Q3+3IQR), the
// side chosen uniformly per (row, attribute). Stream order: one shuffle for
// the row selection, then per selected row (ascending) and per target
// column (ascending), one side bit followed by one uniform draw.
inline ContaminationResult contaminate(const Dataset& train, const ContaminationSpec& spec) {
    if (!(spec.ratio >= 0.0 && spec.ratio <= 1.0))
        throw std::invalid_argument("contaminate: ratio outside [0,1]");
    const std::size_t m = train.t.cols();
    if (spec.q1.size() != m || spec.q3.size() != m || spec.iqr.size() != m)
        throw std::invalid_argument("contaminate: spec fitted for " +
                                    std::to_string(spec.q1.size()) + " targets, dataset has " +
                                    std::to_string(m));
    const std::size_t n = train.samples();
    // floor(ratio * N); the epsilon absorbs binary representation error in
    // products like 0.3 * 10 that sit a half-ulp under an integer.
    const std::size_t k =
        static_cast<std::size_t>(std::floor(spec.ratio * static_cast<double>(n) + 1e-9));
    ContaminationResult result;
    result.data = train;
    if (k == 0) return result;
    SplitMix64 rng(spec.seed);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    result.rows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(result.rows.begin(), result.rows.end());
    for (const std::size_t row : result.rows) {
        for (std::size_t j = 0; j < m; ++j) {
            const bool high = rng.coin();
            double lo, hi;
            if (high) {
                lo = spec.q3[j] + 1.5 * spec.iqr[j];
                hi = spec.q3[j] + 3.0 * spec.iqr[j];
            } else {
                lo = spec.q1[j] - 3.0 * spec.iqr[j];
                hi = spec.q1[j] - 1.5 * spec.iqr[j];
            }
            const double value = lo + rng.uniform01() * (hi - lo);
            result.manifest.push_back(
                ContaminationRecord{row, j, result.data.t(row, j), value, high});
            result.data.t(row, j) = value;
        }
    }
    return result;
}

inline void write_manifest(std::ostream& os, const std::vector<ContaminationRecord>& manifest) {
    os << "row_index,target_column,old_value,new_value,side\n";
    for (const ContaminationRecord& rec : manifest)
        os << rec.row << "," << rec.target_column << "," << format_full(rec.old_value) << ","
           << format_full(rec.new_value) << "," << (rec.high_side ? "high" : "low") << "\n";
}

}  // namespace gorelm
