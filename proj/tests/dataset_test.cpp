#include "gorelm/dataset.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

using gorelm::Dataset;
using gorelm::Mat;
using gorelm::ParseError;

namespace {

const char* kArff =
    "% synthetic fixture\n"
    "@RELATION toy\n"
    "\n"
    "@attribute f1 numeric\n"
    "@ATTRIBUTE 'f 2' REAL\n"
    "@attribute f3 integer\n"
    "@attribute out1 numeric\n"
    "@attribute \"out 2\" numeric\n"
    "@data\n"
    "% a comment inside the data block\n"
    "1, 2, 3, 4, 5\n"
    "0.5,-1.5,2.5,-3.5,4.5\n"
    "  7 , 8 , 9 , 10 , 11 \n";

Dataset toy(std::size_t n = 10, std::size_t n_features = 2, std::size_t m = 1) {
    Dataset ds;
    ds.x = Mat(n, n_features);
    ds.t = Mat(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n_features; ++j)
            ds.x(i, j) = static_cast<double>(i) + 0.1 * static_cast<double>(j);
        for (std::size_t j = 0; j < m; ++j)
            ds.t(i, j) = 10.0 * static_cast<double>(i) + static_cast<double>(j);
    }
    for (std::size_t j = 0; j < n_features; ++j)
        ds.feature_names.push_back("x" + std::to_string(j + 1));
    for (std::size_t j = 0; j < m; ++j) ds.target_names.push_back("t" + std::to_string(j + 1));
    return ds;
}

}  // namespace

TEST(ParseArff, ReadsTheNumericSubset) {
    std::stringstream ss(kArff);
    const Dataset ds = gorelm::parse_arff(ss, 2);
    EXPECT_EQ(ds.samples(), 3u);
    ASSERT_EQ(ds.feature_names.size(), 3u);
    EXPECT_EQ(ds.feature_names[1], "f 2");
    ASSERT_EQ(ds.target_names.size(), 2u);
    EXPECT_EQ(ds.target_names[0], "out1");
    EXPECT_EQ(ds.target_names[1], "out 2");
    EXPECT_EQ(ds.x(0, 0), 1.0);
    EXPECT_EQ(ds.x(1, 1), -1.5);
    EXPECT_EQ(ds.x(2, 2), 9.0);
    EXPECT_EQ(ds.t(0, 0), 4.0);
    EXPECT_EQ(ds.t(1, 1), 4.5);
    EXPECT_EQ(ds.t(2, 1), 11.0);
}

TEST(ParseArff, RejectsWhatItCannotRepresent) {
    const auto expect_parse_error = [](const std::string& text, const char* needle) {
        std::stringstream ss(text);
        try {
            gorelm::parse_arff(ss, 1);
            FAIL() << "expected ParseError for: " << needle;
        } catch (const ParseError& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_parse_error("@attribute a numeric\n@attribute c string\n@data\n1,2\n",
                       "unsupported attribute type");
    expect_parse_error("@attribute a numeric\n@attribute b numeric\n@data\n1\n", "expected 2");
    expect_parse_error("@attribute a numeric\n@attribute b numeric\n1,2\n", "before @data");
    expect_parse_error("@attribute a numeric\n@attribute b numeric\n", "missing @data");
    expect_parse_error("@data\n1,2\n", "@data before any @attribute");
    expect_parse_error("@attribute a numeric\n@attribute b numeric\n@data\n1,?\n",
                       "missing value");
    expect_parse_error("@attribute a numeric\n@attribute b numeric\n@data\n1,zap\n",
                       "not a number");
    expect_parse_error("@attribute 'a numeric\n@data\n1\n", "unterminated");
    expect_parse_error("@attribute a numeric\n@attribute b numeric\n@data\n", "no data rows");
    expect_parse_error("@frobnicate x\n@data\n", "unrecognized directive");
}

TEST(ParseArff, ErrorsCarryTheLineNumber) {
    std::stringstream ss("@attribute a numeric\n@attribute b numeric\n@data\n1,2\nbroken\n");
    try {
        gorelm::parse_arff(ss, 1);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 5u);
        EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos);
    }
}

TEST(ParseArff, TargetCountMustLeaveFeatures) {
    std::stringstream a(kArff), b(kArff);
    EXPECT_THROW(gorelm::parse_arff(a, 5), std::invalid_argument);
    EXPECT_THROW(gorelm::parse_arff(b, 0), std::invalid_argument);
}

TEST(ParseCsv, HeaderAndHeaderless) {
    std::stringstream with_header("a,b,y\n1,2,3\n4,5,6\n");
    const Dataset ds = gorelm::parse_csv(with_header, 1);
    EXPECT_EQ(ds.feature_names[0], "a");
    EXPECT_EQ(ds.target_names[0], "y");
    EXPECT_EQ(ds.x(1, 1), 5.0);
    EXPECT_EQ(ds.t(1, 0), 6.0);

    std::stringstream bare("1,2,3\n4,5,6\n");
    const Dataset ds2 = gorelm::parse_csv(bare, 2, false);
    EXPECT_EQ(ds2.feature_names[0], "x1");
    EXPECT_EQ(ds2.target_names[0], "t1");
    EXPECT_EQ(ds2.target_names[1], "t2");
    EXPECT_EQ(ds2.x(0, 0), 1.0);
    EXPECT_EQ(ds2.t(1, 1), 6.0);

    std::stringstream semi("a;b;y\n1;2;3\n");
    const Dataset ds3 = gorelm::parse_csv(semi, 1, true, ';');
    EXPECT_EQ(ds3.x(0, 1), 2.0);
}

TEST(ParseCsv, RejectsRaggedAndEmptyInput) {
    std::stringstream ragged("a,b,y\n1,2,3\n4,5\n");
    EXPECT_THROW(gorelm::parse_csv(ragged, 1), ParseError);
    std::stringstream empty("");
    EXPECT_THROW(gorelm::parse_csv(empty, 1), ParseError);
    std::stringstream header_only("a,b,y\n");
    EXPECT_THROW(gorelm::parse_csv(header_only, 1), ParseError);
}

TEST(WriteCsv, RoundTripsBitwise) {
    Dataset ds = toy(5, 2, 2);
    ds.x(0, 0) = 0.1 + 0.2;  // not exactly representable
    ds.t(3, 1) = -1e-300;
    std::stringstream ss;
    gorelm::write_csv(ss, ds);
    const Dataset back = gorelm::parse_csv(ss, 2);
    EXPECT_EQ(back.feature_names, ds.feature_names);
    EXPECT_EQ(back.target_names, ds.target_names);
    for (std::size_t i = 0; i < ds.samples(); ++i) {
        for (std::size_t j = 0; j < ds.x.cols(); ++j) EXPECT_EQ(back.x(i, j), ds.x(i, j));
        for (std::size_t j = 0; j < ds.t.cols(); ++j) EXPECT_EQ(back.t(i, j), ds.t(i, j));
    }
}

TEST(SplitDataset, CeilSizesAndExactPartition) {
    const Dataset ds = toy(10);
    const auto [train, test] = gorelm::split_dataset(ds, 2.0 / 3.0, 1);
    EXPECT_EQ(train.samples(), 7u);  // ceil(6.67)
    EXPECT_EQ(test.samples(), 3u);
    // Every original row appears exactly once across the two parts; the
    // first feature is a unique row id here.
    std::set<double> seen;
    for (std::size_t i = 0; i < train.samples(); ++i) seen.insert(train.x(i, 0));
    for (std::size_t i = 0; i < test.samples(); ++i) seen.insert(test.x(i, 0));
    EXPECT_EQ(seen.size(), 10u);
    // Row content travels together.
    for (std::size_t i = 0; i < train.samples(); ++i) {
        EXPECT_EQ(train.x(i, 1), train.x(i, 0) + 0.1);
        EXPECT_EQ(train.t(i, 0), 10.0 * train.x(i, 0));
    }
    EXPECT_EQ(train.feature_names, ds.feature_names);
}

TEST(SplitDataset, MatchesTheSeededShuffleExactly) {
    const std::size_t n = 12;
    const Dataset ds = toy(n);
    const std::uint64_t seed = 77;
    // Replay the documented procedure: one Fisher-Yates pass over 0..n-1
    // driven by SplitMix64(seed), train = first ceil(f*n) slots in order.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    gorelm::SplitMix64 rng(seed);
    for (std::size_t i = n; i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    const auto [train, test] = gorelm::split_dataset(ds, 0.5, seed);
    ASSERT_EQ(train.samples(), 6u);
    for (std::size_t i = 0; i < train.samples(); ++i)
        EXPECT_EQ(train.x(i, 0), static_cast<double>(idx[i]));
    for (std::size_t i = 0; i < test.samples(); ++i)
        EXPECT_EQ(test.x(i, 0), static_cast<double>(idx[6 + i]));

    const auto [train2, test2] = gorelm::split_dataset(ds, 0.5, seed);
    for (std::size_t i = 0; i < train.samples(); ++i)
        EXPECT_EQ(train2.x(i, 0), train.x(i, 0));
}

TEST(SplitDataset, RejectsDegenerateSplits) {
    const Dataset ds = toy(10);
    EXPECT_THROW(gorelm::split_dataset(ds, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(gorelm::split_dataset(ds, 1.0, 1), std::invalid_argument);
    EXPECT_THROW(gorelm::split_dataset(toy(1, 2, 1), 0.5, 1), std::invalid_argument);
}

TEST(Normalizer, MapsTrainingRangeOntoPlusMinusOne) {
    Dataset ds = toy(5, 2, 1);
    ds.x(2, 1) = -4.0;  // make min/max land on known rows
    const gorelm::NormalizationMap map = gorelm::fit_normalizer(ds);
    const Dataset norm = gorelm::apply_normalizer(map, ds);
    for (std::size_t j = 0; j < 2; ++j) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < 5; ++i) {
            lo = std::min(lo, norm.x(i, j));
            hi = std::max(hi, norm.x(i, j));
        }
        EXPECT_NEAR(lo, -1.0, 1e-15);
        EXPECT_NEAR(hi, 1.0, 1e-15);
    }
    // Unseen values simply land outside the interval.
    Dataset probe = toy(1, 2, 1);
    probe.x(0, 0) = 100.0;
    const Dataset mapped = gorelm::apply_normalizer(map, probe);
    EXPECT_GT(mapped.x(0, 0), 1.0);
    // Inversion returns to the original coordinates.
    const Dataset back = gorelm::invert_normalizer(map, norm);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(back.x(i, j), ds.x(i, j), 1e-12);
}

TEST(Normalizer, ConstantColumnsMapToZero) {
    Dataset ds = toy(4, 2, 1);
    for (std::size_t i = 0; i < 4; ++i) ds.x(i, 1) = 3.25;
    const gorelm::NormalizationMap map = gorelm::fit_normalizer(ds);
    const Dataset norm = gorelm::apply_normalizer(map, ds);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(norm.x(i, 1), 0.0);
}

TEST(Normalizer, RejectsColumnCountMismatch) {
    const gorelm::NormalizationMap map = gorelm::fit_normalizer(toy(4, 2, 1));
    EXPECT_THROW(gorelm::apply_normalizer(map, toy(4, 3, 1)), std::invalid_argument);
    EXPECT_THROW(gorelm::fit_normalizer(Dataset{}), std::invalid_argument);
}

TEST(Type7Quantile, FrozenReferenceValues) {
    const std::vector<double> v = {0.31, -1.2, 4.5, 2.25, 0.0, -0.75, 3.1, 1.05, 2.8, -2.4, 0.9};
    EXPECT_DOUBLE_EQ(gorelm::type7_quantile(v, 0.25), -0.375);
    EXPECT_DOUBLE_EQ(gorelm::type7_quantile(v, 0.5), 0.9);
    EXPECT_DOUBLE_EQ(gorelm::type7_quantile(v, 0.75), 2.525);
    EXPECT_DOUBLE_EQ(gorelm::type7_quantile(v, 0.37), 0.21700000000000005);
    EXPECT_DOUBLE_EQ(gorelm::type7_quantile(v, 0.0), -2.4);
    EXPECT_DOUBLE_EQ(gorelm::type7_quantile(v, 1.0), 4.5);
    EXPECT_DOUBLE_EQ(gorelm::type7_quantile({1.0, 2.0, 3.0, 4.0}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(gorelm::type7_quantile({42.0}, 0.31), 42.0);
    EXPECT_THROW(gorelm::type7_quantile({}, 0.5), std::invalid_argument);
    EXPECT_THROW(gorelm::type7_quantile(v, 1.5), std::invalid_argument);
}

TEST(BoxplotStats, QuartilesPerTargetColumn) {
    const std::vector<double> v = {0.31, -1.2, 4.5, 2.25, 0.0, -0.75, 3.1, 1.05, 2.8, -2.4, 0.9};
    Mat t(v.size(), 2);
    for (std::size_t i = 0; i < v.size(); ++i) {
        t(i, 0) = v[i];
        t(i, 1) = 2.0 * v[i];  // scaled copy doubles every quartile
    }
    const gorelm::ContaminationSpec spec = gorelm::boxplot_stats(t);
    EXPECT_DOUBLE_EQ(spec.q1[0], -0.375);
    EXPECT_DOUBLE_EQ(spec.q3[0], 2.525);
    EXPECT_DOUBLE_EQ(spec.iqr[0], 2.9);
    EXPECT_DOUBLE_EQ(spec.q1[1], -0.75);
    EXPECT_DOUBLE_EQ(spec.q3[1], 5.05);
    EXPECT_THROW(gorelm::boxplot_stats(Mat(1, 2)), std::invalid_argument);
}

TEST(Contaminate, ExactRowCountsAndIntervals) {
    const Dataset ds = toy(10, 2, 2);
    gorelm::ContaminationSpec spec = gorelm::boxplot_stats(ds.t);
    spec.ratio = 0.2;
    spec.seed = 5;
    const gorelm::ContaminationResult res = gorelm::contaminate(ds, spec);
    EXPECT_EQ(res.rows.size(), 2u);  // floor(0.2 * 10)
    EXPECT_EQ(res.manifest.size(), 4u);
    EXPECT_TRUE(std::is_sorted(res.rows.begin(), res.rows.end()));
    EXPECT_NE(res.rows[0], res.rows[1]);
    for (const auto& rec : res.manifest) {
        const std::size_t j = rec.target_column;
        if (rec.high_side) {
            EXPECT_GE(rec.new_value, spec.q3[j] + 1.5 * spec.iqr[j]);
            EXPECT_LE(rec.new_value, spec.q3[j] + 3.0 * spec.iqr[j]);
        } else {
            EXPECT_GE(rec.new_value, spec.q1[j] - 3.0 * spec.iqr[j]);
            EXPECT_LE(rec.new_value, spec.q1[j] - 1.5 * spec.iqr[j]);
        }
        EXPECT_EQ(rec.old_value, ds.t(rec.row, rec.target_column));
        EXPECT_EQ(res.data.t(rec.row, rec.target_column), rec.new_value);
    }
    // Untouched rows and all features stay bitwise identical.
    std::set<std::size_t> dirty(res.rows.begin(), res.rows.end());
    for (std::size_t i = 0; i < ds.samples(); ++i) {
        for (std::size_t j = 0; j < ds.x.cols(); ++j) EXPECT_EQ(res.data.x(i, j), ds.x(i, j));
        if (!dirty.count(i))
            for (std::size_t j = 0; j < ds.t.cols(); ++j) EXPECT_EQ(res.data.t(i, j), ds.t(i, j));
    }
}

TEST(Contaminate, ReplaysItsDocumentedStreamOrder) {
    const Dataset ds = toy(8, 2, 2);
    gorelm::ContaminationSpec spec = gorelm::boxplot_stats(ds.t);
    spec.ratio = 0.25;
    spec.seed = 99;
    const gorelm::ContaminationResult res = gorelm::contaminate(ds, spec);
    ASSERT_EQ(res.rows.size(), 2u);

    gorelm::SplitMix64 rng(99);
    std::vector<std::size_t> idx(8);
    for (std::size_t i = 0; i < 8; ++i) idx[i] = i;
    for (std::size_t i = 8; i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    std::vector<std::size_t> rows(idx.begin(), idx.begin() + 2);
    std::sort(rows.begin(), rows.end());
    EXPECT_EQ(res.rows, rows);
    std::size_t rec_i = 0;
    for (const std::size_t row : rows)
        for (std::size_t j = 0; j < 2; ++j, ++rec_i) {
            const bool high = rng.coin();
            const double lo = high ? spec.q3[j] + 1.5 * spec.iqr[j] : spec.q1[j] - 3.0 * spec.iqr[j];
            const double hi = high ? spec.q3[j] + 3.0 * spec.iqr[j] : spec.q1[j] - 1.5 * spec.iqr[j];
            const double value = lo + rng.uniform01() * (hi - lo);
            EXPECT_EQ(res.manifest[rec_i].row, row);
            EXPECT_EQ(res.manifest[rec_i].high_side, high);
            EXPECT_EQ(res.manifest[rec_i].new_value, value);
        }
}

TEST(Contaminate, ZeroRatioIsANoOp) {
    const Dataset ds = toy(6, 2, 1);
    gorelm::ContaminationSpec spec = gorelm::boxplot_stats(ds.t);
    spec.ratio = 0.0;
    const gorelm::ContaminationResult res = gorelm::contaminate(ds, spec);
    EXPECT_TRUE(res.rows.empty());
    EXPECT_TRUE(res.manifest.empty());
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(res.data.t(i, 0), ds.t(i, 0));
    // floor with the representation guard: 0.3 of 10 rows is exactly 3.
    gorelm::ContaminationSpec spec3 = gorelm::boxplot_stats(toy(10, 2, 1).t);
    spec3.ratio = 0.3;
    EXPECT_EQ(gorelm::contaminate(toy(10, 2, 1), spec3).rows.size(), 3u);
}

TEST(Contaminate, ValidatesItsInputs) {
    const Dataset ds = toy(6, 2, 2);
    gorelm::ContaminationSpec spec = gorelm::boxplot_stats(ds.t);
    spec.ratio = -0.1;
    EXPECT_THROW(gorelm::contaminate(ds, spec), std::invalid_argument);
    gorelm::ContaminationSpec narrow = gorelm::boxplot_stats(toy(6, 2, 1).t);
    narrow.ratio = 0.5;
    EXPECT_THROW(gorelm::contaminate(ds, narrow), std::invalid_argument);
}

TEST(Manifest, CsvLayout) {
    std::vector<gorelm::ContaminationRecord> manifest;
    manifest.push_back(gorelm::ContaminationRecord{4, 1, 0.5, -2.25, false});
    std::stringstream ss;
    gorelm::write_manifest(ss, manifest);
    std::string line;
    ASSERT_TRUE(std::getline(ss, line));
    EXPECT_EQ(line, "row_index,target_column,old_value,new_value,side");
    ASSERT_TRUE(std::getline(ss, line));
    EXPECT_EQ(line, "4,1,0.5,-2.25,low");
}
