#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gorelm/admm.hpp"
#include "gorelm/closed_form.hpp"
#include "gorelm/dataset.hpp"
#include "gorelm/grid_search.hpp"
#include "gorelm/igor.hpp"
#include "gorelm/matrix.hpp"
#include "gorelm/metrics.hpp"
#include "gorelm/rng.hpp"
#include "gorelm/slfn.hpp"
#include "gorelm/stats.hpp"

namespace gorelm {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// One entry of the config's methods list. Every solver family reads its own
// subset of the fields; the rest stay at their defaults.
struct MethodSpec {
    std::string name;
    bool use_search = false;
    double c = 1.0;                    // relm, orelm, irelm
    GorHyper gor;                      // gorelm, igorelm
    GrHyper gr;                        // grelm
    std::size_t orelm_iterations = 20;
    double ielm_target_error = 0.0;
    std::size_t batch_size = 100;      // emelm, irelm, igorelm
    std::size_t max_total_nodes = 0;   // igorelm; 0 means the global hidden_nodes
    std::optional<double> target_metric;
    std::optional<double> pruned_ratio_stop;
};

inline bool known_method(const std::string& name) {
    static const std::set<std::string> names{"elm",  "relm",  "orelm", "grelm", "gorelm",
                                             "ielm", "emelm", "irelm", "igorelm"};
    return names.count(name) > 0;
}

// Methods whose regularization surface the k-fold search can explore.
// irelm shares relm's closed form and igorelm shares gorelm's objective, so
// both are searched through their batch counterparts.
inline bool searchable_method(const std::string& name) {
    return name == "relm" || name == "orelm" || name == "grelm" || name == "gorelm" ||
           name == "irelm" || name == "igorelm";
}

inline bool method_has_alpha(const std::string& name) {
    return name == "grelm" || name == "gorelm" || name == "igorelm";
}

struct ExperimentConfig {
    std::string dataset_path;
    std::string dataset_format = "arff";  // "arff" or "csv"
    bool csv_header = true;
    std::size_t n_targets = 0;
    std::string label;

    double train_fraction = 2.0 / 3.0;
    std::uint64_t split_seed = 1;
    std::vector<double> outlier_ratios{0.0, 0.2, 0.4};

    std::size_t repetitions = 100;
    std::size_t hidden_nodes = 1000;
    std::uint64_t base_seed = 1;
    std::vector<MethodSpec> methods;

    std::vector<double> search_reg_grid = default_reg_grid();
    std::vector<double> search_alpha_grid = default_alpha_grid();
    std::size_t search_folds = 5;
    std::size_t search_hidden_nodes = 0;  // 0 means hidden_nodes

    void validate() const {
        if (dataset_path.empty()) throw ConfigError("config: dataset.path is required");
        if (dataset_format != "arff" && dataset_format != "csv")
            throw ConfigError("config: dataset.format must be arff or csv, got '" +
                              dataset_format + "'");
        if (n_targets == 0) throw ConfigError("config: dataset.targets must be at least 1");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw ConfigError("config: split.train_fraction must lie strictly in (0,1)");
        if (repetitions < 1) throw ConfigError("config: repetitions must be at least 1");
        if (hidden_nodes < 1) throw ConfigError("config: hidden_nodes must be at least 1");
        if (methods.empty()) throw ConfigError("config: methods list is empty");
        if (outlier_ratios.empty()) throw ConfigError("config: outlier_ratios is empty");
        std::set<double> seen_ratios;
        for (double r : outlier_ratios) {
            if (!(r >= 0.0 && r <= 1.0))
                throw ConfigError("config: outlier ratio " + format_full(r) + " outside [0,1]");
            if (!seen_ratios.insert(r).second)
                throw ConfigError("config: duplicate outlier ratio " + format_full(r));
        }
        std::set<std::string> seen_names;
        for (const MethodSpec& m : methods) {
            if (!known_method(m.name)) throw ConfigError("config: unknown method '" + m.name + "'");
            if (!seen_names.insert(m.name).second)
                throw ConfigError("config: duplicate method '" + m.name +
                                  "'; use separate configs to compare variants of one method");
            if (m.use_search && !searchable_method(m.name))
                throw ConfigError("config: method '" + m.name + "' has no searchable surface");
            try {
                if (m.name == "gorelm" || m.name == "igorelm") m.gor.validate();
                if (m.name == "grelm") m.gr.validate();
                if (m.name == "igorelm") {
                    GrowthPolicy p;
                    p.batch_size = m.batch_size;
                    p.max_total_nodes = m.max_total_nodes ? m.max_total_nodes : hidden_nodes;
                    p.target_metric = m.target_metric;
                    p.pruned_ratio_stop = m.pruned_ratio_stop;
                    p.validate();
                }
            } catch (const std::invalid_argument& e) {
                throw ConfigError("config: method '" + m.name + "': " + e.what());
            }
            if ((m.name == "relm" || m.name == "orelm" || m.name == "irelm") && !(m.c > 0.0))
                throw ConfigError("config: method '" + m.name + "': c must be positive");
            if (m.name == "orelm" && m.orelm_iterations < 1)
                throw ConfigError("config: method 'orelm': iterations must be at least 1");
            if ((m.name == "emelm" || m.name == "irelm") && m.batch_size < 1)
                throw ConfigError("config: method '" + m.name + "': batch_size must be at least 1");
            if (m.name == "ielm" && !(m.ielm_target_error >= 0.0))
                throw ConfigError("config: method 'ielm': target_error must be nonnegative");
        }
        if (search_reg_grid.empty()) throw ConfigError("config: search.reg_grid is empty");
        if (search_alpha_grid.empty()) throw ConfigError("config: search.alpha_grid is empty");
        if (search_folds < 2) throw ConfigError("config: search.folds must be at least 2");
    }
};

namespace detail {

inline GorHyper gor_from_json(const nlohmann::json& m) {
    GorHyper g;
    g.tau = m.value("tau", g.tau);
    g.lambda = m.value("lambda", g.lambda);
    g.alpha = m.value("alpha", g.alpha);
    g.rho = m.value("rho", g.rho);
    g.eps_abs = m.value("eps_abs", g.eps_abs);
    g.eps_rel = m.value("eps_rel", g.eps_rel);
    g.k_max = m.value("k_max", g.k_max);
    return g;
}

inline GrHyper gr_from_json(const nlohmann::json& m) {
    GrHyper g;
    g.c = m.value("c", g.c);
    g.lambda = m.value("lambda", g.lambda);
    g.alpha = m.value("alpha", g.alpha);
    g.rho = m.value("rho", g.rho);
    g.eps_abs = m.value("eps_abs", g.eps_abs);
    g.eps_rel = m.value("eps_rel", g.eps_rel);
    g.k_max = m.value("k_max", g.k_max);
    return g;
}

inline MethodSpec method_from_json(const nlohmann::json& m) {
    if (!m.contains("name")) throw ConfigError("config: a methods entry is missing \"name\"");
    MethodSpec s;
    s.name = m.at("name").get<std::string>();
    s.use_search = m.value("use_search", false);
    s.c = m.value("c", s.c);
    s.gor = gor_from_json(m);
    s.gr = gr_from_json(m);
    s.orelm_iterations = m.value("iterations", s.orelm_iterations);
    s.ielm_target_error = m.value("target_error", s.ielm_target_error);
    s.batch_size = m.value("batch_size", s.batch_size);
    s.max_total_nodes = m.value("max_total_nodes", s.max_total_nodes);
    if (m.contains("target_metric")) s.target_metric = m.at("target_metric").get<double>();
    if (m.contains("pruned_ratio_stop"))
        s.pruned_ratio_stop = m.at("pruned_ratio_stop").get<double>();
    return s;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (!j.contains("dataset")) throw ConfigError("config: missing \"dataset\" section");
    const nlohmann::json& ds = j.at("dataset");
    cfg.dataset_path = ds.value("path", std::string());
    cfg.dataset_format = ds.value("format", cfg.dataset_format);
    cfg.csv_header = ds.value("csv_header", cfg.csv_header);
    cfg.n_targets = ds.value("targets", std::size_t{0});
    cfg.label = ds.value("label", std::string());
    if (cfg.label.empty())
        cfg.label = std::filesystem::path(cfg.dataset_path).stem().string();

    if (j.contains("split")) {
        const nlohmann::json& sp = j.at("split");
        cfg.train_fraction = sp.value("train_fraction", cfg.train_fraction);
        cfg.split_seed = sp.value("seed", cfg.split_seed);
    }
    if (j.contains("outlier_ratios"))
        cfg.outlier_ratios = j.at("outlier_ratios").get<std::vector<double>>();
    cfg.repetitions = j.value("repetitions", cfg.repetitions);
    cfg.hidden_nodes = j.value("hidden_nodes", cfg.hidden_nodes);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);

    if (j.contains("search")) {
        const nlohmann::json& se = j.at("search");
        if (se.contains("reg_grid"))
            cfg.search_reg_grid = se.at("reg_grid").get<std::vector<double>>();
        else if (se.contains("reg_exponents")) {
            const auto exps = se.at("reg_exponents").get<std::vector<int>>();
            if (exps.size() != 2 || exps[0] > exps[1])
                throw ConfigError("config: search.reg_exponents must be [lo, hi]");
            cfg.search_reg_grid = pow2_grid(exps[0], exps[1]);
        }
        if (se.contains("alpha_grid"))
            cfg.search_alpha_grid = se.at("alpha_grid").get<std::vector<double>>();
        cfg.search_folds = se.value("folds", cfg.search_folds);
        cfg.search_hidden_nodes = se.value("hidden_nodes", cfg.search_hidden_nodes);
    }

    if (!j.contains("methods")) throw ConfigError("config: missing \"methods\" list");
    for (const nlohmann::json& m : j.at("methods")) cfg.methods.push_back(detail::method_from_json(m));

    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        is >> j;
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// Every run's seed is reproducible in isolation:
//   seed = mix(mix(mix(base_seed, 1 + method_index), 1 + ratio_index), 1 + repetition)
// where mix is mix_seed and the indices are positions in the config's
// methods and outlier_ratios lists. The +1 offsets keep index 0 from
// passing a zero tag through the mix.
inline std::uint64_t derive_run_seed(std::uint64_t base_seed, std::size_t method_index,
                                     std::size_t ratio_index, std::size_t repetition) {
    std::uint64_t s = mix_seed(base_seed, 1 + method_index);
    s = mix_seed(s, 1 + ratio_index);
    return mix_seed(s, 1 + repetition);
}

// "0.2" -> "0p2": filesystem-safe ratio tag used in artifact names.
inline std::string ratio_token(double ratio) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", ratio);
    std::string s(buf);
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

inline constexpr const char* kResultsHeader =
    "method,ratio,rep,seed,train_arrmse,test_arrmse,train_s,test_s,final_nodes,status";

struct RunRecord {
    std::string method;
    double ratio = 0.0;
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    double train_arrmse = std::numeric_limits<double>::quiet_NaN();
    double test_arrmse = std::numeric_limits<double>::quiet_NaN();
    double train_s = 0.0;
    double test_s = 0.0;
    std::size_t final_nodes = 1;
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
};

namespace detail {

inline std::string format_ratio(double r) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", r);
    return buf;
}

// Failure reasons land in a comma-separated file, so strip the separators.
inline std::string sanitize_status(std::string s) {
    for (char& c : s) {
        if (c == ',') c = ';';
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    return os;
}

inline std::ifstream open_in(const std::filesystem::path& path, const char* hint = nullptr) {
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open " + path.string() + (hint ? std::string("; ") + hint : ""));
    return is;
}

inline double seconds_between(std::chrono::steady_clock::time_point a,
                              std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

inline Mat take_cols(const Mat& m, std::size_t first, std::size_t last) {
    if (first > last || last > m.cols())
        throw std::invalid_argument("take_cols: range [" + std::to_string(first) + "," +
                                    std::to_string(last) + ") outside " + shape_str(m));
    Mat out(m.rows(), last - first);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = first; j < last; ++j) out(i, j - first) = m(i, j);
    return out;
}

inline Mat single_col(const Mat& m, std::size_t j) { return take_cols(m, j, j + 1); }

}  // namespace detail

inline void write_results_csv(std::ostream& os, const std::vector<RunRecord>& records) {
    os << kResultsHeader << "\n";
    for (const RunRecord& r : records) {
        os << r.method << ',' << detail::format_ratio(r.ratio) << ',' << r.rep << ',' << r.seed
           << ',' << format_full(r.train_arrmse) << ',' << format_full(r.test_arrmse) << ','
           << format_full(r.train_s) << ',' << format_full(r.test_s) << ',' << r.final_nodes << ','
           << detail::sanitize_status(r.status) << "\n";
    }
}

inline std::vector<RunRecord> read_results_csv(std::istream& is, const std::string& where) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError(where + ": empty results file", 1);
    if (detail::trim(line) != kResultsHeader)
        throw ParseError(where + ": unexpected results header: " + line, 1);
    std::vector<RunRecord> out;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> f = detail::split_fields(line, ',');
        if (f.size() != 10)
            throw ParseError(where + ": expected 10 fields, got " + std::to_string(f.size()),
                             line_no);
        RunRecord r;
        r.method = detail::trim(f[0]);
        r.ratio = detail::parse_number(f[1], line_no, where + " ratio");
        r.rep = static_cast<std::size_t>(std::strtoull(f[2].c_str(), nullptr, 10));
        r.seed = std::strtoull(f[3].c_str(), nullptr, 10);
        r.train_arrmse = std::strtod(f[4].c_str(), nullptr);
        r.test_arrmse = std::strtod(f[5].c_str(), nullptr);
        r.train_s = std::strtod(f[6].c_str(), nullptr);
        r.test_s = std::strtod(f[7].c_str(), nullptr);
        r.final_nodes = static_cast<std::size_t>(std::strtoull(f[8].c_str(), nullptr, 10));
        r.status = detail::trim(f[9]);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// prepare

inline Dataset load_dataset(const ExperimentConfig& cfg) {
    std::ifstream is(cfg.dataset_path);
    if (!is) throw IoError("cannot open dataset: " + cfg.dataset_path);
    try {
        if (cfg.dataset_format == "arff") return parse_arff(is, cfg.n_targets);
        return parse_csv(is, cfg.n_targets, cfg.csv_header);
    } catch (const ParseError& e) {
        throw IoError(cfg.dataset_path + ": " + e.what());
    }
}

// Splits, fits the normalizer on the raw training part, contaminates raw
// training targets per ratio, and writes everything normalized. The
// contamination for outlier_ratios[i] is seeded with mix_seed(split_seed, i)
// so prepare output depends only on (dataset bytes, split settings, ratios).
inline void cmd_prepare(const ExperimentConfig& cfg, const std::string& out_dir,
                        std::ostream& log = std::cout) {
    namespace fs = std::filesystem;
    const Dataset full = load_dataset(cfg);
    const auto [train_raw, test_raw] = split_dataset(full, cfg.train_fraction, cfg.split_seed);
    const NormalizationMap norm = fit_normalizer(train_raw);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    {
        auto os = detail::open_out(dir / "train.csv");
        write_csv(os, apply_normalizer(norm, train_raw));
    }
    {
        auto os = detail::open_out(dir / "test.csv");
        write_csv(os, apply_normalizer(norm, test_raw));
    }
    {
        nlohmann::json j;
        auto ranges = [](const std::vector<ColumnRange>& v) {
            nlohmann::json a = nlohmann::json::array();
            for (const ColumnRange& r : v) a.push_back({r.lo, r.hi});
            return a;
        };
        j["features"] = ranges(norm.features);
        j["targets"] = ranges(norm.targets);
        auto os = detail::open_out(dir / "normalization.json");
        os << j.dump(2) << "\n";
    }

    ContaminationSpec spec = boxplot_stats(train_raw.t);
    for (std::size_t ri = 0; ri < cfg.outlier_ratios.size(); ++ri) {
        const double ratio = cfg.outlier_ratios[ri];
        if (ratio == 0.0) continue;
        spec.ratio = ratio;
        spec.seed = mix_seed(cfg.split_seed, ri);
        const ContaminationResult con = contaminate(train_raw, spec);
        const std::string tok = ratio_token(ratio);
        {
            auto os = detail::open_out(dir / ("train_outliers_" + tok + ".csv"));
            write_csv(os, apply_normalizer(norm, con.data));
        }
        {
            auto os = detail::open_out(dir / ("manifest_" + tok + ".csv"));
            write_manifest(os, con.manifest);
        }
        log << "prepare: ratio " << detail::format_ratio(ratio) << " -> " << con.rows.size()
            << " contaminated rows\n";
    }

    nlohmann::json meta;
    meta["label"] = cfg.label;
    meta["n_features"] = full.x.cols();
    meta["n_targets"] = full.t.cols();
    meta["n_train"] = train_raw.samples();
    meta["n_test"] = test_raw.samples();
    meta["train_fraction"] = cfg.train_fraction;
    meta["split_seed"] = cfg.split_seed;
    meta["outlier_ratios"] = cfg.outlier_ratios;
    {
        auto os = detail::open_out(dir / "meta.json");
        os << meta.dump(2) << "\n";
    }
    log << "prepare: " << train_raw.samples() << " train / " << test_raw.samples()
        << " test rows written to " << out_dir << "\n";
}

namespace detail {

inline nlohmann::json read_meta(const std::filesystem::path& dir) {
    auto is = open_in(dir / "meta.json", "run the prepare subcommand first");
    nlohmann::json meta;
    try {
        is >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw IoError((dir / "meta.json").string() + ": " + e.what());
    }
    return meta;
}

inline Dataset read_split_csv(const std::filesystem::path& path, std::size_t n_targets,
                              const char* hint) {
    auto is = open_in(path, hint);
    try {
        return parse_csv(is, n_targets, true);
    } catch (const ParseError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

// Maps one (reg, alpha) grid point onto the family's own knobs.
inline void apply_search_point(MethodSpec& s, double reg, double alpha) {
    if (s.name == "relm" || s.name == "orelm" || s.name == "irelm") {
        s.c = reg;
    } else if (s.name == "grelm") {
        s.gr.c = reg;
        s.gr.alpha = alpha;
    } else if (s.name == "gorelm" || s.name == "igorelm") {
        s.gor.lambda = reg;
        s.gor.alpha = alpha;
    }
}

inline Mat train_orelm_multi(const Mat& h, const Mat& t, double c, std::size_t iterations) {
    Mat b(h.cols(), t.cols());
    for (std::size_t j = 0; j < t.cols(); ++j) {
        const Mat bj = train_orelm(h, single_col(t, j), c, iterations);
        for (std::size_t i = 0; i < b.rows(); ++i) b(i, j) = bj(i, 0);
    }
    return b;
}

// Output weights for the families that train on a precomputed H. The
// incremental families (ielm, emelm, irelm, igorelm) have their own paths.
inline Mat train_output_weights(const MethodSpec& s, const Mat& h, const Mat& t) {
    if (s.name == "elm") return train_elm(h, t);
    if (s.name == "relm" || s.name == "irelm") return train_relm(h, t, RidgeHyper{s.c});
    if (s.name == "orelm") return train_orelm_multi(h, t, s.c, s.orelm_iterations);
    if (s.name == "grelm") return train_grelm(h, t, s.gr).b;
    if (s.name == "gorelm" || s.name == "igorelm") return train_gorelm(h, t, s.gor).b;
    throw std::logic_error("train_output_weights: " + s.name + " has no batch form");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// search

inline SolverHandle make_search_handle(const MethodSpec& spec, std::size_t n_tilde) {
    return [spec, n_tilde](const Mat& x_tr, const Mat& t_tr, const Mat& x_val, double reg,
                           double alpha, std::uint64_t fold_seed) -> Mat {
        MethodSpec s = spec;
        detail::apply_search_point(s, reg, alpha);
        const HiddenLayer layer = init_random(fold_seed, x_tr.cols(), n_tilde);
        const Mat h = hidden_output(layer, x_tr);
        const SlfnModel model{layer, detail::train_output_weights(s, h, t_tr)};
        return predict(model, x_val);
    };
}

inline void cmd_search(const ExperimentConfig& cfg, const std::string& out_dir,
                       std::ostream& log = std::cout) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    const nlohmann::json meta = detail::read_meta(dir);
    if (meta.value("n_targets", std::size_t{0}) != cfg.n_targets)
        throw ConfigError("prepared artifacts in " + out_dir + " were built for " +
                          std::to_string(meta.value("n_targets", std::size_t{0})) +
                          " targets, config says " + std::to_string(cfg.n_targets));
    const Dataset train = detail::read_split_csv(dir / "train.csv", cfg.n_targets,
                                                 "run the prepare subcommand first");
    const std::size_t n_tilde =
        cfg.search_hidden_nodes ? cfg.search_hidden_nodes : cfg.hidden_nodes;

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const MethodSpec& spec = cfg.methods[mi];
        if (!searchable_method(spec.name)) {
            log << "search: " << spec.name << " has no tunable surface, skipped\n";
            continue;
        }
        GridSpec grid;
        grid.reg_grid = cfg.search_reg_grid;
        grid.alpha_grid =
            method_has_alpha(spec.name) ? cfg.search_alpha_grid : std::vector<double>{0.0};
        grid.folds = cfg.search_folds;

        const GridSearchResult res = kfold_grid_search(
            train.x, train.t, grid, make_search_handle(spec, n_tilde),
            mix_seed(cfg.base_seed, 1 + mi));
        for (const std::string& w : res.warnings) log << "search: " << spec.name << ": " << w << "\n";

        nlohmann::json best;
        best["method"] = spec.name;
        best["reg"] = res.best_reg;
        best["alpha"] = res.best_alpha;
        best["score"] = res.best_score;
        {
            auto os = detail::open_out(dir / ("hyper_" + spec.name + ".json"));
            os << best.dump(2) << "\n";
        }
        {
            auto os = detail::open_out(dir / ("cv_" + spec.name + ".csv"));
            write_cv_table(os, res);
        }
        log << "search: " << spec.name << " -> reg " << format_full(res.best_reg) << ", alpha "
            << format_full(res.best_alpha) << ", cv aRRMSE " << format_full(res.best_score)
            << "\n";
    }
}

// ---------------------------------------------------------------------------
// run

namespace detail {

// Trains one (method, ratio, repetition) cell and fills the record's metric
// and timing fields. Any solver throw becomes a failed record upstream.
inline void fit_and_eval(const MethodSpec& spec, std::size_t hidden_nodes, const Mat& x_train,
                         const Mat& t_train, const Mat& x_test, const Mat& t_test,
                         std::uint64_t seed, RunRecord& rec) {
    using clock = std::chrono::steady_clock;
    const std::size_t n = x_train.cols();
    std::function<Mat(const Mat&)> predictor;
    std::size_t nodes = hidden_nodes;

    const auto t0 = clock::now();
    if (spec.name == "ielm") {
        // One output per run of the growth loop, so multi-target data gets
        // one independently grown network per target column.
        std::vector<SlfnModel> models;
        nodes = 1;
        for (std::size_t j = 0; j < t_train.cols(); ++j) {
            models.push_back(train_ielm(x_train, single_col(t_train, j), mix_seed(seed, 1 + j),
                                        hidden_nodes, spec.ielm_target_error));
            nodes = std::max(nodes, models.back().hidden.nodes());
        }
        predictor = [models](const Mat& x) {
            Mat out(x.rows(), models.size());
            for (std::size_t j = 0; j < models.size(); ++j) {
                const Mat p = predict(models[j], x);
                for (std::size_t i = 0; i < out.rows(); ++i) out(i, j) = p(i, 0);
            }
            return out;
        };
    } else if (spec.name == "emelm") {
        const HiddenLayer layer = init_random(seed, n, hidden_nodes);
        const Mat h_full = hidden_output(layer, x_train);
        const std::size_t first = std::min(spec.batch_size, hidden_nodes);
        auto [b, cache] = init_emelm(take_cols(h_full, 0, first), t_train);
        for (std::size_t start = first; start < hidden_nodes;) {
            const std::size_t step = std::min(spec.batch_size, hidden_nodes - start);
            std::tie(b, cache) = grow_emelm(cache, take_cols(h_full, start, start + step), t_train);
            start += step;
        }
        const SlfnModel model{layer, b};
        predictor = [model](const Mat& x) { return predict(model, x); };
    } else if (spec.name == "irelm") {
        const std::size_t first = std::min(spec.batch_size, hidden_nodes);
        HiddenLayer layer = init_random(seed, n, first);
        auto [b, cache] = init_irelm(hidden_output(layer, x_train), t_train, RidgeHyper{spec.c});
        for (std::size_t k = first; k < hidden_nodes; ++k) {
            layer = append_nodes(layer, mix_seed(seed, 1 + k), 1);
            const Mat v = hidden_output(slice_nodes(layer, k, k + 1), x_train);
            std::tie(b, cache) = grow_irelm(cache, v, t_train, RidgeHyper{spec.c});
        }
        const SlfnModel model{layer, b};
        predictor = [model](const Mat& x) { return predict(model, x); };
    } else if (spec.name == "igorelm") {
        GrowthPolicy policy;
        policy.batch_size = spec.batch_size;
        policy.max_total_nodes = spec.max_total_nodes ? spec.max_total_nodes : hidden_nodes;
        policy.target_metric = spec.target_metric;
        policy.pruned_ratio_stop = spec.pruned_ratio_stop;
        const IgorResult res = train_igorelm(x_train, t_train, spec.gor, policy, seed);
        nodes = res.model.hidden.nodes();
        const SlfnModel model = res.model;
        predictor = [model](const Mat& x) { return predict(model, x); };
    } else {
        const HiddenLayer layer = init_random(seed, n, hidden_nodes);
        const Mat h = hidden_output(layer, x_train);
        const SlfnModel model{layer, train_output_weights(spec, h, t_train)};
        predictor = [model](const Mat& x) { return predict(model, x); };
    }
    const auto t1 = clock::now();

    rec.train_arrmse = arrmse(predictor(x_train), t_train).arrmse;
    const auto t2 = clock::now();
    const Mat pred_test = predictor(x_test);
    const auto t3 = clock::now();
    rec.test_arrmse = arrmse(pred_test, t_test).arrmse;

    rec.train_s = seconds_between(t0, t1);
    rec.test_s = seconds_between(t2, t3);
    rec.final_nodes = nodes;
    rec.status = "ok";
}

}  // namespace detail

inline void cmd_run(const ExperimentConfig& cfg, const std::string& out_dir,
                    std::size_t threads = 1, std::ostream& log = std::cout) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    (void)detail::read_meta(dir);
    const char* hint = "run the prepare subcommand first";
    const Dataset test = detail::read_split_csv(dir / "test.csv", cfg.n_targets, hint);

    std::vector<Dataset> train_by_ratio;
    for (double ratio : cfg.outlier_ratios) {
        const fs::path p = ratio == 0.0
                               ? dir / "train.csv"
                               : dir / ("train_outliers_" + ratio_token(ratio) + ".csv");
        train_by_ratio.push_back(detail::read_split_csv(p, cfg.n_targets, hint));
    }

    // Resolve searched hyperparameters up front so a missing file fails fast.
    std::vector<MethodSpec> specs;
    for (const MethodSpec& base : cfg.methods) {
        MethodSpec s = base;
        if (s.use_search) {
            auto is = detail::open_in(dir / ("hyper_" + s.name + ".json"),
                                      "run the search subcommand first");
            nlohmann::json j;
            try {
                is >> j;
            } catch (const nlohmann::json::exception& e) {
                throw IoError("hyper_" + s.name + ".json: " + e.what());
            }
            detail::apply_search_point(s, j.at("reg").get<double>(), j.at("alpha").get<double>());
        }
        specs.push_back(std::move(s));
    }

    struct Task {
        std::size_t method_index, ratio_index, rep;
    };
    std::vector<Task> tasks;
    for (std::size_t mi = 0; mi < specs.size(); ++mi)
        for (std::size_t ri = 0; ri < cfg.outlier_ratios.size(); ++ri)
            for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) tasks.push_back({mi, ri, rep});

    std::vector<RunRecord> records(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            const MethodSpec& spec = specs[task.method_index];
            RunRecord& rec = records[i];
            rec.method = spec.name;
            rec.ratio = cfg.outlier_ratios[task.ratio_index];
            rec.rep = task.rep;
            rec.seed = derive_run_seed(cfg.base_seed, task.method_index, task.ratio_index,
                                       task.rep);
            rec.final_nodes = std::max<std::size_t>(1, cfg.hidden_nodes);
            try {
                const Dataset& train = train_by_ratio[task.ratio_index];
                detail::fit_and_eval(spec, cfg.hidden_nodes, train.x, train.t, test.x, test.t,
                                     rec.seed, rec);
            } catch (const std::exception& e) {
                rec.status = detail::sanitize_status(std::string("failed: ") + e.what());
            } catch (...) {
                rec.status = "failed: unknown error";
            }
        }
    };
    const std::size_t pool = std::max<std::size_t>(1, std::min(threads, tasks.size()));
    if (pool == 1) {
        worker();
    } else {
        std::vector<std::thread> crew;
        for (std::size_t i = 0; i < pool; ++i) crew.emplace_back(worker);
        for (std::thread& th : crew) th.join();
    }

    // Records were laid out in (method, ratio, repetition) order, so the
    // merge is just the slot order regardless of which thread ran what.
    {
        auto os = detail::open_out(dir / "results.csv");
        write_results_csv(os, records);
    }
    std::size_t failed = 0;
    for (const RunRecord& r : records)
        if (!r.ok()) ++failed;
    log << "run: " << records.size() << " records (" << failed << " failed) -> "
        << (dir / "results.csv").string() << "\n";
    for (const RunRecord& r : records)
        if (!r.ok())
            log << "run: " << r.method << " ratio " << detail::format_ratio(r.ratio) << " rep "
                << r.rep << " " << r.status << "\n";
}

// ---------------------------------------------------------------------------
// report

namespace detail {

struct SummaryRow {
    std::string dataset, method;
    double ratio = 0.0;
    std::size_t runs = 0, failed = 0;
    double mean_train = 0.0, std_train = 0.0;
    double mean_test = 0.0, std_test = 0.0;
    double mean_train_s = 0.0, mean_test_s = 0.0;
    double mean_nodes = 0.0;
};

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

inline void cmd_report(const std::vector<std::string>& results_paths, const std::string& out_dir,
                       std::ostream& log = std::cout) {
    namespace fs = std::filesystem;
    if (results_paths.empty()) throw ConfigError("report: no results files given");
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    struct Slice {
        std::string label;
        std::vector<RunRecord> records;
    };
    std::vector<Slice> slices;
    for (const std::string& path : results_paths) {
        auto is = detail::open_in(path);
        slices.push_back({fs::path(path).stem().string(), read_results_csv(is, path)});
    }

    // Method order: first appearance across the input files.
    std::vector<std::string> methods;
    for (const Slice& s : slices)
        for (const RunRecord& r : s.records)
            if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
                methods.push_back(r.method);

    // Per (dataset, method, ratio) aggregation over the successful runs.
    std::vector<detail::SummaryRow> summary;
    std::vector<std::string> notices;
    for (const Slice& s : slices) {
        std::set<double> ratios;
        for (const RunRecord& r : s.records) ratios.insert(r.ratio);
        for (const std::string& method : methods) {
            for (double ratio : ratios) {
                std::vector<double> tr, te, ts_train, ts_test, nodes;
                std::size_t failed = 0, seen = 0;
                for (const RunRecord& r : s.records) {
                    if (r.method != method || r.ratio != ratio) continue;
                    ++seen;
                    if (!r.ok()) {
                        ++failed;
                        continue;
                    }
                    tr.push_back(r.train_arrmse);
                    te.push_back(r.test_arrmse);
                    ts_train.push_back(r.train_s);
                    ts_test.push_back(r.test_s);
                    nodes.push_back(static_cast<double>(r.final_nodes));
                }
                if (seen == 0) continue;
                detail::SummaryRow row;
                row.dataset = s.label;
                row.method = method;
                row.ratio = ratio;
                row.runs = seen;
                row.failed = failed;
                if (!te.empty()) {
                    row.mean_train = detail::mean_of(tr);
                    row.std_train = detail::sample_std(tr, row.mean_train);
                    row.mean_test = detail::mean_of(te);
                    row.std_test = detail::sample_std(te, row.mean_test);
                    row.mean_train_s = detail::mean_of(ts_train);
                    row.mean_test_s = detail::mean_of(ts_test);
                    row.mean_nodes = detail::mean_of(nodes);
                } else {
                    const double nan = std::numeric_limits<double>::quiet_NaN();
                    row.mean_train = row.std_train = row.mean_test = row.std_test = nan;
                    row.mean_train_s = row.mean_test_s = row.mean_nodes = nan;
                    notices.push_back(s.label + "/" + method + " ratio " +
                                      detail::format_ratio(ratio) + ": no successful runs");
                }
                summary.push_back(row);
            }
        }
    }

    {
        auto os = detail::open_out(dir / "summary.csv");
        os << "dataset,method,ratio,runs,failed,mean_train_arrmse,std_train_arrmse,"
              "mean_test_arrmse,std_test_arrmse,mean_train_s,mean_test_s,mean_final_nodes\n";
        for (const detail::SummaryRow& r : summary) {
            os << r.dataset << ',' << r.method << ',' << detail::format_ratio(r.ratio) << ','
               << r.runs << ',' << r.failed << ',' << format_full(r.mean_train) << ','
               << format_full(r.std_train) << ',' << format_full(r.mean_test) << ','
               << format_full(r.std_test) << ',' << format_full(r.mean_train_s) << ','
               << format_full(r.mean_test_s) << ',' << format_full(r.mean_nodes) << "\n";
        }
    }
    {
        auto os = detail::open_out(dir / "summary.txt");
        char line[256];
        std::snprintf(line, sizeof(line), "%-14s %-9s %7s %5s %5s %20s %20s %10s %8s\n", "dataset",
                      "method", "ratio", "runs", "fail", "train aRRMSE", "test aRRMSE", "train s",
                      "nodes");
        os << line;
        for (const detail::SummaryRow& r : summary) {
            char tr[32], te[32];
            std::snprintf(tr, sizeof(tr), "%.4f+-%.4f", r.mean_train, r.std_train);
            std::snprintf(te, sizeof(te), "%.4f+-%.4f", r.mean_test, r.std_test);
            std::snprintf(line, sizeof(line), "%-14s %-9s %7s %5zu %5zu %20s %20s %10.4f %8.1f\n",
                          r.dataset.c_str(), r.method.c_str(),
                          detail::format_ratio(r.ratio).c_str(), r.runs, r.failed, tr, te,
                          r.mean_train_s, r.mean_nodes);
            os << line;
        }
    }
    {
        auto os = detail::open_out(dir / "boxplot.csv");
        os << "dataset,method,ratio,rep,test_arrmse\n";
        for (const Slice& s : slices)
            for (const RunRecord& r : s.records)
                if (r.ok())
                    os << s.label << ',' << r.method << ',' << detail::format_ratio(r.ratio) << ','
                       << r.rep << ',' << format_full(r.test_arrmse) << "\n";
    }

    // Statistical comparison blocks: one row per (dataset, ratio) pair whose
    // every method has at least one successful run; the entry is that
    // method's mean test aRRMSE.
    std::vector<std::vector<double>> blocks;
    std::vector<std::string> block_names;
    for (const Slice& s : slices) {
        std::set<double> ratios;
        for (const RunRecord& r : s.records) ratios.insert(r.ratio);
        for (double ratio : ratios) {
            std::vector<double> row;
            bool complete = true;
            for (const std::string& method : methods) {
                std::vector<double> te;
                for (const RunRecord& r : s.records)
                    if (r.method == method && r.ratio == ratio && r.ok())
                        te.push_back(r.test_arrmse);
                if (te.empty()) {
                    complete = false;
                    break;
                }
                row.push_back(detail::mean_of(te));
            }
            if (complete) {
                blocks.push_back(row);
                block_names.push_back(s.label + "@" + detail::format_ratio(ratio));
            } else {
                notices.push_back("block " + s.label + "@" + detail::format_ratio(ratio) +
                                  " dropped from tests: a method has no successful runs");
            }
        }
    }

    auto os = detail::open_out(dir / "stats.txt");
    os << "methods:";
    for (const std::string& m : methods) os << ' ' << m;
    os << "\nblocks (dataset x ratio): " << blocks.size() << "\n";

    if (methods.size() >= 3 && blocks.size() >= 2) {
        Mat scores(blocks.size(), methods.size());
        for (std::size_t i = 0; i < blocks.size(); ++i)
            for (std::size_t j = 0; j < methods.size(); ++j) scores(i, j) = blocks[i][j];
        const TestResult fr = friedman_test(scores, 0.05);
        std::vector<double> rank_sum(methods.size(), 0.0);
        std::vector<double> row(methods.size());
        for (std::size_t i = 0; i < scores.rows(); ++i) {
            for (std::size_t j = 0; j < methods.size(); ++j) row[j] = scores(i, j);
            const std::vector<double> ranks = midranks(row);
            for (std::size_t j = 0; j < methods.size(); ++j) rank_sum[j] += ranks[j];
        }
        os << "friedman: chi2 " << format_full(fr.statistic) << ", p " << format_full(fr.p_value)
           << ", reject at 0.05: " << (fr.reject_at.value() ? "yes" : "no") << "\n";
        os << "average ranks:";
        for (std::size_t j = 0; j < methods.size(); ++j)
            os << ' ' << methods[j] << '='
               << format_full(rank_sum[j] / static_cast<double>(blocks.size()));
        os << "\n";
        double cd05 = std::numeric_limits<double>::quiet_NaN();
        try {
            cd05 = nemenyi_cd(methods.size(), blocks.size(), 0.05);
            os << "nemenyi cd: " << format_full(cd05) << " at alpha 0.05, "
               << format_full(nemenyi_cd(methods.size(), blocks.size(), 0.10))
               << " at alpha 0.10\n";
        } catch (const std::invalid_argument& e) {
            notices.push_back(std::string("nemenyi skipped: ") + e.what());
        }
        auto cds = detail::open_out(dir / "cd_diagram.csv");
        cds << "method,avg_rank,cd\n";
        for (std::size_t j = 0; j < methods.size(); ++j)
            cds << methods[j] << ','
                << format_full(rank_sum[j] / static_cast<double>(blocks.size())) << ','
                << format_full(cd05) << "\n";
    } else if (methods.size() == 2 && !blocks.empty()) {
        std::vector<double> a, b;
        for (const std::vector<double>& row : blocks) {
            a.push_back(row[0]);
            b.push_back(row[1]);
        }
        try {
            const TestResult w = wilcoxon_signed_rank(a, b, Alternative::less, 0.05);
            os << "wilcoxon (" << methods[0] << " < " << methods[1] << "): W+ "
               << format_full(w.statistic) << ", one-sided p " << format_full(w.p_value)
               << ", reject at 0.05: " << (w.reject_at.value() ? "yes" : "no") << "\n";
        } catch (const std::invalid_argument& e) {
            notices.push_back(std::string("wilcoxon skipped: ") + e.what());
        }
    } else {
        notices.push_back("rank tests skipped: need >= 2 methods and >= 1 block (>= 2 blocks "
                          "for friedman)");
    }
    for (const std::string& n : notices) os << "notice: " << n << "\n";
    for (const std::string& n : notices) log << "report: " << n << "\n";
    log << "report: " << summary.size() << " summary rows, " << blocks.size()
        << " test blocks -> " << out_dir << "\n";
}

}  // namespace gorelm
