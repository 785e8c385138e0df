#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gorelm/experiment.hpp"

namespace {

// 0 success, 1 usage or config error, 2 data error, 3 solver failure.
int dispatch(const std::string& subcommand, const std::string& config_path,
             const std::string& out_dir, std::size_t threads, bool seed_given,
             std::uint64_t seed, const std::vector<std::string>& results) {
    try {
        if (subcommand == "report") {
            gorelm::cmd_report(results, out_dir);
            return 0;
        }
        gorelm::ExperimentConfig cfg = gorelm::load_config(config_path);
        if (seed_given) cfg.base_seed = seed;
        if (subcommand == "prepare")
            gorelm::cmd_prepare(cfg, out_dir);
        else if (subcommand == "search")
            gorelm::cmd_search(cfg, out_dir);
        else
            gorelm::cmd_run(cfg, out_dir, threads);
        return 0;
    } catch (const gorelm::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const gorelm::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gorelm::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gorelm::FactorizationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const gorelm::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-target regression experiment runner for the ELM solver family"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::size_t threads = 1;
    std::uint64_t seed = 0;
    std::vector<std::string> results;

    CLI::Option* seed_opt = nullptr;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config JSON")->required();
        sub->add_option("--out", out_dir, "artifact directory");
        seed_opt = sub->add_option("--seed", seed, "override the config's base seed");
    };

    CLI::App* prepare = app.add_subcommand("prepare", "split, normalize and contaminate");
    add_common(prepare);
    CLI::App* search = app.add_subcommand("search", "k-fold hyperparameter search");
    add_common(search);
    CLI::App* run = app.add_subcommand("run", "train and evaluate every configured cell");
    add_common(run);
    run->add_option("--threads", threads, "worker threads for the run grid");
    CLI::App* report = app.add_subcommand("report", "summaries and rank tests from results CSVs");
    report->add_option("results", results, "results CSV paths")->required();
    report->add_option("--out", out_dir, "artifact directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    return dispatch(sub, config_path, out_dir, threads, seed_opt && seed_opt->count() > 0, seed,
                    results);
}
