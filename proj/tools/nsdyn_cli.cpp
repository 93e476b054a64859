#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nsdyn/errors.hpp"
#include "nsdyn/pipeline.hpp"
#include "nsdyn/simulate.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    int threads = 0;
    bool has_seed = false;
    bool has_out = false;
    bool has_threads = false;
};

void add_common(CLI::App* cmd, Options& opt, bool config_required) {
    auto* config = cmd->add_option("--config", opt.config,
                                   "Configuration file (JSON)");
    if (config_required) config->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", opt.seed, "Override the config seed")
        ->each([&opt](const std::string&) { opt.has_seed = true; });
    cmd->add_option("--out", opt.out, "Override the output directory")
        ->each([&opt](const std::string&) { opt.has_out = true; });
    cmd->add_option("--threads", opt.threads, "Override the worker count")
        ->each([&opt](const std::string&) { opt.has_threads = true; });
}

nsdyn::pipeline::RunConfig load_with_overrides(const Options& opt) {
    auto config = nsdyn::pipeline::load_run_config(opt.config);
    if (opt.has_seed) config.seed = opt.seed;
    if (opt.has_out) config.out_dir = opt.out;
    if (opt.has_threads) {
        if (opt.threads < 1) throw nsdyn::ConfigError("threads must be >= 1");
        config.threads = opt.threads;
    }
    return config;
}

int cmd_simulate(const Options& opt) {
    const auto config = nsdyn::marketdata::load_sim_config(opt.config);
    const std::uint64_t seed = opt.has_seed ? opt.seed : 42;
    const std::string dir = opt.has_out ? opt.out : std::string("simdata");
    nsdyn::marketdata::write_sim_data(config, seed, dir);
    std::cout << dir << '\n';
    return 0;
}

int cmd_fit(const Options& opt) {
    nsdyn::pipeline::write_fit(load_with_overrides(opt));
    return 0;
}

int cmd_run(const Options& opt) {
    const auto config = load_with_overrides(opt);
    const auto outputs = nsdyn::pipeline::run(config);
    nsdyn::pipeline::write_run(config, outputs);
    std::cout << config.out_dir << '\n';
    return 0;
}

int cmd_report(const Options& opt) {
    if (!opt.has_out)
        throw nsdyn::ConfigError("report needs --out <run directory>");
    nsdyn::pipeline::regenerate_reports(opt.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Futures curve model fitting, spread strategies and backtests"};
    app.require_subcommand(1);

    Options opt;
    auto* simulate =
        app.add_subcommand("simulate", "Generate a synthetic market data set");
    add_common(simulate, opt, true);
    auto* fit = app.add_subcommand("fit", "Fit the curve model day by day");
    add_common(fit, opt, true);
    auto* run = app.add_subcommand(
        "run", "Full pipeline: fit, signals, books, backtests, reports");
    add_common(run, opt, true);
    auto* report = app.add_subcommand(
        "report", "Regenerate report tables from persisted results");
    add_common(report, opt, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(simulate)) return cmd_simulate(opt);
        if (app.got_subcommand(fit)) return cmd_fit(opt);
        if (app.got_subcommand(run)) return cmd_run(opt);
        return cmd_report(opt);
    } catch (const nsdyn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const nsdyn::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const nsdyn::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const nsdyn::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
