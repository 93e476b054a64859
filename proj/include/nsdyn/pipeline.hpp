#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "nsdyn/backtest.hpp"
#include "nsdyn/portfolio.hpp"
#include "nsdyn/report.hpp"
#include "nsdyn/series.hpp"
#include "nsdyn/simulate.hpp"

namespace nsdyn::pipeline {

/// Declarative run description (JSON file; see README for the key schema).
/// One seed drives all randomness; command-line flags override single keys.
struct RunConfig {
    // Data source: a directory of per-commodity price CSVs with a spec.json
    // (plus optional cot.csv), or a simulator config to generate the market
    // in memory.
    std::string data_dir;
    std::string spec_path;   // defaults to <data_dir>/spec.json
    std::string cot_path;    // defaults to <data_dir>/cot.csv when present
    std::string sim_config;  // simulator config path (alternative to data_dir)

    backtest::RunFilters filters;

    int fit_depth = 4;  // depth of the shared fit behind dispersion/timing
    std::set<std::string> fit_seasonal_ids;

    std::vector<backtest::StrategySpec> strategies;
    backtest::CostModel costs;
    portfolio::TimingConfig timing;
    report::TableConfig stats;  // includes the subsample cuts

    std::string indicator_csv;  // conditional-split driver; dispersion if empty
    std::string risk_free_csv;  // added into the wealth curves when given

    std::string out_dir = "out";
    std::uint64_t seed = 42;
    int threads = 1;
};

RunConfig load_run_config(const std::string& path);

/// Loads the configured data directory or simulates the market; fills `cot`.
marketdata::Market load_market(const RunConfig& config,
                               std::vector<marketdata::CotSeries>& cot);

struct StrategyRun {
    backtest::StrategySpec spec;
    std::string label;
    backtest::BacktestResult result;
    ReturnSeries leverage;  // timing overlay path; empty when not timed
};

struct RunOutputs {
    std::vector<StrategyRun> strategies;
    ReturnSeries dispersion;  // cross-sectional slope-beta dispersion
    ReturnSeries indicator;   // conditional-split series actually used
    ReturnSeries risk_free;
};

/// Filters the market, evaluates every configured strategy, and applies the
/// timing overlays. Deterministic for a fixed config (and thread count
/// independent).
RunOutputs run(const RunConfig& config);

/// Persists <out>/results (per-strategy series + metadata) and <out>/tables.
void write_run(const RunConfig& config, const RunOutputs& outputs);

/// Regenerates <run_dir>/tables from a persisted <run_dir>/results.
void regenerate_reports(const std::string& run_dir);

/// Fits the configured market at the configured depth and writes
/// <out>/fits.csv.
void write_fit(const RunConfig& config);

}  // namespace nsdyn::pipeline
