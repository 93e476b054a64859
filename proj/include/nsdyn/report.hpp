#pragma once

#include <string>
#include <vector>

#include "nsdyn/backtest.hpp"
#include "nsdyn/perfstats.hpp"
#include "nsdyn/series.hpp"

namespace nsdyn::report {

struct StrategyTable {
    std::string name;
    backtest::BacktestResult result;
    ReturnSeries leverage;  // empty unless a timing overlay ran
};

struct TableConfig {
    int n_per_year = 252;
    double gamma = 5.0;
    int nw_lag = perfstats::kAutoLag;
    bool adjusted_moments = false;
    bool spanning_monthly = true;
    std::vector<Date> subsample_cuts;  // sorted; adds per-segment summary rows
};

/// Writes the CSV table set into `dir` (which must exist):
///   summary.csv     one row per strategy x return basis x sample segment
///   turnover.csv    average turnover and annualized cost drags
///   spanning.csv    each strategy regressed on all the others (long format)
///   conditional.csv high/low indicator-split performance (needs indicator)
///   weekday.csv     day-of-week annualized means
///   wealth.csv      cumulative gross wealth curves (plus risk-free if given)
///   leverage.csv    timing leverage paths (only when some strategy has one)
void write_tables(const std::string& dir,
                  const std::vector<StrategyTable>& strategies,
                  const ReturnSeries* indicator, const ReturnSeries* risk_free,
                  const TableConfig& config);

}  // namespace nsdyn::report
