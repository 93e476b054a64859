#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nsdyn/marketdata.hpp"
#include "nsdyn/nscurve.hpp"
#include "nsdyn/portfolio.hpp"
#include "nsdyn/series.hpp"
#include "nsdyn/signals.hpp"

namespace nsdyn::backtest {

/// Transaction-cost parameters shared by the three scenarios:
///   TC1 = commission / (F * multiplier)
///   TC2 = flat_rate
///   TC3 = (commission + impact_ticks * tick * multiplier) / (F * multiplier)
struct CostModel {
    double commission = 1.5;
    double flat_rate = 0.000167;
    double impact_ticks = 0.25;
    /// Spread geometries cross costs once per leg pair: each contract leg of
    /// a slope spread or butterfly is charged half the outright unit cost.
    bool spread_tickets = true;
};

/// Unit cost as a fraction of traded notional under scenario 1, 2 or 3.
double unit_cost(int scenario, const CostModel& cost,
                 const marketdata::ContractChain& chain, double price);

struct BacktestResult {
    ReturnSeries gross;
    std::vector<double> turnover;       // aligned with gross.dates
    std::array<ReturnSeries, 3> net;    // TC1, TC2, TC3
    std::vector<std::string> flags;     // aligned; tokens joined by '|'
};

/// Evaluates a weight book day by day: positions formed at each book date,
/// drifted with contract returns, remapped through rolls between rebalances,
/// with contract-keyed turnover and per-scenario cost drags.
BacktestResult run_book(const portfolio::WeightBook& book,
                        const marketdata::Market& market,
                        const CostModel& cost);

ReturnSeries gross_returns(const portfolio::WeightBook& book,
                           const marketdata::Market& market);

std::vector<double> turnover(const portfolio::WeightBook& book,
                             const marketdata::Market& market);

/// Signal-construction knobs shared by strategy definitions.
struct SignalParams {
    int ma = 1;          // trailing moving-average window on the signal
    int pca_window = 5;  // trailing window of the price-level PCA signal
    signals::CharacteristicParams characteristics;
};

/// One strategy definition: a curve book (L/S/C in cross-sectional or
/// time-series mode, driven by fitted beta changes or an alternative slope
/// signal), a long-only naive benchmark, or a characteristic-sorted factor
/// portfolio.
struct StrategySpec {
    std::string name;  // report label; derived from the fields when empty
    portfolio::Family family = portfolio::Family::S;
    bool time_series = false;
    std::string signal = "beta";  // beta | ds | dpc2 | ry
    int ry_k = 4;
    int fit_depth = 4;
    bool seasonal_all = false;           // seasonal curve model, all names
    std::set<std::string> seasonal_ids;  // ... or just these
    signals::Characteristic characteristic = signals::Characteristic::MOM;
    SignalParams params;
    bool timed = false;  // volatility-timing overlay (applied downstream)
};

std::string strategy_label(const StrategySpec& spec);

/// Universe masks applied before a run: named commodities, one sector, and
/// an inclusive date range.
struct RunFilters {
    std::vector<std::string> universe;
    std::optional<marketdata::Sector> sector;
    std::optional<Date> start;
    std::optional<Date> end;
};

marketdata::Market apply_filters(const marketdata::Market& market,
                                 const RunFilters& filters);

/// Builds the strategy's weight book. A precomputed fit panel (matching the
/// spec's depth and seasonal set) can be supplied; otherwise beta-driven
/// strategies fit the curve themselves.
portfolio::WeightBook build_strategy_book(
    const StrategySpec& spec, const marketdata::Market& market,
    const std::vector<marketdata::CotSeries>& cot,
    const nscurve::FitPanel* fits = nullptr, int threads = 1);

/// End-to-end evaluation of one strategy: signal -> book -> gross/turnover/
/// net series on the (already filtered) market.
BacktestResult run(const StrategySpec& spec, const marketdata::Market& market,
                   const std::vector<marketdata::CotSeries>& cot,
                   const CostModel& cost,
                   const nscurve::FitPanel* fits = nullptr, int threads = 1);

void write_backtest_csv(const BacktestResult& result, const std::string& path);
BacktestResult read_backtest_csv(const std::string& path);

}  // namespace nsdyn::backtest
