#pragma once

#include <string>
#include <vector>

#include "nsdyn/marketdata.hpp"
#include "nsdyn/nscurve.hpp"
#include "nsdyn/series.hpp"
#include "nsdyn/signals.hpp"

namespace nsdyn::portfolio {

/// Contract-level spread shape a strategy trades.
enum class Geometry { OutrightFront, SlopeSpread, Butterfly };

/// Strategy families: curve strategies (L, S, C), their long-only naive
/// benchmarks, and characteristic-sorted factor portfolios.
enum class Family { L, S, C, LAVG, SAVG, CAVG, Factor };

Geometry geometry_for(Family family);
Family parse_family(const std::string& name);
std::string to_string(Family family);

struct BookEntry {
    std::string commodity_id;
    int location = 1;
    double weight = 0.0;
    bool long_leg = true;
};

struct BookDay {
    Date date;
    std::vector<BookEntry> entries;
    bool degenerate = false;
};

/// Dated signed contract-location weights. Non-degenerate days satisfy
/// sum(|w|) = 1 with 0.5 in each leg; a day with one empty signal leg trades
/// the populated leg at 0.5 gross and is flagged.
struct WeightBook {
    std::string name;
    Geometry geometry = Geometry::OutrightFront;
    bool monthly = false;
    std::vector<BookDay> days;
};

/// Cross-sectional book: positive signals form the long leg. For L,
/// zero-signal commodities are excluded; for S and C they join the short leg.
WeightBook build_cs_book(const signals::SignalPanel& signal, Family family);

/// Time-series book: every nonzero-signal commodity trades its own spread
/// with equal capital 1/N and direction sign(signal); per-contract magnitudes
/// are 1/N (front), 1/(2N) on locations 1/4, or 1/(4N)-1/(2N)-1/(4N).
WeightBook build_ts_book(const signals::SignalPanel& signal, Family family);

/// Long-only, daily-rebalanced equal-weight benchmark (LAVG/SAVG/CAVG).
WeightBook build_naive_book(Family kind, const marketdata::Market& market);

/// Monthly median-split factor book on fronts: the documented direction per
/// characteristic decides which half is long (high for MOM/CARRY/HP/BMOM/RB/
/// CURVEM, low for SKEW/LIQ); odd cross-sections put the extra name long.
WeightBook build_factor_book(const signals::SignalPanel& characteristic,
                             bool long_high);

/// Cross-sectional sample standard deviation of the fitted slope betas.
double dispersion(const nscurve::FitPanel& fits, const Date& date);

/// Dispersion on every panel date (NaN where fewer than two commodities).
ReturnSeries dispersion_series(const nscurve::FitPanel& fits);

struct TimingConfig {
    int d = 5;               // trailing window, one of {3,5,10,15,22}
    bool expanding = false;  // calibrate c on an expanding window instead
};

/// Volatility-timed series r_t * (trailing-d mean dispersion before t) / c,
/// with c matching the timed series' full-sample volatility to the original.
/// When c_out is given, the calibrated scale is stored there.
ReturnSeries timed_returns(const ReturnSeries& base,
                           const ReturnSeries& dispersions,
                           const TimingConfig& config, double* c_out = nullptr);

/// Leverage path sigma_hat/c actually applied on each timed day.
ReturnSeries timing_leverage(const ReturnSeries& base,
                             const ReturnSeries& dispersions,
                             const TimingConfig& config);

/// 50/50 two-sleeve blend; sleeves drift intramonth and are rebalanced back
/// to equal capital at each month-end close.
ReturnSeries blend(const ReturnSeries& a, const ReturnSeries& b);

void write_book_csv(const WeightBook& book, const std::string& path);

}  // namespace nsdyn::portfolio
