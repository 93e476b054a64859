#pragma once

#include <string>
#include <vector>

#include "nsdyn/marketdata.hpp"
#include "nsdyn/nscurve.hpp"
#include "nsdyn/series.hpp"

namespace nsdyn::signals {

/// Dated cross-sectional signal values; gaps are NaN.
struct SignalPanel {
    std::string kind;
    SeriesPanel values;
};

enum class Beta { Level, Slope, Curvature };

/// Day-over-day change of a fitted beta; gap when either day is missing.
SignalPanel delta_beta(const nscurve::FitPanel& fits, Beta which);

/// Unweighted trailing moving average over `window` consecutive rows.
SignalPanel smooth(const SignalPanel& panel, int window);

/// Change of the price slope S_t = F^1_t - F^4_t between consecutive days.
SignalPanel slope_diff(const marketdata::Market& market);

/// Change of the projection onto the second principal component of the 4x4
/// covariance of daily prices over a trailing window. The eigenvector is
/// oriented so its front-minus-fourth loading is positive; days with an
/// ambiguous second component (repeated eigenvalues) are gaps.
SignalPanel pca_slope(const marketdata::Market& market, int window = 5);

/// Roll yield F^1/F^k - 1; commodities without k priced locations are gaps.
SignalPanel roll_yield(const marketdata::Market& market, int k);

enum class Characteristic { MOM, CARRY, HP, SKEW, BMOM, RB, LIQ, CURVEM };

Characteristic parse_characteristic(const std::string& name);
std::string to_string(Characteristic kind);

/// Sorting direction of the factor portfolios: true when the high half of the
/// characteristic goes long (all kinds except SKEW and LIQ).
bool sort_long_high(Characteristic kind);

struct CharacteristicParams {
    int skew_days = 252;      // trailing window for SKEW
    int liq_days = 42;        // trailing window for LIQ
    int curvem_location = 2;  // contract location for CURVEM
};

/// Appendix-style sorting characteristics. Momentum kinds (MOM, BMOM, CURVEM)
/// compound daily excess returns within calendar months and emit on each
/// commodity's last trading day of the month once 12 complete months exist;
/// the others emit daily where their trailing windows are complete.
SignalPanel characteristic(Characteristic kind,
                           const marketdata::Market& market,
                           const std::vector<marketdata::CotSeries>& cot,
                           const CharacteristicParams& params = {});

void write_signal_csv(const SignalPanel& panel, const std::string& path);

}  // namespace nsdyn::signals
