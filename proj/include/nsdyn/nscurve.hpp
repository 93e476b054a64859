#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nsdyn/dates.hpp"
#include "nsdyn/marketdata.hpp"
#include "nsdyn/series.hpp"

namespace nsdyn::nscurve {

/// Which curve components enter the fit. The level column is always present.
struct ComponentSet {
    bool slope = true;
    bool curvature = true;

    int count() const { return 1 + (slope ? 1 : 0) + (curvature ? 1 : 0); }
};

/// Unique positive root x* of e^{-x}(1 + x + x^2) = 1, the argument at which
/// the curvature loading peaks. Located by bracketing and bisection to
/// |f| < 1e-12; cached after the first call.
double curvature_root();

/// Decay factor lambda = x* / avg_maturity, placing the curvature-loading
/// peak at the average maturity of the snapshot.
double decay_factor(double avg_maturity_months);

/// Slope loading (1 - e^{-x})/x at x = lambda * maturity; -> 1 as x -> 0.
double slope_loading(double x);

/// Curvature loading (1 - e^{-x})/x - e^{-x}; -> 0 as x -> 0.
double curvature_loading(double x);

/// The decay factor used for a maturity list: x* over the arithmetic mean.
double lambda_for_maturities(const std::vector<double>& maturity_months);

/// Design matrix of the curve model at the given maturities: level column of
/// ones, then slope and curvature columns per the ComponentSet.
Eigen::MatrixXd ns_loadings(double lambda,
                            const std::vector<double>& maturity_months,
                            const ComponentSet& components);

struct NSFit {
    Date date;
    std::string commodity_id;
    double beta_level = 0.0;
    double beta_slope = 0.0;
    double beta_curvature = 0.0;
    double lambda = 0.0;
    double r_squared = 0.0;
    std::vector<double> residuals;
};

/// Curve fit with the extra seasonal column cos(omega*M - omega*theta),
/// omega = 2*pi/12, theta picked from the integer grid 1..12 by maximal R^2.
struct SeasonalNSFit : NSFit {
    double beta_seasonal = 0.0;
    int theta = 0;
};

inline constexpr double kSeasonalOmega = 2.0 * 3.14159265358979323846 / 12.0;

/// OLS fit of snapshot prices on the curve loadings; lambda from
/// decay_factor at the snapshot's average maturity.
NSFit fit_ns(const marketdata::CurveSnapshot& snapshot,
             const ComponentSet& components = {});

SeasonalNSFit fit_ns_seasonal(const marketdata::CurveSnapshot& snapshot);

/// Date-by-commodity panels of fitted parameters. Gaps are NaN; days where a
/// fit failed (rank deficiency) are listed in `failures`.
struct FitPanel {
    std::vector<Date> dates;
    std::vector<std::string> ids;
    SeriesPanel beta_level;
    SeriesPanel beta_slope;
    SeriesPanel beta_curvature;
    SeriesPanel beta_seasonal;  // NaN for plain fits
    SeriesPanel theta;          // NaN for plain fits
    SeriesPanel lambda;
    SeriesPanel r2;
    std::vector<std::pair<Date, std::string>> failures;
};

/// Fits every available commodity-day at depth K. Commodities listed in
/// `seasonal_ids` use the seasonal model (requires K >= 5).
FitPanel fit_panel(const marketdata::Market& market, int k,
                   const ComponentSet& components,
                   const std::set<std::string>& seasonal_ids, int threads = 1);

void write_fit_csv(const FitPanel& panel, const std::string& path);

}  // namespace nsdyn::nscurve
