#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nsdyn/dates.hpp"
#include "nsdyn/series.hpp"

namespace nsdyn::perfstats {

struct PerfSummary {
    double ann_mean_geometric = kNaN;
    double ann_mean_arithmetic = kNaN;
    double ann_volatility = kNaN;
    double ann_downside_volatility = kNaN;
    double sharpe = kNaN;            // arithmetic annualized mean over volatility
    double sharpe_geometric = kNaN;  // geometric-mean numerator variant
    double sortino = kNaN;
    double omega = kNaN;
    double skewness = kNaN;
    double excess_kurtosis = kNaN;
    double var99_cornish_fisher = kNaN;  // positive daily loss magnitude
    double pct_positive_months = kNaN;   // NaN when under one month of data
    double max_drawdown = kNaN;          // <= 0
    double cer = kNaN;                   // power-utility certainty equivalent
    bool degenerate_ratios = false;      // zero volatility
    long n_obs = 0;
};

/// Full statistics row set on a daily (or other frequency) return series.
/// `n_per_year` annualizes; `gamma` is the relative risk aversion of the CER.
/// Skewness and kurtosis use population central-moment estimators by default;
/// `adjusted_moments` switches to the bias-corrected sample versions.
PerfSummary summarize(const ReturnSeries& returns, int n_per_year = 252,
                      double gamma = 5.0, bool adjusted_moments = false);

/// Named regressor columns aligned with dates (no intercept column; the
/// regression adds it unless suppressed).
struct RegressorTable {
    std::vector<std::string> names;
    std::vector<Date> dates;
    Eigen::MatrixXd x;
};

struct RegressionReport {
    std::vector<std::string> names;  // includes "alpha" when intercept present
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::VectorXd tstat;
    double alpha_annualized = kNaN;
    double r2 = kNaN;
    double adj_r2 = kNaN;
    std::vector<double> residuals;
    std::vector<Date> dates;
    int lag = 0;
    long n_obs = 0;
    bool degenerate = false;  // zero residual variance
};

inline constexpr int kAutoLag = -1;

/// OLS with Bartlett-kernel heteroskedasticity-and-autocorrelation-consistent
/// standard errors. lag = kAutoLag picks floor(4*(T/100)^(2/9)); lag 0 is the
/// heteroskedasticity-only covariance. The intercept is annualized by
/// `periods_per_year` into alpha_annualized.
RegressionReport nw_regression(const ReturnSeries& y, const RegressorTable& x,
                               int lag = kAutoLag, bool intercept = true,
                               int periods_per_year = 252);

/// Strategy returns regressed on factor returns, daily or after compounding
/// both sides into calendar months (periods_per_year becomes 12).
RegressionReport spanning(const ReturnSeries& strategy,
                          const RegressorTable& factors, bool monthly,
                          int lag = kAutoLag);

struct ConditionalPerf {
    PerfSummary high;
    PerfSummary low;
    double diff_tstat = kNaN;  // HAC t on the high-minus-low mean difference
    bool one_sided = false;    // a partition was empty
};

/// Splits return days by an external indicator relative to its full-sample
/// mean (values carried forward to return dates), then summarizes each side.
ConditionalPerf conditional_perf(const ReturnSeries& returns,
                                 const ReturnSeries& indicator,
                                 int n_per_year = 252);

struct WeekdayRow {
    int weekday = 0;  // ISO: 1 = Monday
    double ann_mean = kNaN;
    double tstat = kNaN;
    long n_obs = 0;
};

std::vector<WeekdayRow> weekday_perf(const ReturnSeries& returns,
                                     int n_per_year = 252);

/// Cumulative value of one unit: prod(1 + r_t + rf_t), rf defaulting to zero.
ReturnSeries wealth_curve(const ReturnSeries& returns,
                          const ReturnSeries* risk_free = nullptr);

struct SharpeDifference {
    double sr_a = kNaN;
    double sr_b = kNaN;
    double statistic = kNaN;
    double p_value = kNaN;
};

/// Delta-method test on the difference of (per-period) Sharpe ratios with
/// HAC-estimated moment covariances. Overlapping dates are tested jointly;
/// disjoint samples are treated as independent.
SharpeDifference sharpe_difference_test(const ReturnSeries& a,
                                        const ReturnSeries& b);

}  // namespace nsdyn::perfstats
