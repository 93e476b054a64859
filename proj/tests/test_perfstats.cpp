#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nsdyn/errors.hpp"
#include "nsdyn/perfstats.hpp"

#include "helpers.hpp"

using namespace nsdyn;
using namespace nsdyn::perfstats;
using testutil::fixture;
using testutil::series;
using testutil::weekdays;

namespace {

RegressorTable single_factor(const ReturnSeries& f, const std::string& name) {
    RegressorTable x;
    x.names = {name};
    x.dates = f.dates;
    x.x.resize(static_cast<Eigen::Index>(f.values.size()), 1);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        x.x(static_cast<Eigen::Index>(i), 0) = f.values[i];
    return x;
}

ReturnSeries random_series(Date start, int n, unsigned seed, double mu,
                           double sigma) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(mu, sigma);
    ReturnSeries out;
    out.dates = weekdays(start, n);
    for (int i = 0; i < n; ++i) out.values.push_back(noise(rng));
    return out;
}

}  // namespace

TEST_CASE("summary statistics on a constant return path") {
    // A dyadic constant keeps the sample mean bit-exact, so every deviation
    // is exactly zero and the ratio statistics degenerate cleanly.
    const double c = 0.0009765625;  // 2^-10
    auto r = series(Date(2020, 1, 6), std::vector<double>(504, c));
    PerfSummary s = summarize(r);

    CHECK(s.n_obs == 504);
    CHECK(s.ann_mean_arithmetic == doctest::Approx(252.0 * c).epsilon(1e-14));
    CHECK(s.ann_mean_geometric ==
          doctest::Approx(std::pow(1.0 + c, 252.0) - 1.0).epsilon(1e-12));
    CHECK(s.ann_volatility == 0.0);
    CHECK(s.degenerate_ratios);
    CHECK(std::isnan(s.sharpe));
    CHECK(s.max_drawdown == 0.0);
    CHECK(std::isinf(s.omega));
    CHECK(s.pct_positive_months == 1.0);

    // Certainty equivalent by direct evaluation of the utility mean.
    double expected_cer =
        252.0 * (std::pow(1.0 + c, -4.0) - 1.0) / (-4.0);
    CHECK(std::fabs(s.cer - expected_cer) < 1e-10);

    // gamma enters through the utility curvature.
    PerfSummary g2 = summarize(r, 252, 2.0);
    CHECK(std::fabs(g2.cer -
                    252.0 * (std::pow(1.0 + c, -1.0) - 1.0) / (-1.0)) < 1e-10);
}

TEST_CASE("losing everything collapses the geometric statistics") {
    auto r = series(Date(2020, 1, 6), {0.05, -1.0, 0.02});
    PerfSummary s = summarize(r);
    CHECK(s.ann_mean_geometric == -1.0);
    CHECK(std::isnan(s.cer));
    CHECK(s.max_drawdown == -1.0);
}

TEST_CASE("drawdown tracks the running peak") {
    auto r = series(Date(2020, 1, 6), {0.1, -0.5, 0.2});
    PerfSummary s = summarize(r);
    CHECK(s.max_drawdown == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("a dyadic symmetric sample zeroes the quantile adjustment exactly") {
    // mean 0, m2 = 1, m3 = 0, m4 = 3: skewness and excess kurtosis are
    // exactly zero in floating point, so the adjusted quantile collapses to
    // the plain normal one.
    auto r = series(Date(2020, 1, 6),
                    {2.0, -2.0, 1.0, -1.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                     0.0});
    PerfSummary s = summarize(r);
    CHECK(s.skewness == 0.0);
    CHECK(s.excess_kurtosis == 0.0);
    double sd = std::sqrt(12.0 / 11.0);
    CHECK(s.var99_cornish_fisher == 2.32635 * sd);

    // Asymmetry re-enters through the skew term with the documented sign.
    auto skewed = series(Date(2020, 1, 6), {0.3, -0.1, -0.1, -0.1});
    PerfSummary sk = summarize(skewed);
    CHECK(sk.skewness > 0.0);
    double z = -2.32635;
    double zcf = z + (z * z - 1.0) * sk.skewness / 6.0 +
                 (z * z * z - 3.0 * z) * sk.excess_kurtosis / 24.0 -
                 (2.0 * z * z * z - 5.0 * z) * sk.skewness * sk.skewness / 36.0;
    double daily_mean = 0.0;
    for (double v : skewed.values) daily_mean += v;
    daily_mean /= 4.0;
    double daily_sd = sk.ann_volatility / std::sqrt(252.0);
    CHECK(sk.var99_cornish_fisher ==
          doctest::Approx(-(daily_mean + daily_sd * zcf)).epsilon(1e-12));
}

TEST_CASE("omega is one on sign-symmetric samples") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.001, 0.05);
    std::vector<double> vals;
    for (int i = 0; i < 30; ++i) {
        double x = u(rng);
        vals.push_back(x);
        vals.push_back(-x);
    }
    PerfSummary s = summarize(series(Date(2020, 1, 6), vals));
    CHECK(s.omega == 1.0);
}

TEST_CASE("moment estimators switch between population and adjusted forms") {
    auto r = random_series(Date(2020, 1, 6), 60, 7, 0.0, 0.01);
    PerfSummary pop = summarize(r, 252, 5.0, false);
    PerfSummary adj = summarize(r, 252, 5.0, true);
    double n = 60.0;
    CHECK(adj.skewness ==
          doctest::Approx(pop.skewness * std::sqrt(n * (n - 1.0)) / (n - 2.0))
              .epsilon(1e-12));
    CHECK(adj.excess_kurtosis ==
          doctest::Approx(((n + 1.0) * pop.excess_kurtosis + 6.0) * (n - 1.0) /
                          ((n - 2.0) * (n - 3.0)))
              .epsilon(1e-12));
    // The location/scale statistics are unaffected by the switch.
    CHECK(adj.ann_volatility == pop.ann_volatility);
    CHECK(adj.ann_mean_arithmetic == pop.ann_mean_arithmetic);
}

TEST_CASE("lag-zero regression errors match the plain heteroskedastic form") {
    auto y = random_series(Date(2020, 1, 6), 40, 11, 0.001, 0.02);
    auto f = random_series(Date(2020, 1, 6), 40, 13, 0.0, 0.015);
    RegressorTable x = single_factor(f, "x");

    RegressionReport rep = nw_regression(y, x, 0);
    REQUIRE(rep.n_obs == 40);

    // Long-hand White covariance: (X'X)^-1 (sum e^2 x x') (X'X)^-1.
    Eigen::MatrixXd design(40, 2);
    design.col(0).setOnes();
    for (int i = 0; i < 40; ++i) design(i, 1) = f.values[std::size_t(i)];
    Eigen::VectorXd yv(40);
    for (int i = 0; i < 40; ++i) yv(i) = y.values[std::size_t(i)];
    Eigen::VectorXd beta =
        (design.transpose() * design).ldlt().solve(design.transpose() * yv);
    Eigen::VectorXd resid = yv - design * beta;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
    for (int i = 0; i < 40; ++i)
        meat += resid(i) * resid(i) * design.row(i).transpose() * design.row(i);
    Eigen::MatrixXd bread =
        (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(2, 2));
    Eigen::MatrixXd cov = bread * meat * bread;

    CHECK(rep.coef(0) == doctest::Approx(beta(0)).epsilon(1e-10));
    CHECK(rep.coef(1) == doctest::Approx(beta(1)).epsilon(1e-10));
    CHECK(rep.se(0) == doctest::Approx(std::sqrt(cov(0, 0))).epsilon(1e-12));
    CHECK(rep.se(1) == doctest::Approx(std::sqrt(cov(1, 1))).epsilon(1e-12));
}

TEST_CASE("an eight-point regression matches the long-hand fixture") {
    std::ifstream in(fixture("nw8/series.csv"));
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    ReturnSeries y;
    std::vector<double> xs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        y.dates.push_back(Date::parse(field));
        std::getline(ss, field, ',');
        y.values.push_back(std::stod(field));
        std::getline(ss, field, ',');
        xs.push_back(std::stod(field));
    }
    REQUIRE(y.size() == 8);

    RegressorTable x;
    x.names = {"x"};
    x.dates = y.dates;
    x.x.resize(8, 1);
    for (int i = 0; i < 8; ++i) x.x(i, 0) = xs[std::size_t(i)];

    std::map<std::string, double> expected;
    std::ifstream exp(fixture("nw8/expected.csv"));
    REQUIRE(exp.good());
    std::getline(exp, line);
    while (std::getline(exp, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        expected[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    }

    RegressionReport rep = nw_regression(y, x);
    CHECK(rep.lag == int(expected.at("lag")));
    CHECK(std::fabs(rep.coef(0) - expected.at("coef_alpha")) < 1e-10);
    CHECK(std::fabs(rep.coef(1) - expected.at("coef_x")) < 1e-10);
    CHECK(std::fabs(rep.se(0) - expected.at("se_alpha")) < 1e-10);
    CHECK(std::fabs(rep.se(1) - expected.at("se_x")) < 1e-10);
    CHECK(std::fabs(rep.tstat(0) - expected.at("tstat_alpha")) < 1e-8);
    CHECK(std::fabs(rep.tstat(1) - expected.at("tstat_x")) < 1e-8);
    CHECK(std::fabs(rep.r2 - expected.at("r2")) < 1e-10);
    CHECK(std::fabs(rep.adj_r2 - expected.at("adj_r2")) < 1e-10);
    CHECK(rep.alpha_annualized ==
          doctest::Approx(rep.coef(0) * 252.0).epsilon(1e-14));
}

TEST_CASE("the automatic covariance lag follows the sample-size rule") {
    auto y = random_series(Date(2019, 1, 1), 100, 17, 0.0, 0.01);
    auto f = random_series(Date(2019, 1, 1), 100, 19, 0.0, 0.01);
    RegressionReport rep = nw_regression(y, single_factor(f, "x"));
    CHECK(rep.lag == 4);

    RegressionReport fixed = nw_regression(y, single_factor(f, "x"), 7);
    CHECK(fixed.lag == 7);
    CHECK_THROWS_AS(nw_regression(y, single_factor(f, "x"), -3), ConfigError);
}

TEST_CASE("collinear regressors are reported by name") {
    auto y = random_series(Date(2020, 1, 6), 30, 23, 0.0, 0.01);
    auto f = random_series(Date(2020, 1, 6), 30, 29, 0.0, 0.01);
    RegressorTable x;
    x.names = {"f", "twice_f"};
    x.dates = f.dates;
    x.x.resize(30, 2);
    for (int i = 0; i < 30; ++i) {
        x.x(i, 0) = f.values[std::size_t(i)];
        x.x(i, 1) = 2.0 * f.values[std::size_t(i)];
    }
    CHECK_THROWS_AS(nw_regression(y, x), NumericError);
}

TEST_CASE("too few overlapping observations is a data error") {
    auto y = random_series(Date(2020, 1, 6), 10, 31, 0.0, 0.01);
    auto f = random_series(Date(2020, 3, 2), 10, 37, 0.0, 0.01);
    CHECK_THROWS_AS(nw_regression(y, single_factor(f, "x")), DataError);
}

TEST_CASE("a strategy spans itself with zero alpha and unit beta") {
    auto y = random_series(Date(2019, 1, 1), 300, 41, 0.0004, 0.011);
    RegressorTable self = single_factor(y, "self");

    RegressionReport daily = spanning(y, self, false);
    CHECK(std::fabs(daily.coef(0)) < 1e-10);
    CHECK(std::fabs(daily.coef(1) - 1.0) < 1e-10);
    CHECK(daily.r2 == doctest::Approx(1.0).epsilon(1e-12));

    RegressionReport monthly = spanning(y, self, true);
    CHECK(std::fabs(monthly.coef(0)) < 1e-10);
    CHECK(std::fabs(monthly.coef(1) - 1.0) < 1e-10);
    CHECK(monthly.n_obs < daily.n_obs);  // months, not days
}

TEST_CASE("conditional splits follow the indicator relative to its mean") {
    auto dates = weekdays(Date(2020, 1, 6), 40);
    ReturnSeries returns, indicator;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        bool high = i % 2 == 0;
        returns.dates.push_back(dates[i]);
        returns.values.push_back(high ? 0.01 : -0.01);
        indicator.dates.push_back(dates[i]);
        indicator.values.push_back(high ? 1.0 : -1.0);
    }

    ConditionalPerf cp = conditional_perf(returns, indicator);
    CHECK(!cp.one_sided);
    CHECK(cp.high.n_obs == 20);
    CHECK(cp.low.n_obs == 20);
    CHECK(cp.high.ann_mean_arithmetic == doctest::Approx(2.52).epsilon(1e-12));
    CHECK(cp.low.ann_mean_arithmetic == doctest::Approx(-2.52).epsilon(1e-12));

    // With residual noise the high-minus-low gap is strongly significant.
    ReturnSeries noisy = returns;
    std::mt19937_64 rng(59);
    std::normal_distribution<double> eps(0.0, 0.002);
    for (auto& v : noisy.values) v += eps(rng);
    ConditionalPerf significant = conditional_perf(noisy, indicator);
    CHECK(significant.diff_tstat > 2.0);

    // A constant indicator puts every day in the high bucket.
    ReturnSeries flat = indicator;
    for (auto& v : flat.values) v = 3.0;
    ConditionalPerf one = conditional_perf(returns, flat);
    CHECK(one.one_sided);
    CHECK(one.high.n_obs == 40);

    // Sparse indicators carry forward to later return days.
    ReturnSeries sparse;
    sparse.dates = {dates[0], dates[10]};
    sparse.values = {1.0, -1.0};  // mean 0: first stretch high, second low
    ConditionalPerf carried = conditional_perf(returns, sparse);
    CHECK(carried.high.n_obs == 10);
    CHECK(carried.low.n_obs == 30);
}

TEST_CASE("weekday rows bucket by ISO day and annualize the bucket mean") {
    auto dates = weekdays(Date(2020, 1, 6), 20);  // four full weeks
    ReturnSeries r;
    for (const auto& d : dates) {
        r.dates.push_back(d);
        r.values.push_back(d.weekday() == 1 ? 0.01 : 0.0);
    }
    auto rows = weekday_perf(r);
    REQUIRE(rows.size() == 5);
    for (const auto& row : rows) {
        CHECK(row.n_obs == 4);
        if (row.weekday == 1)
            CHECK(row.ann_mean == doctest::Approx(2.52).epsilon(1e-12));
        else
            CHECK(row.ann_mean == 0.0);
    }
}

TEST_CASE("wealth curves compound returns plus the aligned risk-free rate") {
    auto dates = weekdays(Date(2020, 1, 6), 3);
    ReturnSeries r{dates, {0.1, -0.05, 0.02}};
    ReturnSeries curve = wealth_curve(r);
    CHECK(curve.values[0] == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(curve.values[1] == doctest::Approx(1.1 * 0.95).epsilon(1e-15));
    CHECK(curve.values[2] == doctest::Approx(1.1 * 0.95 * 1.02).epsilon(1e-15));

    ReturnSeries rf{{dates[1]}, {0.01}};
    ReturnSeries funded = wealth_curve(r, &rf);
    CHECK(funded.values[0] == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(funded.values[1] == doctest::Approx(1.1 * 0.96).epsilon(1e-15));
}

TEST_CASE("identical series have an exactly zero Sharpe difference") {
    auto a = random_series(Date(2020, 1, 6), 120, 43, 0.0005, 0.01);
    SharpeDifference d = sharpe_difference_test(a, a);
    CHECK(d.sr_a == d.sr_b);
    CHECK(d.statistic == 0.0);
    CHECK(d.p_value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("disjoint samples are compared as independent") {
    auto a = random_series(Date(2020, 1, 6), 80, 47, 0.002, 0.01);
    auto b = random_series(Date(2021, 1, 4), 80, 53, -0.002, 0.01);
    SharpeDifference d = sharpe_difference_test(a, b);
    CHECK(d.sr_a > d.sr_b);
    CHECK(d.statistic > 0.0);
    CHECK(d.p_value < 1.0);

    auto flat = series(Date(2020, 1, 6), std::vector<double>(10, 0.001));
    CHECK_THROWS_AS(sharpe_difference_test(flat, flat), NumericError);
}
