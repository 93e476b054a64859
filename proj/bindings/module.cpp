#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nsdyn/backtest.hpp"
#include "nsdyn/errors.hpp"
#include "nsdyn/marketdata.hpp"
#include "nsdyn/nscurve.hpp"
#include "nsdyn/perfstats.hpp"
#include "nsdyn/pipeline.hpp"
#include "nsdyn/portfolio.hpp"
#include "nsdyn/simulate.hpp"

namespace py = pybind11;
using namespace nsdyn;

namespace {

/// Loaded universe plus its trader-positioning series.
struct PyMarket {
    marketdata::Market market;
    std::vector<marketdata::CotSeries> cot;
};

PyMarket load_market(const std::string& data_dir) {
    pipeline::RunConfig config;
    config.data_dir = data_dir;
    PyMarket out;
    out.market = pipeline::load_market(config, out.cot);
    return out;
}

py::dict fit_curve(const std::vector<double>& maturity_months,
                   const std::vector<double>& prices, bool slope,
                   bool curvature, bool seasonal) {
    if (maturity_months.size() != prices.size())
        throw ConfigError("maturities and prices must have the same length");
    marketdata::CurveSnapshot snap;
    snap.commodity_id = "py";
    for (std::size_t i = 0; i < prices.size(); ++i)
        snap.points.push_back({int(i) + 1, maturity_months[i],
                               int(std::lround(maturity_months[i] * 30.4375)),
                               prices[i]});
    py::dict out;
    if (seasonal) {
        const auto fit = nscurve::fit_ns_seasonal(snap);
        out["beta_level"] = fit.beta_level;
        out["beta_slope"] = fit.beta_slope;
        out["beta_curvature"] = fit.beta_curvature;
        out["beta_seasonal"] = fit.beta_seasonal;
        out["theta"] = fit.theta;
        out["lambda"] = fit.lambda;
        out["r2"] = fit.r_squared;
    } else {
        const auto fit = nscurve::fit_ns(snap, {slope, curvature});
        out["beta_level"] = fit.beta_level;
        out["beta_slope"] = fit.beta_slope;
        out["beta_curvature"] = fit.beta_curvature;
        out["lambda"] = fit.lambda;
        out["r2"] = fit.r_squared;
    }
    return out;
}

ReturnSeries to_series(const std::vector<std::string>& dates,
                       const std::vector<double>& values) {
    if (dates.size() != values.size())
        throw ConfigError("dates and values must have the same length");
    ReturnSeries s;
    for (const auto& d : dates) s.dates.push_back(Date::parse(d));
    s.values = values;
    return s;
}

py::dict backtest_dict(const backtest::BacktestResult& result) {
    std::vector<std::string> dates;
    for (const auto& d : result.gross.dates) dates.push_back(d.to_string());
    py::dict out;
    out["dates"] = dates;
    out["gross"] = result.gross.values;
    out["turnover"] = result.turnover;
    out["net_tc1"] = result.net[0].values;
    out["net_tc2"] = result.net[1].values;
    out["net_tc3"] = result.net[2].values;
    out["flags"] = result.flags;
    return out;
}

py::dict strategy_backtest(const PyMarket& pm, const std::string& family,
                           const std::string& mode, const std::string& signal,
                           int depth, int ma, const std::string& characteristic,
                           int ry_k) {
    backtest::StrategySpec spec;
    spec.family = portfolio::parse_family(family);
    spec.time_series = mode == "ts";
    spec.signal = signal;
    spec.fit_depth = depth;
    spec.params.ma = ma;
    spec.ry_k = ry_k;
    if (!characteristic.empty())
        spec.characteristic = signals::parse_characteristic(characteristic);
    return backtest_dict(
        backtest::run(spec, pm.market, pm.cot, backtest::CostModel{}));
}

py::dict summarize(const std::vector<double>& returns, int n_per_year,
                   double gamma) {
    ReturnSeries s;
    for (std::size_t i = 0; i < returns.size(); ++i)
        s.dates.push_back(Date(int(i)));
    s.values = returns;
    const auto p = perfstats::summarize(s, n_per_year, gamma);
    py::dict out;
    out["n_obs"] = p.n_obs;
    out["ann_mean_geometric"] = p.ann_mean_geometric;
    out["ann_mean_arithmetic"] = p.ann_mean_arithmetic;
    out["ann_volatility"] = p.ann_volatility;
    out["ann_downside_volatility"] = p.ann_downside_volatility;
    out["sharpe"] = p.sharpe;
    out["sharpe_geometric"] = p.sharpe_geometric;
    out["sortino"] = p.sortino;
    out["omega"] = p.omega;
    out["skewness"] = p.skewness;
    out["excess_kurtosis"] = p.excess_kurtosis;
    out["var99_cornish_fisher"] = p.var99_cornish_fisher;
    out["pct_positive_months"] = p.pct_positive_months;
    out["max_drawdown"] = p.max_drawdown;
    out["cer"] = p.cer;
    out["degenerate_ratios"] = p.degenerate_ratios;
    return out;
}

std::string run_pipeline(const std::string& config_path) {
    const auto config = pipeline::load_run_config(config_path);
    pipeline::write_run(config, pipeline::run(config));
    return config.out_dir;
}

}  // namespace

PYBIND11_MODULE(_nsdyn, m) {
    m.doc() = "Futures curve fitting, spread strategies and backtests";

    py::register_exception<ConfigError>(m, "NsdynConfigError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "NsdynParseError", PyExc_ValueError);
    py::register_exception<DataError>(m, "NsdynDataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NsdynNumericError",
                                         PyExc_ArithmeticError);

    m.def("curvature_root", &nscurve::curvature_root,
          "Positive root of exp(-x)*(1+x+x^2) = 1");
    m.def("decay_factor", &nscurve::decay_factor, py::arg("avg_maturity_months"),
          "Curve decay factor placing the curvature peak at the mean maturity");
    m.def("fit_curve", &fit_curve, py::arg("maturity_months"), py::arg("prices"),
          py::arg("slope") = true, py::arg("curvature") = true,
          py::arg("seasonal") = false,
          "Least-squares curve fit of one maturity cross-section");

    py::class_<PyMarket>(m, "Market")
        .def_property_readonly("commodities",
                               [](const PyMarket& pm) {
                                   std::vector<std::string> ids;
                                   for (const auto& c : pm.market.chains)
                                       ids.push_back(c.commodity_id);
                                   return ids;
                               })
        .def_property_readonly("n_days", [](const PyMarket& pm) {
            return pm.market.calendar.size();
        });

    m.def("load_market", &load_market, py::arg("data_dir"),
          "Load a data directory of price CSVs with its spec.json");
    m.def(
        "simulate",
        [](const std::string& config, std::uint64_t seed, const std::string& dir) {
            marketdata::write_sim_data(marketdata::load_sim_config(config), seed,
                                       dir);
            return dir;
        },
        py::arg("config"), py::arg("seed"), py::arg("dir"),
        "Simulate a synthetic market and write it as a data directory");
    m.def("strategy_backtest", &strategy_backtest, py::arg("market"),
          py::arg("family"), py::arg("mode") = "cs", py::arg("signal") = "beta",
          py::arg("depth") = 4, py::arg("ma") = 1,
          py::arg("characteristic") = "", py::arg("ry_k") = 4,
          "Evaluate one strategy end to end and return its daily series");
    m.def("summarize", &summarize, py::arg("returns"),
          py::arg("n_per_year") = 252, py::arg("gamma") = 5.0,
          "Performance statistics of a return series");
    m.def("run_pipeline", &run_pipeline, py::arg("config_path"),
          "Execute a full run config and write its report directory");
}
