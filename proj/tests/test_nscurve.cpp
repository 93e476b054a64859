#include <doctest.h>

#include <cmath>
#include <random>

#include "nsdyn/errors.hpp"
#include "nsdyn/nscurve.hpp"
#include "nsdyn/simulate.hpp"

#include "helpers.hpp"

using namespace nsdyn;
using namespace nsdyn::nscurve;

namespace {

marketdata::CurveSnapshot snapshot_at(const std::vector<double>& maturities,
                                      const std::vector<double>& prices) {
    marketdata::CurveSnapshot snap;
    snap.date = Date(2020, 1, 27);
    snap.commodity_id = "X";
    for (std::size_t i = 0; i < maturities.size(); ++i)
        snap.points.push_back({int(i) + 1, maturities[i],
                               int(maturities[i] * 30.4375), prices[i]});
    return snap;
}

std::vector<double> model_prices(double lambda, double bl, double bs,
                                 double bc,
                                 const std::vector<double>& maturities) {
    std::vector<double> out;
    for (double m : maturities) {
        double x = lambda * m;
        out.push_back(bl + bs * slope_loading(x) + bc * curvature_loading(x));
    }
    return out;
}

}  // namespace

TEST_CASE("curvature root satisfies its defining identity") {
    double x = curvature_root();
    CHECK(std::fabs(std::exp(-x) * (1 + x + x * x) - 1) < 1e-12);
    CHECK(x > 1.5);
    CHECK(x < 2.0);
}

TEST_CASE("decay factor places the curvature peak at the mean maturity") {
    double mbar = 4.5;
    double lambda = decay_factor(mbar);
    CHECK(lambda * mbar == doctest::Approx(curvature_root()).epsilon(1e-14));

    // The loading at the mean maturity is a local maximum in the decay rate.
    double peak = curvature_loading(lambda * mbar);
    CHECK(curvature_loading((lambda + 1e-4) * mbar) < peak);
    CHECK(curvature_loading((lambda - 1e-4) * mbar) < peak);

    CHECK_THROWS_AS(decay_factor(0.0), DataError);
}

TEST_CASE("loadings have the documented limits") {
    CHECK(slope_loading(1e-12) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(curvature_loading(1e-12) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(slope_loading(50.0) == doctest::Approx(1.0 / 50).epsilon(1e-12));
    // Slope loading decays monotonically; curvature loading is humped.
    CHECK(slope_loading(0.5) > slope_loading(1.0));
    CHECK(curvature_loading(0.2) < curvature_loading(curvature_root()));
    CHECK(curvature_loading(8.0) < curvature_loading(curvature_root()));
}

TEST_CASE("lambda_for_maturities uses the arithmetic mean") {
    std::vector<double> m = {1.0, 2.0, 3.0, 6.0};
    CHECK(lambda_for_maturities(m) ==
          doctest::Approx(curvature_root() / 3.0).epsilon(1e-14));
}

TEST_CASE("noise-free curves are recovered exactly") {
    std::vector<double> maturities = {0.8, 1.9, 2.8, 3.9};
    double lambda = lambda_for_maturities(maturities);
    auto prices = model_prices(lambda, 55.0, -4.0, 1.5, maturities);
    NSFit fit = fit_ns(snapshot_at(maturities, prices));
    CHECK(fit.beta_level == doctest::Approx(55.0).epsilon(1e-11));
    CHECK(fit.beta_slope == doctest::Approx(-4.0).epsilon(1e-11));
    CHECK(fit.beta_curvature == doctest::Approx(1.5).epsilon(1e-11));
    CHECK(fit.lambda == doctest::Approx(lambda).epsilon(1e-14));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(fit.residuals.size() == 4);
    for (double r : fit.residuals) CHECK(std::fabs(r) < 1e-9);
}

TEST_CASE("flat curve fits with zero slope and curvature") {
    std::vector<double> maturities = {1.0, 2.0, 3.0, 4.0};
    NSFit fit = fit_ns(snapshot_at(maturities, {50, 50, 50, 50}));
    CHECK(fit.beta_level == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(std::fabs(fit.beta_slope) < 1e-9);
    CHECK(std::fabs(fit.beta_curvature) < 1e-9);
    // Zero total variation with a perfect fit reports R^2 = 1.
    CHECK(fit.r_squared == 1.0);
}

TEST_CASE("restricted fits never beat the full model") {
    std::vector<double> maturities = {1.0, 2.1, 3.2, 4.0, 5.1, 6.2};
    double lambda = lambda_for_maturities(maturities);
    auto prices = model_prices(lambda, 60.0, -5.0, 2.0, maturities);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (int rep = 0; rep < 50; ++rep) {
        auto noisy = prices;
        for (double& p : noisy) p += noise(rng);
        auto snap = snapshot_at(maturities, noisy);
        double full = fit_ns(snap).r_squared;
        double ls = fit_ns(snap, {true, false}).r_squared;
        double lc = fit_ns(snap, {false, true}).r_squared;
        CHECK(full >= ls - 1e-12);
        CHECK(full >= lc - 1e-12);
    }
}

TEST_CASE("restricted fits reuse the unrestricted decay factor") {
    std::vector<double> maturities = {1.0, 2.0, 3.0, 4.0};
    auto snap = snapshot_at(maturities, {50, 49, 48, 47});
    CHECK(fit_ns(snap, {true, false}).lambda == fit_ns(snap).lambda);
    CHECK(fit_ns(snap, {false, true}).lambda == fit_ns(snap).lambda);
}

TEST_CASE("seasonal fit recovers an injected seasonal term") {
    std::vector<double> maturities;
    for (int i = 0; i < 12; ++i) maturities.push_back(0.6 + i);
    double lambda = lambda_for_maturities(maturities);
    auto base = model_prices(lambda, 70.0, -6.0, 2.5, maturities);
    for (int theta = 1; theta <= 12; ++theta) {
        auto prices = base;
        for (std::size_t i = 0; i < prices.size(); ++i)
            prices[i] += 3.0 * std::cos(kSeasonalOmega * maturities[i] -
                                        kSeasonalOmega * theta);
        SeasonalNSFit fit = fit_ns_seasonal(snapshot_at(maturities, prices));
        // A six-month phase shift with a negated amplitude is the same
        // curve; ties resolve to the smaller phase.
        int want_theta = theta <= 6 ? theta : theta - 6;
        double want_amp = theta <= 6 ? 3.0 : -3.0;
        CHECK(fit.theta == want_theta);
        CHECK(fit.beta_seasonal == doctest::Approx(want_amp).epsilon(1e-9));
        CHECK(fit.beta_level == doctest::Approx(70.0).epsilon(1e-9));
    }
}

TEST_CASE("seasonal fit needs at least five points") {
    std::vector<double> maturities = {1.0, 2.0, 3.0, 4.0};
    auto snap = snapshot_at(maturities, {50, 49, 48, 47});
    CHECK_THROWS_AS(fit_ns_seasonal(snap), ConfigError);
}

TEST_CASE("degenerate designs are rejected") {
    // Two maturities cannot identify three curve parameters.
    auto snap = snapshot_at({1.0, 2.0}, {50.0, 49.0});
    CHECK_THROWS_AS(fit_ns(snap), DataError);
    // Duplicated maturities collapse the design even with enough rows.
    auto dup = snapshot_at({2.0, 2.0, 2.0, 2.0}, {50.0, 50.1, 49.9, 50.0});
    CHECK_THROWS_AS(fit_ns(dup), NumericError);
}

TEST_CASE("fit panel is thread-count invariant with gaps where data is") {
    marketdata::SimConfig config;
    config.months = 4;
    config.depth = 6;
    for (int i = 0; i < 3; ++i) {
        marketdata::SimCommodity c;
        c.id = "S" + std::to_string(i);
        c.sigma_level = 0.3;
        c.sigma_slope = 0.1;
        c.price_noise = 0.02;
        config.commodities.push_back(c);
    }
    auto sim = simulate_market(config, 5);
    auto market = marketdata::build_market(sim.chains);

    FitPanel seq = fit_panel(market, 4, {}, {}, 1);
    FitPanel par = fit_panel(market, 4, {}, {}, 4);
    REQUIRE(seq.dates == par.dates);
    REQUIRE(seq.ids == par.ids);
    for (std::size_t r = 0; r < seq.dates.size(); ++r)
        for (std::size_t c = 0; c < seq.ids.size(); ++c) {
            if (std::isnan(seq.beta_slope.at(r, c)))
                CHECK(std::isnan(par.beta_slope.at(r, c)));
            else
                CHECK(seq.beta_slope.at(r, c) == par.beta_slope.at(r, c));
        }
}
