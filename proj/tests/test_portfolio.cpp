#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nsdyn/errors.hpp"
#include "nsdyn/portfolio.hpp"

#include "helpers.hpp"

using namespace nsdyn;
using namespace nsdyn::portfolio;
using testutil::weekdays;

namespace {

signals::SignalPanel panel_of(const std::vector<Date>& dates,
                              const std::vector<std::string>& ids,
                              const std::vector<std::vector<double>>& rows) {
    signals::SignalPanel p{"sig", SeriesPanel(dates, ids)};
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < ids.size(); ++c)
            if (!std::isnan(rows[r][c])) p.values.at(r, c) = rows[r][c];
    return p;
}

const BookEntry* find_entry(const BookDay& day, const std::string& id,
                            int location) {
    for (const auto& e : day.entries)
        if (e.commodity_id == id && e.location == location) return &e;
    return nullptr;
}

}  // namespace

TEST_CASE("family names and spread shapes round trip") {
    for (auto name : {"L", "S", "C", "LAVG", "SAVG", "CAVG", "factor"})
        CHECK(to_string(parse_family(name)) == name);
    CHECK_THROWS_AS(parse_family("Q"), ConfigError);
    CHECK(geometry_for(Family::L) == Geometry::OutrightFront);
    CHECK(geometry_for(Family::S) == Geometry::SlopeSpread);
    CHECK(geometry_for(Family::C) == Geometry::Butterfly);
    CHECK(geometry_for(Family::SAVG) == Geometry::SlopeSpread);
    CHECK(geometry_for(Family::Factor) == Geometry::OutrightFront);
}

TEST_CASE("cross-sectional slope book splits capital half long half short") {
    auto dates = weekdays(Date(2020, 1, 6), 1);
    auto sig = panel_of(dates, {"A", "B"}, {{0.2, -0.1}});
    WeightBook book = build_cs_book(sig, Family::S);
    REQUIRE(book.days.size() == 1);
    const auto& day = book.days[0];
    CHECK(!day.degenerate);
    REQUIRE(day.entries.size() == 4);

    const auto* a1 = find_entry(day, "A", 1);
    const auto* a4 = find_entry(day, "A", 4);
    const auto* b1 = find_entry(day, "B", 1);
    const auto* b4 = find_entry(day, "B", 4);
    REQUIRE((a1 && a4 && b1 && b4));
    CHECK(a1->weight == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(a4->weight == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(b1->weight == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(b4->weight == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(a1->long_leg);
    CHECK(a4->long_leg);
    CHECK(!b1->long_leg);
    CHECK(!b4->long_leg);
    CHECK(testutil::sum_abs_weights(day) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("level books exclude zero signals, slope books short them") {
    auto dates = weekdays(Date(2020, 1, 6), 1);
    auto sig = panel_of(dates, {"A", "B", "C"}, {{1.0, 0.0, -1.0}});

    WeightBook level = build_cs_book(sig, Family::L);
    REQUIRE(level.days.size() == 1);
    CHECK(level.days[0].entries.size() == 2);
    CHECK(find_entry(level.days[0], "B", 1) == nullptr);
    CHECK(find_entry(level.days[0], "A", 1)->weight ==
          doctest::Approx(0.5).epsilon(1e-15));
    CHECK(find_entry(level.days[0], "C", 1)->weight ==
          doctest::Approx(-0.5).epsilon(1e-15));

    WeightBook slope = build_cs_book(sig, Family::S);
    REQUIRE(slope.days.size() == 1);
    const auto& day = slope.days[0];
    CHECK(day.entries.size() == 6);  // one long spread, two short spreads
    CHECK(find_entry(day, "A", 1)->weight ==
          doctest::Approx(0.25).epsilon(1e-15));
    CHECK(find_entry(day, "B", 1)->weight ==
          doctest::Approx(-0.125).epsilon(1e-15));
    CHECK(find_entry(day, "C", 4)->weight ==
          doctest::Approx(0.125).epsilon(1e-15));
    CHECK(testutil::sum_abs_weights(day) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("one-sided days trade half gross and are flagged") {
    auto dates = weekdays(Date(2020, 1, 6), 1);
    auto sig = panel_of(dates, {"A", "B"}, {{1.0, 2.0}});
    WeightBook book = build_cs_book(sig, Family::L);
    REQUIRE(book.days.size() == 1);
    CHECK(book.days[0].degenerate);
    CHECK(testutil::sum_abs_weights(book.days[0]) ==
          doctest::Approx(0.5).epsilon(1e-15));

    // Days with no signal at all are dropped entirely.
    auto empty = panel_of(dates, {"A", "B"}, {{kNaN, kNaN}});
    CHECK(build_cs_book(empty, Family::L).days.empty());
}

TEST_CASE("time-series books give every active name equal capital") {
    auto dates = weekdays(Date(2020, 1, 6), 1);
    auto sig = panel_of(dates, {"A", "B", "C"}, {{3.0, -1.0, 0.0}});

    WeightBook slope = build_ts_book(sig, Family::S);
    REQUIRE(slope.days.size() == 1);
    const auto& day = slope.days[0];
    CHECK(!day.degenerate);
    REQUIRE(day.entries.size() == 4);  // zero-signal C is skipped
    CHECK(find_entry(day, "A", 1)->weight ==
          doctest::Approx(0.25).epsilon(1e-15));
    CHECK(find_entry(day, "A", 4)->weight ==
          doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(find_entry(day, "B", 1)->weight ==
          doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(find_entry(day, "B", 4)->weight ==
          doctest::Approx(0.25).epsilon(1e-15));
    CHECK(testutil::sum_abs_weights(day) == doctest::Approx(1.0).epsilon(1e-15));

    // All-zero signals: the day exists but holds nothing.
    auto zeros = panel_of(dates, {"A", "B", "C"}, {{0.0, 0.0, 0.0}});
    WeightBook flat = build_ts_book(zeros, Family::S);
    REQUIRE(flat.days.size() == 1);
    CHECK(flat.days[0].degenerate);
    CHECK(flat.days[0].entries.empty());
}

TEST_CASE("per-contract magnitudes follow the documented spread split") {
    auto dates = weekdays(Date(2020, 1, 6), 1);
    auto sig = panel_of(dates, {"A", "B", "C"}, {{1.0, 1.0, 1.0}});

    WeightBook fly = build_ts_book(sig, Family::C);
    const auto& day = fly.days[0];
    REQUIRE(day.entries.size() == 9);
    for (auto id : {"A", "B", "C"}) {
        CHECK(find_entry(day, id, 1)->weight ==
              doctest::Approx(-1.0 / 12).epsilon(1e-14));
        CHECK(find_entry(day, id, 2)->weight ==
              doctest::Approx(1.0 / 6).epsilon(1e-14));
        CHECK(find_entry(day, id, 4)->weight ==
              doctest::Approx(-1.0 / 12).epsilon(1e-14));
    }
    CHECK(testutil::sum_abs_weights(day) == doctest::Approx(1.0).epsilon(1e-14));

    // Single-name long butterfly carries the full unit of gross.
    auto solo = panel_of(dates, {"A"}, {{1.0}});
    WeightBook one = build_ts_book(solo, Family::C);
    const auto& d1 = one.days[0];
    CHECK(find_entry(d1, "A", 1)->weight == doctest::Approx(-0.25));
    CHECK(find_entry(d1, "A", 2)->weight == doctest::Approx(0.5));
    CHECK(find_entry(d1, "A", 4)->weight == doctest::Approx(-0.25));
}

TEST_CASE("book construction is sign-equivariant and scale-invariant") {
    auto dates = weekdays(Date(2020, 1, 6), 1);
    auto sig = panel_of(dates, {"A", "B"}, {{0.7, -0.2}});
    auto scaled = panel_of(dates, {"A", "B"}, {{7.0, -2.0}});
    auto negated = panel_of(dates, {"A", "B"}, {{-0.7, 0.2}});

    for (Family fam : {Family::L, Family::S, Family::C}) {
        WeightBook base = build_cs_book(sig, fam);
        WeightBook same = build_cs_book(scaled, fam);
        WeightBook flip = build_cs_book(negated, fam);
        REQUIRE(base.days.size() == 1);
        REQUIRE(same.days[0].entries.size() == base.days[0].entries.size());
        REQUIRE(flip.days[0].entries.size() == base.days[0].entries.size());
        for (const auto& e : base.days[0].entries) {
            const auto* s = find_entry(same.days[0], e.commodity_id, e.location);
            const auto* f = find_entry(flip.days[0], e.commodity_id, e.location);
            REQUIRE((s && f));
            CHECK(s->weight == e.weight);
            CHECK(f->weight == -e.weight);
            CHECK(f->long_leg == !e.long_leg);
        }
    }
}

TEST_CASE("naive benchmarks hold every covered commodity long") {
    auto dates = weekdays(Date(2020, 1, 6), 2);
    std::vector<testutil::ContractSpec> deep, shallow;
    for (int k = 0; k < 4; ++k)
        deep.push_back({Date(2020, 7 + k, 15), {50.0, 50.0}});
    for (int k = 0; k < 2; ++k)
        shallow.push_back({Date(2020, 7 + k, 15), {20.0, 20.0}});
    auto market = marketdata::build_market(
        {testutil::chain_from("AA", dates, deep),
         testutil::chain_from("BB", dates, shallow)});

    WeightBook lavg = build_naive_book(Family::LAVG, market);
    REQUIRE(lavg.days.size() == 2);
    CHECK(lavg.days[0].entries.size() == 2);
    for (const auto& e : lavg.days[0].entries) {
        CHECK(e.weight == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(e.long_leg);
        CHECK(e.location == 1);
    }

    // The slope benchmark needs four contracts, so BB drops out and AA takes
    // the whole unit of capital.
    WeightBook savg = build_naive_book(Family::SAVG, market);
    REQUIRE(savg.days.size() == 2);
    REQUIRE(savg.days[0].entries.size() == 2);
    CHECK(find_entry(savg.days[0], "AA", 1)->weight ==
          doctest::Approx(0.5).epsilon(1e-15));
    CHECK(find_entry(savg.days[0], "AA", 4)->weight ==
          doctest::Approx(-0.5).epsilon(1e-15));

    CHECK_THROWS_AS(build_naive_book(Family::L, market), ConfigError);
}

TEST_CASE("factor books split the cross-section at the monthly median") {
    // Daily panel spanning two month ends.
    auto dates = weekdays(Date(2020, 1, 6), 25);
    std::vector<std::string> ids{"A", "B", "C", "D", "E"};
    signals::SignalPanel sig{"MOM", SeriesPanel(dates, ids)};
    double level[5] = {5.0, 4.0, 3.0, 2.0, 1.0};
    for (std::size_t r = 0; r < dates.size(); ++r)
        for (std::size_t c = 0; c < 5; ++c) sig.values.at(r, c) = level[c];

    WeightBook high = build_factor_book(sig, true);
    CHECK(high.monthly);
    CHECK(high.geometry == Geometry::OutrightFront);
    REQUIRE(high.days.size() == 2);  // one per month end in the window
    CHECK(high.days[0].date == Date(2020, 1, 31));
    const auto& day = high.days[0];
    REQUIRE(day.entries.size() == 5);
    // Odd cross-section: three longs at 1/6, two shorts at 1/4.
    for (auto id : {"A", "B", "C"}) {
        const auto* e = find_entry(day, id, 1);
        REQUIRE(e);
        CHECK(e->weight == doctest::Approx(1.0 / 6).epsilon(1e-14));
        CHECK(e->long_leg);
    }
    for (auto id : {"D", "E"}) {
        const auto* e = find_entry(day, id, 1);
        REQUIRE(e);
        CHECK(e->weight == doctest::Approx(-0.25).epsilon(1e-14));
        CHECK(!e->long_leg);
    }
    CHECK(testutil::sum_abs_weights(day) == doctest::Approx(1.0).epsilon(1e-14));

    WeightBook low = build_factor_book(sig, false);
    for (auto id : {"E", "D", "C"}) CHECK(find_entry(low.days[0], id, 1)->long_leg);
    for (auto id : {"B", "A"}) CHECK(!find_entry(low.days[0], id, 1)->long_leg);
}

TEST_CASE("factor months need two names and values do not carry across months") {
    auto dates = weekdays(Date(2020, 1, 6), 25);
    signals::SignalPanel sig{"MOM", SeriesPanel(dates, {"A", "B"})};
    // A has values only in January, B only once, mid-January.
    for (std::size_t r = 0; r < dates.size(); ++r)
        if (dates[r].month() == 1) sig.values.at(r, 0) = 1.0;
    sig.values.at(5, 1) = 2.0;

    WeightBook book = build_factor_book(sig, true);
    // January's month end sees both names; February sees neither.
    REQUIRE(book.days.size() == 2);
    CHECK(book.days[0].entries.size() == 2);
    CHECK(find_entry(book.days[0], "B", 1)->long_leg);
    CHECK(book.days[1].entries.empty());

    // With no January signal for B the leading empty month is dropped.
    signals::SignalPanel solo{"MOM", SeriesPanel(dates, {"A", "B"})};
    for (std::size_t r = 0; r < dates.size(); ++r)
        if (dates[r].month() == 2) {
            solo.values.at(r, 0) = 1.0;
            solo.values.at(r, 1) = 2.0;
        }
    WeightBook late = build_factor_book(solo, true);
    REQUIRE(late.days.size() == 1);
    CHECK(late.days[0].date.month() == 2);
}

TEST_CASE("slope dispersion is the cross-sectional standard deviation") {
    auto dates = weekdays(Date(2020, 1, 6), 2);
    nscurve::FitPanel fits;
    fits.dates = dates;
    fits.ids = {"A", "B", "C"};
    fits.beta_level = SeriesPanel(dates, fits.ids);
    fits.beta_slope = SeriesPanel(dates, fits.ids);
    fits.beta_curvature = SeriesPanel(dates, fits.ids);
    fits.beta_slope.at(0, 0) = 1.0;
    fits.beta_slope.at(0, 1) = 2.0;
    fits.beta_slope.at(0, 2) = 4.0;
    fits.beta_slope.at(1, 0) = 3.0;  // day 1: single value -> no dispersion

    CHECK(dispersion(fits, dates[0]) ==
          doctest::Approx(std::sqrt(7.0 / 3.0)).epsilon(1e-14));
    CHECK(std::isnan(dispersion(fits, dates[1])));
    CHECK(std::isnan(dispersion(fits, Date(2031, 1, 6))));

    ReturnSeries ds = dispersion_series(fits);
    REQUIRE(ds.size() == 1);
    CHECK(ds.dates[0] == dates[0]);
    CHECK(ds.values[0] == dispersion(fits, dates[0]));
}

TEST_CASE("constant dispersion makes volatility timing the identity") {
    auto dates = weekdays(Date(2020, 1, 6), 40);
    ReturnSeries base;
    std::mt19937_64 rng(17);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (const auto& d : dates) {
        base.dates.push_back(d);
        base.values.push_back(noise(rng));
    }
    ReturnSeries disp = base;
    for (auto& v : disp.values) v = 2.0;

    TimingConfig cfg;
    cfg.d = 5;
    double c = kNaN;
    ReturnSeries timed = timed_returns(base, disp, cfg, &c);
    CHECK(c == doctest::Approx(2.0).epsilon(1e-15));
    REQUIRE(timed.size() == base.size() - 5);
    for (std::size_t i = 0; i < timed.size(); ++i) {
        CHECK(timed.dates[i] == base.dates[i + 5]);
        CHECK(timed.values[i] == base.values[i + 5]);  // exact pass-through
    }

    ReturnSeries lev = timing_leverage(base, disp, cfg);
    for (double v : lev.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("timing preserves full-sample volatility by construction") {
    auto dates = weekdays(Date(2020, 1, 6), 60);
    ReturnSeries base, disp;
    std::mt19937_64 rng(29);
    std::normal_distribution<double> noise(0.0005, 0.012);
    std::uniform_real_distribution<double> spread(0.5, 3.0);
    for (const auto& d : dates) {
        base.dates.push_back(d);
        base.values.push_back(noise(rng));
        disp.dates.push_back(d);
        disp.values.push_back(spread(rng));
    }

    TimingConfig cfg;
    cfg.d = 5;
    ReturnSeries timed = timed_returns(base, disp, cfg);

    std::vector<double> restricted(base.values.begin() + 5, base.values.end());
    CHECK(sample_sd(timed.values) ==
          doctest::Approx(sample_sd(restricted)).epsilon(1e-10));

    // Rescaling all dispersions by a constant leaves the timed series alone.
    ReturnSeries scaled = disp;
    for (auto& v : scaled.values) v *= 8.0;
    ReturnSeries same = timed_returns(base, scaled, cfg);
    REQUIRE(same.size() == timed.size());
    for (std::size_t i = 0; i < timed.size(); ++i)
        CHECK(same.values[i] == timed.values[i]);

    // Expanding calibration also matches the restricted volatility at the end
    // of the sample, day by day using only past data.
    cfg.expanding = true;
    ReturnSeries expanding = timed_returns(base, disp, cfg);
    CHECK(expanding.size() == timed.size() - 1);  // first day lacks an sd
    for (std::size_t i = 0; i < expanding.size(); ++i)
        CHECK(expanding.dates[i] == timed.dates[i + 1]);
}

TEST_CASE("two-sleeve blends drift intramonth and reset at month end") {
    std::vector<Date> dates{Date(2020, 1, 29), Date(2020, 1, 30),
                            Date(2020, 1, 31), Date(2020, 2, 3)};
    ReturnSeries a{dates, {0.10, 0.20, 0.30, 0.10}};
    ReturnSeries b{dates, {0.00, 0.00, 0.00, 0.00}};

    ReturnSeries out = blend(a, b);
    REQUIRE(out.size() == 4);
    CHECK(out.values[0] == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(out.values[1] == doctest::Approx(0.55 * 0.2 / 1.05).epsilon(1e-14));
    CHECK(out.values[2] == doctest::Approx(0.66 * 0.3 / 1.16).epsilon(1e-13));
    // Month-end reset: February starts 50/50 again.
    CHECK(out.values[3] == doctest::Approx(0.05).epsilon(1e-13));

    // Misaligned calendars blend on the common dates only.
    ReturnSeries sparse{{dates[0], dates[2]}, {0.10, 0.30}};
    ReturnSeries mixed = blend(a, sparse);
    REQUIRE(mixed.size() == 2);
    CHECK(mixed.dates[0] == dates[0]);
    CHECK(mixed.dates[1] == dates[2]);
    CHECK(mixed.values[0] == doctest::Approx(0.10).epsilon(1e-14));
}

TEST_CASE("book weights sum to one in absolute value across random panels") {
    auto dates = weekdays(Date(2020, 1, 6), 30);
    std::vector<std::string> ids{"A", "B", "C", "D", "E", "F", "G"};
    signals::SignalPanel sig{"x", SeriesPanel(dates, ids)};
    std::mt19937_64 rng(31);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t r = 0; r < dates.size(); ++r)
        for (std::size_t c = 0; c < ids.size(); ++c)
            if (u(rng) > 0.2) sig.values.at(r, c) = noise(rng);

    for (Family fam : {Family::L, Family::S, Family::C}) {
        WeightBook cs = build_cs_book(sig, fam);
        for (const auto& day : cs.days) {
            double total = testutil::sum_abs_weights(day);
            if (day.degenerate)
                CHECK(total == doctest::Approx(0.5).epsilon(1e-12));
            else
                CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
            double signed_sum = 0.0;
            for (const auto& e : day.entries)
                signed_sum += e.long_leg ? std::fabs(e.weight) : 0.0;
            if (!day.degenerate)
                CHECK(signed_sum == doctest::Approx(0.5).epsilon(1e-12));
        }
        WeightBook ts = build_ts_book(sig, fam);
        for (const auto& day : ts.days)
            if (!day.degenerate)
                CHECK(testutil::sum_abs_weights(day) ==
                      doctest::Approx(1.0).epsilon(1e-12));
    }
}
