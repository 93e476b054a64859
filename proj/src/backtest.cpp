#include "nsdyn/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "nsdyn/csv.hpp"
#include "nsdyn/errors.hpp"

namespace nsdyn::backtest {

double unit_cost(int scenario, const CostModel& cost,
                 const marketdata::ContractChain& chain, double price) {
    if (price <= 0) throw DataError("unit cost requires a positive price");
    switch (scenario) {
        case 1:
            return cost.commission / (price * chain.multiplier);
        case 2:
            return cost.flat_rate;
        case 3:
            return (cost.commission +
                    cost.impact_ticks * chain.tick_size * chain.multiplier) /
                   (price * chain.multiplier);
        default:
            throw ConfigError("cost scenario must be 1, 2 or 3");
    }
}

namespace {

struct Position {
    int chain = -1;
    int location = 0;
    int contract = -1;
    double weight = 0.0;
};

/// Price used for costing a trade on `d`: the settle on `d`, else the most
/// recent one before it, else the first one after.
double trade_price(const marketdata::ContractSeries& cs, const Date& d) {
    auto it = std::lower_bound(
        cs.rows.begin(), cs.rows.end(), d,
        [](const marketdata::ContractRow& r, const Date& x) { return r.date < x; });
    if (it != cs.rows.end() && it->date == d) return it->settle;
    if (it != cs.rows.begin()) return std::prev(it)->settle;
    if (it != cs.rows.end()) return it->settle;
    return kNaN;
}

}  // namespace

BacktestResult run_book(const portfolio::WeightBook& book,
                        const marketdata::Market& market,
                        const CostModel& cost) {
    BacktestResult result;
    if (book.days.empty()) return result;

    const auto& cal = market.calendar;
    std::map<Date, std::size_t> book_index;
    for (std::size_t i = 0; i < book.days.size(); ++i) {
        if (i > 0 && !(book.days[i - 1].date < book.days[i].date))
            throw DataError("book dates must be strictly increasing");
        book_index.emplace(book.days[i].date, i);
    }

    auto cal_it = std::lower_bound(cal.begin(), cal.end(), book.days.front().date);
    if (cal_it == cal.end() || *cal_it != book.days.front().date)
        throw DataError("book start " + book.days.front().date.to_string() +
                        " is not a trading day");
    std::size_t t0 = std::size_t(cal_it - cal.begin());

    auto last_it = std::lower_bound(cal.begin(), cal.end(), book.days.back().date);
    if (last_it == cal.end() || *last_it != book.days.back().date)
        throw DataError("book end " + book.days.back().date.to_string() +
                        " is not a trading day");
    std::size_t t_last = std::size_t(last_it - cal.begin());

    double leg_factor = 1.0;
    if (cost.spread_tickets &&
        book.geometry != portfolio::Geometry::OutrightFront)
        leg_factor = 0.5;

    // Positions formed at the close of day cal[t] are mapped to the contracts
    // occupying their locations on the next trading day.
    auto map_location = [&](int chain_idx, int location, std::size_t t) {
        const auto& sched = market.schedules[std::size_t(chain_idx)];
        const Date& d = t + 1 < cal.size() ? cal[t + 1] : cal[t];
        return sched.contract_at(d, location);
    };

    std::vector<Position> positions;
    bool pending_flag_unmapped = false;

    auto apply_book_day = [&](const portfolio::BookDay& day, std::size_t t) {
        std::vector<Position> next;
        next.reserve(day.entries.size());
        for (const auto& e : day.entries) {
            if (e.weight == 0.0) continue;
            int chain_idx = market.chain_of(e.commodity_id);
            if (chain_idx < 0)
                throw ConfigError("book names unknown commodity '" +
                                  e.commodity_id + "'");
            int contract = map_location(chain_idx, e.location, t);
            if (contract < 0) {
                pending_flag_unmapped = true;
                continue;
            }
            next.push_back({chain_idx, e.location, contract, e.weight});
        }
        return next;
    };

    positions = apply_book_day(book.days.front(), t0);

    for (std::size_t t = t0 + 1; t <= t_last && t < cal.size(); ++t) {
        const Date& today = cal[t];
        const Date& yesterday = cal[t - 1];
        bool flag_missing = false;
        bool flag_roll = false;
        bool flag_degenerate = false;
        bool flag_unmapped = pending_flag_unmapped;
        pending_flag_unmapped = false;

        double gross = 0.0;
        std::vector<Position> drifted = positions;
        for (auto& p : drifted) {
            const auto& contract =
                market.chains[std::size_t(p.chain)].contracts[std::size_t(p.contract)];
            auto prev = contract.settle_at(yesterday);
            auto cur = contract.settle_at(today);
            double r = 0.0;
            if (prev && cur)
                r = marketdata::excess_return(*cur, *prev);
            else
                flag_missing = true;
            gross += p.weight * r;
            p.weight *= 1.0 + r;
        }

        std::vector<Position> target;
        auto it = book_index.find(today);
        if (it != book_index.end()) {
            const auto& day = book.days[it->second];
            flag_degenerate = day.degenerate;
            target = apply_book_day(day, t);
        } else {
            // No rebalance today: carry drifted positions at their curve
            // locations, rolling to the occupying contract where it changed.
            target.reserve(drifted.size());
            for (const auto& p : drifted) {
                if (p.weight == 0.0) continue;
                int contract = map_location(p.chain, p.location, t);
                if (contract < 0) {
                    pending_flag_unmapped = true;
                    continue;
                }
                target.push_back({p.chain, p.location, contract, p.weight});
            }
        }

        std::map<std::pair<int, int>, double> traded;  // (chain, contract) -> dw
        for (const auto& p : drifted)
            traded[{p.chain, p.contract}] -= p.weight;
        for (const auto& p : target)
            traded[{p.chain, p.contract}] += p.weight;
        {
            // A location whose contract changed between the held and target
            // sets marks a roll day.
            std::map<std::pair<int, int>, int> held_loc;
            for (const auto& p : positions)
                held_loc[{p.chain, p.location}] = p.contract;
            for (const auto& p : target) {
                auto h = held_loc.find({p.chain, p.location});
                if (h != held_loc.end() && h->second != p.contract)
                    flag_roll = true;
            }
        }

        double to = 0.0;
        std::array<double, 3> drag = {0.0, 0.0, 0.0};
        for (const auto& [key, dw] : traded) {
            double traded_abs = std::fabs(dw);
            if (traded_abs == 0.0) continue;
            to += traded_abs;
            const auto& chain = market.chains[std::size_t(key.first)];
            double price =
                trade_price(chain.contracts[std::size_t(key.second)], today);
            if (std::isnan(price)) {
                flag_missing = true;
                continue;
            }
            for (int s = 1; s <= 3; ++s)
                drag[std::size_t(s - 1)] += traded_abs *
                                            unit_cost(s, cost, chain, price) *
                                            leg_factor;
        }

        result.gross.dates.push_back(today);
        result.gross.values.push_back(gross);
        result.turnover.push_back(to);
        for (int s = 0; s < 3; ++s) {
            result.net[std::size_t(s)].dates.push_back(today);
            result.net[std::size_t(s)].values.push_back(
                gross - 0.5 * drag[std::size_t(s)]);
        }
        std::string flags;
        auto add_flag = [&flags](const char* f) {
            if (!flags.empty()) flags += '|';
            flags += f;
        };
        if (flag_degenerate) add_flag("degenerate");
        if (flag_roll) add_flag("roll");
        if (flag_missing) add_flag("missing_price");
        if (flag_unmapped) add_flag("unmapped");
        result.flags.push_back(flags);

        positions = std::move(target);
    }
    return result;
}

ReturnSeries gross_returns(const portfolio::WeightBook& book,
                           const marketdata::Market& market) {
    return run_book(book, market, CostModel{}).gross;
}

std::vector<double> turnover(const portfolio::WeightBook& book,
                             const marketdata::Market& market) {
    return run_book(book, market, CostModel{}).turnover;
}

std::string strategy_label(const StrategySpec& spec) {
    using portfolio::Family;
    if (!spec.name.empty()) return spec.name;
    switch (spec.family) {
        case Family::LAVG:
        case Family::SAVG:
        case Family::CAVG:
            return portfolio::to_string(spec.family);
        case Family::Factor:
            return signals::to_string(spec.characteristic);
        default:
            break;
    }
    std::string label = portfolio::to_string(spec.family);
    label += spec.time_series ? "_ts" : "_cs";
    if (spec.signal == "ds")
        label += "_ds";
    else if (spec.signal == "dpc2")
        label += "_dpc2";
    else if (spec.signal == "ry")
        label += "_ry" + std::to_string(spec.ry_k);
    if (spec.params.ma > 1) label += "_ma" + std::to_string(spec.params.ma);
    if (spec.seasonal_all || !spec.seasonal_ids.empty()) label += "_seas";
    return label;
}

marketdata::Market apply_filters(const marketdata::Market& market,
                                 const RunFilters& filters) {
    std::set<std::string> want(filters.universe.begin(), filters.universe.end());
    for (const auto& id : want)
        if (market.chain_of(id) < 0)
            throw ConfigError("universe names unknown commodity '" + id + "'");
    std::vector<marketdata::ContractChain> chains;
    for (const auto& chain : market.chains) {
        if (!want.empty() && want.count(chain.commodity_id) == 0) continue;
        if (filters.sector && chain.sector != *filters.sector) continue;
        marketdata::ContractChain cut = chain;
        if (filters.start || filters.end) {
            for (auto& cs : cut.contracts) {
                std::erase_if(cs.rows, [&](const marketdata::ContractRow& r) {
                    return (filters.start && r.date < *filters.start) ||
                           (filters.end && *filters.end < r.date);
                });
            }
            std::erase_if(cut.contracts, [](const marketdata::ContractSeries& cs) {
                return cs.rows.empty();
            });
        }
        if (!cut.contracts.empty()) chains.push_back(std::move(cut));
    }
    if (chains.empty())
        throw ConfigError("universe is empty after the sector/date filters");
    return marketdata::build_market(std::move(chains));
}

portfolio::WeightBook build_strategy_book(
    const StrategySpec& spec, const marketdata::Market& market,
    const std::vector<marketdata::CotSeries>& cot,
    const nscurve::FitPanel* fits, int threads) {
    using portfolio::Family;
    portfolio::WeightBook book;
    switch (spec.family) {
        case Family::LAVG:
        case Family::SAVG:
        case Family::CAVG:
            book = portfolio::build_naive_book(spec.family, market);
            break;
        case Family::Factor: {
            const auto panel = signals::characteristic(
                spec.characteristic, market, cot, spec.params.characteristics);
            book = portfolio::build_factor_book(
                panel, signals::sort_long_high(spec.characteristic));
            break;
        }
        default: {
            signals::SignalPanel panel;
            if (spec.signal == "beta") {
                nscurve::FitPanel local;
                const nscurve::FitPanel* use = fits;
                if (!use) {
                    std::set<std::string> seasonal = spec.seasonal_ids;
                    if (spec.seasonal_all)
                        for (const auto& chain : market.chains)
                            seasonal.insert(chain.commodity_id);
                    local = nscurve::fit_panel(market, spec.fit_depth, {},
                                               seasonal, threads);
                    use = &local;
                }
                const auto which = spec.family == Family::L
                                       ? signals::Beta::Level
                                       : spec.family == Family::S
                                             ? signals::Beta::Slope
                                             : signals::Beta::Curvature;
                panel = signals::delta_beta(*use, which);
            } else if (spec.signal == "ds") {
                if (spec.family != Family::S)
                    throw ConfigError("signal 'ds' drives the S family only");
                panel = signals::slope_diff(market);
            } else if (spec.signal == "dpc2") {
                if (spec.family != Family::S)
                    throw ConfigError("signal 'dpc2' drives the S family only");
                panel = signals::pca_slope(market, spec.params.pca_window);
            } else if (spec.signal == "ry") {
                if (spec.family != Family::S)
                    throw ConfigError("signal 'ry' drives the S family only");
                panel = signals::roll_yield(market, spec.ry_k);
            } else {
                throw ConfigError("unknown signal '" + spec.signal + "'");
            }
            if (spec.params.ma > 1) panel = signals::smooth(panel, spec.params.ma);
            book = spec.time_series ? portfolio::build_ts_book(panel, spec.family)
                                    : portfolio::build_cs_book(panel, spec.family);
            break;
        }
    }
    book.name = strategy_label(spec);
    return book;
}

BacktestResult run(const StrategySpec& spec, const marketdata::Market& market,
                   const std::vector<marketdata::CotSeries>& cot,
                   const CostModel& cost, const nscurve::FitPanel* fits,
                   int threads) {
    const auto book = build_strategy_book(spec, market, cot, fits, threads);
    if (book.days.empty())
        throw DataError("strategy '" + book.name +
                        "' produced an empty book (no signal days)");
    return run_book(book, market, cost);
}

void write_backtest_csv(const BacktestResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "date,gross,turnover,net_tc1,net_tc2,net_tc3,flags\n";
    for (std::size_t i = 0; i < result.gross.size(); ++i)
        out << result.gross.dates[i].to_string() << ','
            << csv::format_double(result.gross.values[i]) << ','
            << csv::format_double(result.turnover[i]) << ','
            << csv::format_double(result.net[0].values[i]) << ','
            << csv::format_double(result.net[1].values[i]) << ','
            << csv::format_double(result.net[2].values[i]) << ','
            << result.flags[i] << '\n';
}

BacktestResult read_backtest_csv(const std::string& path) {
    csv::Reader reader(path);
    std::vector<std::string> fields;
    if (!reader.next(fields) || fields.size() != 7 || fields[0] != "date")
        reader.fail("expected header date,gross,turnover,net_tc1,net_tc2,net_tc3,flags");
    BacktestResult result;
    while (reader.next(fields)) {
        if (fields.size() != 7) reader.fail("expected 7 fields");
        Date d;
        try {
            d = Date::parse(fields[0]);
        } catch (const std::exception& e) {
            reader.fail(e.what());
        }
        result.gross.dates.push_back(d);
        result.gross.values.push_back(reader.to_double(fields[1], "gross"));
        result.turnover.push_back(reader.to_double(fields[2], "turnover"));
        for (int s = 0; s < 3; ++s) {
            result.net[std::size_t(s)].dates.push_back(d);
            result.net[std::size_t(s)].values.push_back(
                reader.to_double(fields[std::size_t(3 + s)], "net"));
        }
        result.flags.push_back(fields[6]);
    }
    return result;
}

}  // namespace nsdyn::backtest
