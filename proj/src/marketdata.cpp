#include "nsdyn/marketdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "nsdyn/csv.hpp"
#include "nsdyn/errors.hpp"

namespace nsdyn::marketdata {

namespace {
constexpr double kDaysPerMonth = 30.4375;
}

Sector parse_sector(const std::string& name) {
    if (name == "Energy") return Sector::Energy;
    if (name == "Grains") return Sector::Grains;
    if (name == "Industrials") return Sector::Industrials;
    if (name == "Meats") return Sector::Meats;
    if (name == "Metals") return Sector::Metals;
    if (name == "Oilseeds") return Sector::Oilseeds;
    if (name == "Softs") return Sector::Softs;
    throw ConfigError("unknown sector '" + name + "'");
}

std::string to_string(Sector s) {
    switch (s) {
        case Sector::Energy: return "Energy";
        case Sector::Grains: return "Grains";
        case Sector::Industrials: return "Industrials";
        case Sector::Meats: return "Meats";
        case Sector::Metals: return "Metals";
        case Sector::Oilseeds: return "Oilseeds";
        case Sector::Softs: return "Softs";
    }
    throw ConfigError("unknown sector value");
}

int ContractSeries::row_at(const Date& d) const {
    auto it = std::lower_bound(
        rows.begin(), rows.end(), d,
        [](const ContractRow& r, const Date& x) { return r.date < x; });
    if (it == rows.end() || it->date != d) return -1;
    return int(it - rows.begin());
}

std::optional<double> ContractSeries::settle_at(const Date& d) const {
    int i = row_at(d);
    if (i < 0) return std::nullopt;
    return rows[std::size_t(i)].settle;
}

SpecTable load_spec_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open spec file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad spec file '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw ConfigError("spec file must be a JSON object");
    SpecTable table;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& v = it.value();
        CommoditySpec spec;
        try {
            spec.sector = parse_sector(v.at("sector").get<std::string>());
            spec.multiplier = v.at("multiplier").get<double>();
            spec.tick_size = v.at("tick_size").get<double>();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("bad spec entry '" + it.key() + "': " + e.what());
        }
        if (spec.multiplier <= 0)
            throw ConfigError("multiplier must be positive for '" + it.key() + "'");
        if (spec.tick_size <= 0)
            throw ConfigError("tick_size must be positive for '" + it.key() + "'");
        table.emplace(it.key(), spec);
    }
    return table;
}

ContractChain load_chain(const std::string& path, const SpecTable& spec,
                         std::string commodity_id) {
    if (commodity_id.empty())
        commodity_id = std::filesystem::path(path).stem().string();
    auto spec_it = spec.find(commodity_id);
    if (spec_it == spec.end())
        throw ConfigError("commodity '" + commodity_id + "' not in spec table");

    csv::Reader reader(path);
    std::vector<std::string> f;
    if (!reader.next(f) || f.empty() || f[0] != "date")
        reader.fail("missing header 'date,contract_code,expiry_date,settle,volume,open_interest'");

    std::map<std::string, std::size_t> index;
    std::vector<ContractSeries> contracts;
    while (reader.next(f)) {
        if (f.size() != 6) reader.fail("expected 6 fields");
        Date date, expiry;
        try {
            date = Date::parse(f[0]);
            expiry = Date::parse(f[2]);
        } catch (const DataError& e) {
            reader.fail(e.what());
        }
        double settle = reader.to_double(f[3], "settle");
        double volume = reader.to_double(f[4], "volume");
        double oi = reader.to_double(f[5], "open_interest");
        if (settle <= 0) reader.fail("settle_price must be positive");
        if (volume < 0) reader.fail("volume must be non-negative");
        if (oi < 0) reader.fail("open_interest must be non-negative");
        if (date > expiry) reader.fail("row after expiry_date");

        auto [it, inserted] = index.emplace(f[1], contracts.size());
        if (inserted) {
            ContractSeries cs;
            cs.commodity_id = commodity_id;
            cs.contract_code = f[1];
            cs.expiry_date = expiry;
            contracts.push_back(std::move(cs));
        }
        ContractSeries& cs = contracts[it->second];
        if (expiry != cs.expiry_date)
            reader.fail("inconsistent expiry_date for contract '" + f[1] + "'");
        if (!cs.rows.empty()) {
            if (date == cs.rows.back().date)
                reader.fail("duplicate (date, contract) row for '" + f[1] + "'");
            if (date < cs.rows.back().date)
                reader.fail("dates out of order for contract '" + f[1] + "'");
        }
        cs.rows.push_back({date, settle, volume, oi});
    }

    std::sort(contracts.begin(), contracts.end(),
              [](const ContractSeries& a, const ContractSeries& b) {
                  if (a.expiry_date != b.expiry_date)
                      return a.expiry_date < b.expiry_date;
                  return a.contract_code < b.contract_code;
              });

    ContractChain chain;
    chain.commodity_id = commodity_id;
    chain.sector = spec_it->second.sector;
    chain.multiplier = spec_it->second.multiplier;
    chain.tick_size = spec_it->second.tick_size;
    chain.contracts = std::move(contracts);
    return chain;
}

double excess_return(double f_t, double f_prev) {
    if (f_t <= 0 || f_prev <= 0)
        throw DataError("excess_return requires positive prices");
    return f_t / f_prev - 1.0;
}

int RollSchedule::row_of(const Date& d) const {
    auto it = std::lower_bound(dates.begin(), dates.end(), d);
    if (it == dates.end() || *it != d) return -1;
    return int(it - dates.begin());
}

int RollSchedule::contract_at_row(int row, int location) const {
    if (row < 0 || location < 1) return -1;
    int idx = front[std::size_t(row)] + location - 1;
    if (idx >= n_contracts) return -1;
    return idx;
}

int RollSchedule::contract_at(const Date& d, int location) const {
    return contract_at_row(row_of(d), location);
}

RollSchedule roll_schedule(const ContractChain& chain) {
    if (chain.contracts.empty())
        throw DataError("empty chain for '" + chain.commodity_id + "'");

    std::vector<Date> dates;
    for (const auto& c : chain.contracts)
        for (const auto& r : c.rows) dates.push_back(r.date);
    std::sort(dates.begin(), dates.end());
    dates.erase(std::unique(dates.begin(), dates.end()), dates.end());

    // A contract is eligible while the date is before the first day of its
    // expiry month; cutoffs are non-decreasing in expiry order.
    std::vector<Date> cutoff;
    cutoff.reserve(chain.contracts.size());
    for (const auto& c : chain.contracts)
        cutoff.push_back(c.expiry_date.first_of_month());

    RollSchedule sched;
    sched.dates = std::move(dates);
    sched.n_contracts = int(chain.contracts.size());
    sched.front.resize(sched.dates.size());
    int lo = 0;
    for (std::size_t i = 0; i < sched.dates.size(); ++i) {
        while (lo < sched.n_contracts && cutoff[std::size_t(lo)] <= sched.dates[i])
            ++lo;
        sched.front[i] = lo;
    }
    return sched;
}

std::optional<CurveSnapshot> snapshot(const ContractChain& chain,
                                      const RollSchedule& sched, const Date& d,
                                      int k) {
    int row = sched.row_of(d);
    if (row < 0) return std::nullopt;
    CurveSnapshot snap;
    snap.date = d;
    snap.commodity_id = chain.commodity_id;
    snap.points.reserve(std::size_t(k));
    for (int loc = 1; loc <= k; ++loc) {
        int ci = sched.contract_at_row(row, loc);
        if (ci < 0) return std::nullopt;
        const auto& contract = chain.contracts[std::size_t(ci)];
        auto price = contract.settle_at(d);
        if (!price) return std::nullopt;
        CurvePoint p;
        p.location = loc;
        p.maturity_days = contract.expiry_date - d;
        p.maturity_months = double(p.maturity_days) / kDaysPerMonth;
        p.price = *price;
        snap.points.push_back(p);
    }
    return snap;
}

std::optional<CurveSnapshot> snapshot(const ContractChain& chain, const Date& d,
                                      int k) {
    return snapshot(chain, roll_schedule(chain), d, k);
}

OiProfile open_interest_profile(const ContractChain& chain, int k_max) {
    RollSchedule sched = roll_schedule(chain);

    auto leading_depth = [&](std::size_t row) {
        int depth = 0;
        for (int loc = 1; loc <= k_max; ++loc) {
            int ci = sched.contract_at_row(int(row), loc);
            if (ci < 0) break;
            if (chain.contracts[std::size_t(ci)].row_at(sched.dates[row]) < 0) break;
            ++depth;
        }
        return depth;
    };

    int full_depth = 0;
    for (std::size_t row = 0; row < sched.dates.size(); ++row)
        full_depth = std::max(full_depth, leading_depth(row));
    if (full_depth == 0) throw DataError("no open interest data");

    std::vector<double> sum(std::size_t(full_depth), 0.0);
    long used_days = 0;
    for (std::size_t row = 0; row < sched.dates.size(); ++row) {
        if (leading_depth(row) < full_depth) continue;
        double total = 0.0;
        std::vector<double> oi(std::size_t(full_depth), 0.0);
        for (int loc = 1; loc <= full_depth; ++loc) {
            int ci = sched.contract_at_row(int(row), loc);
            const auto& contract = chain.contracts[std::size_t(ci)];
            int r = contract.row_at(sched.dates[row]);
            oi[std::size_t(loc - 1)] = contract.rows[std::size_t(r)].open_interest;
            total += oi[std::size_t(loc - 1)];
        }
        if (total <= 0) continue;
        for (int loc = 0; loc < full_depth; ++loc)
            sum[std::size_t(loc)] += oi[std::size_t(loc)] / total;
        ++used_days;
    }
    if (used_days == 0) throw DataError("no day with positive open interest");

    OiProfile profile;
    profile.share.resize(std::size_t(full_depth));
    profile.cumulative.resize(std::size_t(full_depth));
    double running = 0.0;
    for (int loc = 0; loc < full_depth; ++loc) {
        profile.share[std::size_t(loc)] = sum[std::size_t(loc)] / double(used_days);
        running += profile.share[std::size_t(loc)];
        profile.cumulative[std::size_t(loc)] = running;
    }
    return profile;
}

std::vector<CotSeries> load_cot(const std::string& path) {
    csv::Reader reader(path);
    std::vector<std::string> f;
    if (!reader.next(f) || f.empty() || f[0] != "date")
        reader.fail("missing header 'date,commodity_id,commercial_short,commercial_long'");

    std::map<std::string, std::size_t> index;
    std::vector<CotSeries> all;
    while (reader.next(f)) {
        if (f.size() != 4) reader.fail("expected 4 fields");
        Date date;
        try {
            date = Date::parse(f[0]);
        } catch (const DataError& e) {
            reader.fail(e.what());
        }
        double s = reader.to_double(f[2], "commercial_short");
        double l = reader.to_double(f[3], "commercial_long");
        if (s < 0 || l < 0) reader.fail("positions must be non-negative");
        auto [it, inserted] = index.emplace(f[1], all.size());
        if (inserted) all.push_back({f[1], {}});
        CotSeries& series = all[it->second];
        if (!series.rows.empty() && date <= series.rows.back().date)
            reader.fail("dates out of order for commodity '" + f[1] + "'");
        series.rows.push_back({date, s, l});
    }
    std::sort(all.begin(), all.end(),
              [](const CotSeries& a, const CotSeries& b) {
                  return a.commodity_id < b.commodity_id;
              });
    return all;
}

int LocationReturns::row_of(const Date& d) const {
    auto it = std::lower_bound(dates.begin(), dates.end(), d);
    if (it == dates.end() || *it != d) return -1;
    return int(it - dates.begin());
}

LocationReturns location_returns(const ContractChain& chain,
                                 const RollSchedule& sched, int k) {
    LocationReturns out;
    out.dates = sched.dates;
    out.contract.assign(out.dates.size(), std::vector<int>(std::size_t(k), -1));
    out.ret.assign(out.dates.size(), std::vector<double>(std::size_t(k), kNaN));
    for (std::size_t i = 1; i < out.dates.size(); ++i) {
        for (int loc = 1; loc <= k; ++loc) {
            int ci = sched.contract_at_row(int(i), loc);
            if (ci < 0) continue;
            out.contract[i][std::size_t(loc - 1)] = ci;
            const auto& contract = chain.contracts[std::size_t(ci)];
            auto prev = contract.settle_at(out.dates[i - 1]);
            auto cur = contract.settle_at(out.dates[i]);
            if (prev && cur)
                out.ret[i][std::size_t(loc - 1)] = excess_return(*cur, *prev);
        }
    }
    return out;
}

int Market::chain_of(const std::string& commodity_id) const {
    for (std::size_t i = 0; i < chains.size(); ++i)
        if (chains[i].commodity_id == commodity_id) return int(i);
    return -1;
}

Market build_market(std::vector<ContractChain> chains) {
    std::sort(chains.begin(), chains.end(),
              [](const ContractChain& a, const ContractChain& b) {
                  return a.commodity_id < b.commodity_id;
              });
    Market market;
    market.chains = std::move(chains);
    market.schedules.reserve(market.chains.size());
    std::vector<Date> calendar;
    for (const auto& chain : market.chains) {
        market.schedules.push_back(roll_schedule(chain));
        const auto& dates = market.schedules.back().dates;
        calendar.insert(calendar.end(), dates.begin(), dates.end());
    }
    std::sort(calendar.begin(), calendar.end());
    calendar.erase(std::unique(calendar.begin(), calendar.end()), calendar.end());
    market.calendar = std::move(calendar);
    return market;
}

}  // namespace nsdyn::marketdata
