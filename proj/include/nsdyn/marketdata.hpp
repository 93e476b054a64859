#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsdyn/dates.hpp"
#include "nsdyn/series.hpp"

namespace nsdyn::marketdata {

enum class Sector { Energy, Grains, Industrials, Meats, Metals, Oilseeds, Softs };

Sector parse_sector(const std::string& name);
std::string to_string(Sector s);

struct ContractRow {
    Date date;
    double settle = 0.0;
    double volume = 0.0;
    double open_interest = 0.0;
};

/// One futures contract: identity, expiry, and its daily price history.
struct ContractSeries {
    std::string commodity_id;
    std::string contract_code;
    Date expiry_date;
    std::vector<ContractRow> rows;

    /// Settle on the given date, if the contract traded that day.
    std::optional<double> settle_at(const Date& d) const;
    /// Index of the row at the given date, or -1.
    int row_at(const Date& d) const;
};

struct CommoditySpec {
    Sector sector = Sector::Energy;
    double multiplier = 1.0;
    double tick_size = 0.01;
};

using SpecTable = std::map<std::string, CommoditySpec>;

/// Reads the commodity spec file (JSON: id -> {sector, multiplier, tick_size}).
SpecTable load_spec_table(const std::string& path);

/// All contracts of one commodity, expiry-ordered, plus contract specs.
struct ContractChain {
    std::string commodity_id;
    Sector sector = Sector::Energy;
    std::vector<ContractSeries> contracts;
    double multiplier = 1.0;
    double tick_size = 0.01;
};

/// Loads a per-commodity price CSV
/// (`date,contract_code,expiry_date,settle,volume,open_interest`) and
/// validates it against the spec table. The commodity id defaults to the
/// file name stem.
ContractChain load_chain(const std::string& path, const SpecTable& spec,
                         std::string commodity_id = "");

/// Daily excess return F_t / F_prev - 1 on a single contract.
double excess_return(double f_t, double f_prev);

/// Per-day curve membership. A contract stays at the front until the last
/// trading day before its expiry month begins; eligible contracts are a
/// contiguous expiry-ordered suffix, so only the front index is stored.
struct RollSchedule {
    std::vector<Date> dates;
    std::vector<int> front;
    int n_contracts = 0;

    int row_of(const Date& d) const;
    int live_count(int row) const { return n_contracts - front[std::size_t(row)]; }
    /// Contract index at a curve location (1-based), or -1 past the depth.
    int contract_at_row(int row, int location) const;
    int contract_at(const Date& d, int location) const;
};

RollSchedule roll_schedule(const ContractChain& chain);

struct CurvePoint {
    int location = 0;
    double maturity_months = 0.0;
    int maturity_days = 0;
    double price = 0.0;
};

/// One commodity-day cross-section of the nearest K contracts.
struct CurveSnapshot {
    Date date;
    std::string commodity_id;
    std::vector<CurvePoint> points;
};

/// Snapshot of the nearest K contracts on a date; empty when any of the K
/// locations lacks a price. Maturity is measured in calendar days to expiry,
/// with months = days / 30.4375.
std::optional<CurveSnapshot> snapshot(const ContractChain& chain,
                                      const RollSchedule& sched, const Date& d,
                                      int k);
std::optional<CurveSnapshot> snapshot(const ContractChain& chain, const Date& d,
                                      int k);

/// Average open-interest share per curve location, over days where the first
/// `depth` locations all have data (depth capped at the chain's maximum).
struct OiProfile {
    std::vector<double> share;
    std::vector<double> cumulative;
};

OiProfile open_interest_profile(const ContractChain& chain, int k_max = 12);

struct CotRow {
    Date date;
    double commercial_short = 0.0;
    double commercial_long = 0.0;
};

struct CotSeries {
    std::string commodity_id;
    std::vector<CotRow> rows;
};

/// Loads a CoT CSV (`date,commodity_id,commercial_short,commercial_long`).
std::vector<CotSeries> load_cot(const std::string& path);

/// Daily returns per curve location, keyed to the contract occupying the
/// location on each day so a return never straddles a roll.
struct LocationReturns {
    std::vector<Date> dates;
    /// [day][loc-1] contract index, or -1 when no contract/price.
    std::vector<std::vector<int>> contract;
    /// [day][loc-1] return, NaN when unavailable.
    std::vector<std::vector<double>> ret;

    int row_of(const Date& d) const;
};

LocationReturns location_returns(const ContractChain& chain,
                                 const RollSchedule& sched, int k);

/// A loaded universe: chains with their roll schedules and the union
/// trading calendar.
struct Market {
    std::vector<ContractChain> chains;
    std::vector<RollSchedule> schedules;
    std::vector<Date> calendar;

    int chain_of(const std::string& commodity_id) const;
};

Market build_market(std::vector<ContractChain> chains);

}  // namespace nsdyn::marketdata
