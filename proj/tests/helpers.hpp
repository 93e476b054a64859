#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nsdyn/marketdata.hpp"
#include "nsdyn/portfolio.hpp"
#include "nsdyn/series.hpp"

namespace testutil {

inline std::string fixture(const std::string& rel) {
    return std::string(NSDYN_FIXTURE_DIR) + "/" + rel;
}

/// Consecutive weekdays starting at `start`.
inline std::vector<nsdyn::Date> weekdays(nsdyn::Date start, int n) {
    std::vector<nsdyn::Date> out;
    nsdyn::Date d = start;
    while (int(out.size()) < n) {
        if (d.weekday() <= 5) out.push_back(d);
        d = d + 1;
    }
    return out;
}

inline nsdyn::ReturnSeries series(nsdyn::Date start,
                                  const std::vector<double>& values) {
    nsdyn::ReturnSeries s;
    s.dates = weekdays(start, int(values.size()));
    s.values = values;
    return s;
}

/// One contract's expiry and settle path over a shared calendar; NaN marks
/// a day the contract did not trade.
struct ContractSpec {
    nsdyn::Date expiry;
    std::vector<double> settles;
};

inline nsdyn::marketdata::ContractChain chain_from(
    const std::string& id, const std::vector<nsdyn::Date>& dates,
    const std::vector<ContractSpec>& contracts, double multiplier = 100.0,
    double tick = 0.01,
    nsdyn::marketdata::Sector sector = nsdyn::marketdata::Sector::Energy) {
    nsdyn::marketdata::ContractChain chain;
    chain.commodity_id = id;
    chain.sector = sector;
    chain.multiplier = multiplier;
    chain.tick_size = tick;
    int seq = 0;
    for (const auto& c : contracts) {
        nsdyn::marketdata::ContractSeries cs;
        cs.commodity_id = id;
        cs.contract_code = id + "-" + std::to_string(seq++);
        cs.expiry_date = c.expiry;
        for (std::size_t i = 0; i < dates.size() && i < c.settles.size(); ++i)
            if (!std::isnan(c.settles[i]))
                cs.rows.push_back({dates[i], c.settles[i], 1000.0, 5000.0});
        chain.contracts.push_back(std::move(cs));
    }
    return chain;
}

inline double sum_abs_weights(const nsdyn::portfolio::BookDay& day) {
    double s = 0.0;
    for (const auto& e : day.entries) s += std::fabs(e.weight);
    return s;
}

}  // namespace testutil
