#include "nsdyn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "nsdyn/csv.hpp"
#include "nsdyn/errors.hpp"
#include "nsdyn/nscurve.hpp"

namespace nsdyn::marketdata {

namespace {

constexpr double kDaysPerMonth = 30.4375;
constexpr int kTradingDaysPerMonth = 21;
constexpr int kExpiryDayOfMonth = 15;

Date expiry_of(int month_index) {
    return Date(month_index / 12, month_index % 12 + 1, kExpiryDayOfMonth);
}

std::string contract_code(const std::string& id, int month_index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d%02d", month_index / 12,
                  month_index % 12 + 1);
    return id + "-" + buf;
}

void check_rho(double rho, const std::string& id, const char* which) {
    if (!(rho > -1.0 && rho < 1.0))
        throw ConfigError("persistence " + std::string(which) + " for '" + id +
                          "' must lie in (-1, 1)");
}

}  // namespace

SimConfig load_sim_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open simulator config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad simulator config '" + path + "': " + e.what());
    }

    SimConfig config;
    try {
        config.start_year = j.value("start_year", config.start_year);
        config.start_month = j.value("start_month", config.start_month);
        config.months = j.value("months", config.months);
        config.depth = j.value("depth", config.depth);
        config.lambda_depth = j.value("lambda_depth", config.lambda_depth);
        config.write_cot = j.value("write_cot", config.write_cot);
        for (const auto& c : j.at("commodities")) {
            SimCommodity sc;
            sc.id = c.at("id").get<std::string>();
            sc.sector = parse_sector(c.value("sector", std::string("Energy")));
            sc.multiplier = c.value("multiplier", sc.multiplier);
            sc.tick_size = c.value("tick_size", sc.tick_size);
            if (c.contains("beta0")) {
                sc.beta_level0 = c["beta0"].at(0).get<double>();
                sc.beta_slope0 = c["beta0"].at(1).get<double>();
                sc.beta_curv0 = c["beta0"].at(2).get<double>();
            }
            if (c.contains("rho")) {
                sc.rho_level = c["rho"].at(0).get<double>();
                sc.rho_slope = c["rho"].at(1).get<double>();
                sc.rho_curv = c["rho"].at(2).get<double>();
            }
            if (c.contains("sigma")) {
                sc.sigma_level = c["sigma"].at(0).get<double>();
                sc.sigma_slope = c["sigma"].at(1).get<double>();
                sc.sigma_curv = c["sigma"].at(2).get<double>();
            }
            sc.price_noise = c.value("price_noise", sc.price_noise);
            sc.seasonal_amplitude =
                c.value("seasonal_amplitude", sc.seasonal_amplitude);
            sc.seasonal_theta = c.value("seasonal_theta", sc.seasonal_theta);
            sc.base_oi = c.value("base_oi", sc.base_oi);
            sc.oi_decay = c.value("oi_decay", sc.oi_decay);
            sc.base_volume = c.value("base_volume", sc.base_volume);
            sc.volume_decay = c.value("volume_decay", sc.volume_decay);
            config.commodities.push_back(std::move(sc));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("bad simulator config '" + path + "': " + e.what());
    }
    return config;
}

SimResult simulate_market(const SimConfig& config, std::uint64_t seed) {
    if (config.months < 1) throw ConfigError("months must be >= 1");
    if (config.start_month < 1 || config.start_month > 12)
        throw ConfigError("start_month must lie in 1..12");
    if (config.depth < 2 || config.depth > 24)
        throw ConfigError("depth must lie in 2..24");
    if (config.lambda_depth < 1 || config.lambda_depth > config.depth)
        throw ConfigError("lambda_depth must lie in 1..depth");
    if (config.commodities.empty())
        throw ConfigError("no commodities configured");
    {
        std::set<std::string> seen;
        for (const auto& c : config.commodities) {
            if (c.id.empty()) throw ConfigError("commodity id must be non-empty");
            if (!seen.insert(c.id).second)
                throw ConfigError("duplicate commodity id '" + c.id + "'");
            check_rho(c.rho_level, c.id, "rho_level");
            check_rho(c.rho_slope, c.id, "rho_slope");
            check_rho(c.rho_curv, c.id, "rho_curv");
            if (c.sigma_level < 0 || c.sigma_slope < 0 || c.sigma_curv < 0)
                throw ConfigError("sigma must be non-negative for '" + c.id + "'");
            if (c.price_noise < 0)
                throw ConfigError("price_noise must be non-negative for '" +
                                  c.id + "'");
            if (c.seasonal_theta < 1 || c.seasonal_theta > 12)
                throw ConfigError("seasonal_theta must lie in 1..12 for '" +
                                  c.id + "'");
            if (c.multiplier <= 0 || c.tick_size <= 0)
                throw ConfigError("multiplier and tick_size must be positive for '" +
                                  c.id + "'");
            if (!(c.oi_decay > 0 && c.oi_decay <= 1) ||
                !(c.volume_decay > 0 && c.volume_decay <= 1))
                throw ConfigError("decay profiles must lie in (0, 1] for '" +
                                  c.id + "'");
        }
    }

    const int m0 = config.start_year * 12 + (config.start_month - 1);
    const int m_end = m0 + config.months;  // exclusive

    // First kTradingDaysPerMonth weekdays of each month. A 28-day February
    // has only 20 weekdays and contributes all of them.
    std::vector<Date> calendar;
    calendar.reserve(std::size_t(config.months) * kTradingDaysPerMonth);
    for (int mi = m0; mi < m_end; ++mi) {
        int taken = 0;
        for (Date t(mi / 12, mi % 12 + 1, 1);
             t.month_index() == mi && taken < kTradingDaysPerMonth;
             t = t + 1) {
            if (t.weekday() <= 5) {
                calendar.push_back(t);
                ++taken;
            }
        }
    }

    SimResult result;
    result.chains.reserve(config.commodities.size());

    for (std::size_t ci = 0; ci < config.commodities.size(); ++ci) {
        const SimCommodity& sc = config.commodities[ci];
        std::mt19937_64 rng(seed * 1000003ULL + ci);
        std::normal_distribution<double> normal(0.0, 1.0);

        ContractChain chain;
        chain.commodity_id = sc.id;
        chain.sector = sc.sector;
        chain.multiplier = sc.multiplier;
        chain.tick_size = sc.tick_size;

        // Expiry months m0+1 .. m_end-1+depth keep `depth` curve locations
        // covered on every trading day.
        const int first_expiry = m0 + 1;
        const int last_expiry = m_end - 1 + config.depth;
        for (int mi = first_expiry; mi <= last_expiry; ++mi) {
            ContractSeries cs;
            cs.commodity_id = sc.id;
            cs.contract_code = contract_code(sc.id, mi);
            cs.expiry_date = expiry_of(mi);
            chain.contracts.push_back(std::move(cs));
        }

        auto& truth = result.truth[sc.id];
        truth.reserve(calendar.size());

        double beta_l = sc.beta_level0;
        double beta_s = sc.beta_slope0;
        double beta_c = sc.beta_curv0;
        double dl = 0.0, ds = 0.0, dc = 0.0;

        for (std::size_t di = 0; di < calendar.size(); ++di) {
            const Date t = calendar[di];
            const int t_month = t.month_index();
            if (di > 0) {
                dl = sc.rho_level * dl + sc.sigma_level * normal(rng);
                ds = sc.rho_slope * ds + sc.sigma_slope * normal(rng);
                dc = sc.rho_curv * dc + sc.sigma_curv * normal(rng);
                beta_l += dl;
                beta_s += ds;
                beta_c += dc;
            }

            // Decay factor from the front lambda_depth maturities, exactly as
            // the fitter computes it from a snapshot of that depth.
            std::vector<double> lam_maturities;
            lam_maturities.reserve(std::size_t(config.lambda_depth));
            for (int k = 1; k <= config.lambda_depth; ++k)
                lam_maturities.push_back(double(expiry_of(t_month + k) - t) /
                                         kDaysPerMonth);
            const double lambda = nscurve::lambda_for_maturities(lam_maturities);

            TruthRow row;
            row.date = t;
            row.beta_level = beta_l;
            row.beta_slope = beta_s;
            row.beta_curvature = beta_c;
            row.beta_seasonal = sc.seasonal_amplitude;
            row.theta = sc.seasonal_theta;
            row.lambda = lambda;
            truth.push_back(row);

            // Contracts listed within `depth` months of expiry, up to the day
            // before expiry.
            for (int mi = std::max(first_expiry, t_month);
                 mi <= std::min(last_expiry, t_month + config.depth); ++mi) {
                const Date expiry = expiry_of(mi);
                const int maturity_days = expiry - t;
                if (maturity_days < 1) continue;
                const double m_months = double(maturity_days) / kDaysPerMonth;
                const double lm = lambda * m_months;
                double price = beta_l + beta_s * nscurve::slope_loading(lm) +
                               beta_c * nscurve::curvature_loading(lm);
                if (sc.seasonal_amplitude != 0.0)
                    price += sc.seasonal_amplitude *
                             std::cos(nscurve::kSeasonalOmega *
                                      (m_months - double(sc.seasonal_theta)));
                price += sc.price_noise * normal(rng);
                if (price <= 0)
                    throw DataError("simulated price for '" + sc.id + "' on " +
                                    t.to_string() +
                                    " is non-positive; lower the noise or raise "
                                    "beta_level");

                const int loc = std::max(0, mi - t_month - 1);
                double oi = std::round(sc.base_oi * std::pow(sc.oi_decay, loc));
                double vol =
                    std::round(sc.base_volume * std::pow(sc.volume_decay, loc));

                ContractSeries& cs =
                    chain.contracts[std::size_t(mi - first_expiry)];
                cs.rows.push_back({t, price, vol, oi});
            }
        }

        std::erase_if(chain.contracts,
                      [](const ContractSeries& cs) { return cs.rows.empty(); });
        result.chains.push_back(std::move(chain));
    }

    if (config.write_cot) {
        for (std::size_t ci = 0; ci < config.commodities.size(); ++ci) {
            const SimCommodity& sc = config.commodities[ci];
            std::mt19937_64 rng(seed * 1000003ULL + 500009ULL + ci);
            std::uniform_real_distribution<double> uniform(0.0, 1.0);
            CotSeries series;
            series.commodity_id = sc.id;
            long week = 0;
            for (const Date& t : calendar) {
                if (t.day() % 7 != 0) continue;
                double phase = 2.0 * 3.14159265358979323846 * double(week) / 26.0;
                double s = sc.base_oi * (0.55 + 0.20 * std::sin(phase) +
                                         0.05 * uniform(rng));
                double l = sc.base_oi * (0.45 + 0.15 * std::cos(phase) +
                                         0.05 * uniform(rng));
                series.rows.push_back(
                    {t, std::max(0.0, std::round(s)), std::max(0.0, std::round(l))});
                ++week;
            }
            result.cot.push_back(std::move(series));
        }
    }

    return result;
}

void write_chain_csv(const ContractChain& chain, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "date,contract_code,expiry_date,settle,volume,open_interest\n";
    for (const auto& cs : chain.contracts)
        for (const auto& row : cs.rows)
            out << row.date.to_string() << ',' << cs.contract_code << ','
                << cs.expiry_date.to_string() << ','
                << csv::format_double(row.settle) << ','
                << csv::format_double(row.volume) << ','
                << csv::format_double(row.open_interest) << '\n';
}

void write_truth_csv(const SimResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "date,commodity,beta_level,beta_slope,beta_curvature,beta_seasonal,"
           "theta,lambda\n";
    for (const auto& [id, rows] : result.truth)
        for (const auto& r : rows)
            out << r.date.to_string() << ',' << id << ','
                << csv::format_double(r.beta_level) << ','
                << csv::format_double(r.beta_slope) << ','
                << csv::format_double(r.beta_curvature) << ','
                << csv::format_double(r.beta_seasonal) << ',' << r.theta << ','
                << csv::format_double(r.lambda) << '\n';
}

void write_cot_csv(const std::vector<CotSeries>& cot, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "date,commodity_id,commercial_short,commercial_long\n";
    for (const auto& series : cot)
        for (const auto& row : series.rows)
            out << row.date.to_string() << ',' << series.commodity_id << ','
                << csv::format_double(row.commercial_short) << ','
                << csv::format_double(row.commercial_long) << '\n';
}

void write_spec_json(const SimConfig& config, const std::string& path) {
    nlohmann::ordered_json j;
    for (const auto& c : config.commodities) {
        j[c.id] = {{"sector", to_string(c.sector)},
                   {"multiplier", c.multiplier},
                   {"tick_size", c.tick_size}};
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

void write_sim_data(const SimConfig& config, std::uint64_t seed,
                    const std::string& dir) {
    const auto result = simulate_market(config, seed);
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    for (const auto& chain : result.chains)
        write_chain_csv(chain, (base / (chain.commodity_id + ".csv")).string());
    write_spec_json(config, (base / "spec.json").string());
    write_truth_csv(result, (base / "truth.csv").string());
    if (!result.cot.empty())
        write_cot_csv(result.cot, (base / "cot.csv").string());
}

}  // namespace nsdyn::marketdata
