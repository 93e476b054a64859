#include "nsdyn/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "nsdyn/csv.hpp"
#include "nsdyn/errors.hpp"
#include "nsdyn/nscurve.hpp"

namespace fs = std::filesystem;

namespace nsdyn::pipeline {

namespace {

Date parse_config_date(const nlohmann::json& j, const char* key) {
    try {
        return Date::parse(j.get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad date for '") + key + "': " + e.what());
    }
}

void write_series_csv(const ReturnSeries& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "date,value\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << s.dates[i].to_string() << ',' << csv::format_double(s.values[i])
            << '\n';
}

ReturnSeries read_series_csv(const std::string& path) {
    csv::Reader reader(path);
    std::vector<std::string> fields;
    if (!reader.next(fields) || fields.size() != 2 || fields[0] != "date")
        reader.fail("expected header date,value");
    ReturnSeries s;
    while (reader.next(fields)) {
        if (fields.size() != 2) reader.fail("expected 2 fields");
        try {
            s.dates.push_back(Date::parse(fields[0]));
        } catch (const std::exception& e) {
            reader.fail(e.what());
        }
        s.values.push_back(reader.to_double(fields[1], "value"));
    }
    return s;
}

backtest::StrategySpec parse_strategy(const nlohmann::json& j,
                                      const backtest::SignalParams& defaults,
                                      int default_depth) {
    backtest::StrategySpec spec;
    spec.params = defaults;
    spec.fit_depth = default_depth;
    spec.name = j.value("name", std::string());
    spec.family = portfolio::parse_family(j.value("family", std::string("S")));
    const std::string mode = j.value("mode", std::string("cs"));
    if (mode != "cs" && mode != "ts")
        throw ConfigError("strategy mode must be 'cs' or 'ts'");
    spec.time_series = mode == "ts";
    spec.signal = j.value("signal", std::string("beta"));
    spec.ry_k = j.value("ry_k", spec.ry_k);
    spec.fit_depth = j.value("depth", spec.fit_depth);
    if (j.contains("seasonal")) {
        const auto& s = j["seasonal"];
        if (s.is_boolean()) {
            spec.seasonal_all = s.get<bool>();
        } else {
            for (const auto& id : s)
                spec.seasonal_ids.insert(id.get<std::string>());
        }
    }
    if (j.contains("characteristic"))
        spec.characteristic =
            signals::parse_characteristic(j["characteristic"].get<std::string>());
    else if (spec.family == portfolio::Family::Factor)
        throw ConfigError("factor strategies need a 'characteristic' key");
    spec.params.ma = j.value("ma", spec.params.ma);
    spec.params.pca_window = j.value("pca_window", spec.params.pca_window);
    spec.timed = j.value("timed", false);

    if (spec.fit_depth != 4 && spec.fit_depth != 6 && spec.fit_depth != 12)
        throw ConfigError("strategy depth must be one of 4, 6, 12");
    if (spec.params.ma != 1 && spec.params.ma != 3 && spec.params.ma != 5)
        throw ConfigError("strategy ma window must be one of 1, 3, 5");
    return spec;
}

std::string fit_key(int depth, bool all, const std::set<std::string>& ids) {
    std::string key = std::to_string(depth) + "|";
    if (all) return key + "*";
    for (const auto& id : ids) key += id + ",";
    return key;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open run config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad run config '" + path + "': " + e.what());
    }

    RunConfig config;
    try {
        if (j.contains("data")) {
            const auto& d = j["data"];
            config.data_dir = d.value("dir", std::string());
            config.spec_path = d.value("spec", std::string());
            config.cot_path = d.value("cot", std::string());
        }
        config.sim_config = j.value("simulate", std::string());
        if (config.data_dir.empty() == config.sim_config.empty())
            throw ConfigError(
                "config needs exactly one of data.dir and simulate");

        if (j.contains("universe"))
            for (const auto& id : j["universe"])
                config.filters.universe.push_back(id.get<std::string>());
        if (j.contains("sector"))
            config.filters.sector =
                marketdata::parse_sector(j["sector"].get<std::string>());
        if (j.contains("start"))
            config.filters.start = parse_config_date(j["start"], "start");
        if (j.contains("end"))
            config.filters.end = parse_config_date(j["end"], "end");
        if (j.contains("subsample_cuts"))
            for (const auto& c : j["subsample_cuts"])
                config.stats.subsample_cuts.push_back(
                    parse_config_date(c, "subsample_cuts"));
        if (!std::is_sorted(config.stats.subsample_cuts.begin(),
                            config.stats.subsample_cuts.end()))
            throw ConfigError("subsample_cuts must be sorted ascending");

        if (j.contains("fit")) {
            const auto& f = j["fit"];
            config.fit_depth = f.value("depth", config.fit_depth);
            if (f.contains("seasonal"))
                for (const auto& id : f["seasonal"])
                    config.fit_seasonal_ids.insert(id.get<std::string>());
        }

        backtest::SignalParams defaults;
        if (j.contains("signals")) {
            const auto& s = j["signals"];
            defaults.ma = s.value("ma", defaults.ma);
            defaults.pca_window = s.value("pca_window", defaults.pca_window);
            defaults.characteristics.skew_days =
                s.value("skew_days", defaults.characteristics.skew_days);
            defaults.characteristics.liq_days =
                s.value("liq_days", defaults.characteristics.liq_days);
            defaults.characteristics.curvem_location = s.value(
                "curvem_location", defaults.characteristics.curvem_location);
        }

        if (!j.contains("strategies") || !j["strategies"].is_array() ||
            j["strategies"].empty())
            throw ConfigError("config needs a non-empty 'strategies' list");
        for (const auto& s : j["strategies"])
            config.strategies.push_back(
                parse_strategy(s, defaults, config.fit_depth));

        if (j.contains("costs")) {
            const auto& c = j["costs"];
            config.costs.commission = c.value("commission", config.costs.commission);
            config.costs.flat_rate = c.value("flat_rate", config.costs.flat_rate);
            config.costs.impact_ticks =
                c.value("impact_ticks", config.costs.impact_ticks);
            config.costs.spread_tickets =
                c.value("spread_tickets", config.costs.spread_tickets);
        }

        if (j.contains("timing")) {
            const auto& t = j["timing"];
            config.timing.d = t.value("window", config.timing.d);
            config.timing.expanding = t.value("expanding", config.timing.expanding);
            const int d = config.timing.d;
            if (d != 3 && d != 5 && d != 10 && d != 15 && d != 22)
                throw ConfigError("timing window must be one of 3, 5, 10, 15, 22");
        }

        if (j.contains("stats")) {
            const auto& s = j["stats"];
            config.stats.n_per_year =
                s.value("days_per_year", config.stats.n_per_year);
            config.stats.gamma = s.value("gamma", config.stats.gamma);
            if (s.contains("nw_lag") && !s["nw_lag"].is_string())
                config.stats.nw_lag = s["nw_lag"].get<int>();
            config.stats.adjusted_moments =
                s.value("adjusted_moments", config.stats.adjusted_moments);
            config.stats.spanning_monthly =
                s.value("spanning_monthly", config.stats.spanning_monthly);
        }

        config.indicator_csv = j.value("indicator_csv", std::string());
        config.risk_free_csv = j.value("risk_free_csv", std::string());
        config.out_dir = j.value("out", config.out_dir);
        config.seed = j.value("seed", config.seed);
        config.threads = j.value("threads", config.threads);
        if (config.threads < 1) throw ConfigError("threads must be >= 1");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("bad run config '" + path + "': " + e.what());
    }
    return config;
}

marketdata::Market load_market(const RunConfig& config,
                               std::vector<marketdata::CotSeries>& cot) {
    cot.clear();
    if (!config.sim_config.empty()) {
        auto result = marketdata::simulate_market(
            marketdata::load_sim_config(config.sim_config), config.seed);
        cot = std::move(result.cot);
        return marketdata::build_market(std::move(result.chains));
    }

    const fs::path dir(config.data_dir);
    if (!fs::is_directory(dir))
        throw DataError("data directory '" + config.data_dir + "' not found");
    const std::string spec_path =
        config.spec_path.empty() ? (dir / "spec.json").string() : config.spec_path;
    const auto spec = marketdata::load_spec_table(spec_path);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto& p = entry.path();
        if (p.extension() != ".csv") continue;
        const std::string stem = p.stem().string();
        if (stem == "cot" || stem == "truth") continue;
        files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    std::vector<marketdata::ContractChain> chains;
    for (const auto& p : files)
        chains.push_back(marketdata::load_chain(p.string(), spec));
    if (chains.empty())
        throw DataError("no price CSVs in '" + config.data_dir + "'");

    std::string cot_path = config.cot_path;
    if (cot_path.empty() && fs::exists(dir / "cot.csv"))
        cot_path = (dir / "cot.csv").string();
    if (!cot_path.empty()) cot = marketdata::load_cot(cot_path);
    return marketdata::build_market(std::move(chains));
}

RunOutputs run(const RunConfig& config) {
    if (config.strategies.empty())
        throw ConfigError("no strategies configured");
    std::vector<marketdata::CotSeries> cot;
    const auto market = backtest::apply_filters(load_market(config, cot),
                                                config.filters);

    std::map<std::string, nscurve::FitPanel> fit_cache;
    auto fits_for = [&](int depth, bool all,
                        const std::set<std::string>& ids)
        -> const nscurve::FitPanel& {
        const std::string key = fit_key(depth, all, ids);
        auto it = fit_cache.find(key);
        if (it == fit_cache.end()) {
            std::set<std::string> seasonal = ids;
            if (all)
                for (const auto& chain : market.chains)
                    seasonal.insert(chain.commodity_id);
            it = fit_cache
                     .emplace(key, nscurve::fit_panel(market, depth, {},
                                                      seasonal, config.threads))
                     .first;
        }
        return it->second;
    };

    RunOutputs out;
    out.dispersion =
        portfolio::dispersion_series(fits_for(config.fit_depth, false,
                                              config.fit_seasonal_ids));
    out.indicator = config.indicator_csv.empty()
                        ? out.dispersion
                        : read_series_csv(config.indicator_csv);
    if (!config.risk_free_csv.empty())
        out.risk_free = read_series_csv(config.risk_free_csv);

    std::set<std::string> labels;
    for (const auto& spec : config.strategies) {
        StrategyRun sr;
        sr.spec = spec;
        sr.label = backtest::strategy_label(spec);
        if (!labels.insert(sr.label).second)
            throw ConfigError("duplicate strategy label '" + sr.label + "'");

        const bool curve_family = spec.family == portfolio::Family::L ||
                                  spec.family == portfolio::Family::S ||
                                  spec.family == portfolio::Family::C;
        const nscurve::FitPanel* fits = nullptr;
        if (curve_family && spec.signal == "beta")
            fits = &fits_for(spec.fit_depth, spec.seasonal_all, spec.seasonal_ids);
        sr.result =
            backtest::run(spec, market, cot, config.costs, fits, config.threads);
        out.strategies.push_back(std::move(sr));

        if (!spec.timed) continue;
        if (out.dispersion.size() < 2)
            throw ConfigError("timing overlay needs the fitted dispersion series");
        const auto& base = out.strategies.back();
        StrategyRun timed;
        timed.spec = spec;
        timed.label = base.label + "_timed";
        if (!labels.insert(timed.label).second)
            throw ConfigError("duplicate strategy label '" + timed.label + "'");
        timed.result.gross = portfolio::timed_returns(base.result.gross,
                                                      out.dispersion,
                                                      config.timing);
        for (int s = 0; s < 3; ++s)
            timed.result.net[std::size_t(s)] = portfolio::timed_returns(
                base.result.net[std::size_t(s)], out.dispersion, config.timing);
        timed.leverage = portfolio::timing_leverage(base.result.gross,
                                                    out.dispersion, config.timing);
        // Turnover and flags pass through on the surviving dates.
        std::size_t k = 0;
        for (const auto& d : timed.result.gross.dates) {
            while (k < base.result.gross.size() && base.result.gross.dates[k] < d)
                ++k;
            if (k == base.result.gross.size() || base.result.gross.dates[k] != d)
                throw NumericError("timed series date " + d.to_string() +
                                   " missing from the base strategy");
            timed.result.turnover.push_back(base.result.turnover[k]);
            timed.result.flags.push_back(base.result.flags[k]);
        }
        out.strategies.push_back(std::move(timed));
    }
    return out;
}

namespace {

std::vector<report::StrategyTable> to_tables(const RunOutputs& outputs) {
    std::vector<report::StrategyTable> tables;
    for (const auto& sr : outputs.strategies)
        tables.push_back({sr.label, sr.result, sr.leverage});
    return tables;
}

}  // namespace

void write_run(const RunConfig& config, const RunOutputs& outputs) {
    const fs::path out_dir(config.out_dir);
    const fs::path results = out_dir / "results";
    const fs::path tables = out_dir / "tables";
    fs::create_directories(results);
    fs::create_directories(tables);

    nlohmann::ordered_json meta;
    meta["strategies"] = nlohmann::ordered_json::array();
    meta["timed"] = nlohmann::ordered_json::array();
    for (const auto& sr : outputs.strategies) {
        meta["strategies"].push_back(sr.label);
        backtest::write_backtest_csv(sr.result,
                                     (results / (sr.label + ".csv")).string());
        if (!sr.leverage.empty()) {
            meta["timed"].push_back(sr.label);
            write_series_csv(sr.leverage,
                             (results / ("leverage_" + sr.label + ".csv")).string());
        }
    }
    if (!outputs.indicator.empty())
        write_series_csv(outputs.indicator, (results / "indicator.csv").string());
    if (!outputs.dispersion.empty())
        write_series_csv(outputs.dispersion, (results / "dispersion.csv").string());
    if (!outputs.risk_free.empty())
        write_series_csv(outputs.risk_free, (results / "risk_free.csv").string());

    meta["stats"] = {{"days_per_year", config.stats.n_per_year},
                     {"gamma", config.stats.gamma},
                     {"nw_lag", config.stats.nw_lag},
                     {"adjusted_moments", config.stats.adjusted_moments},
                     {"spanning_monthly", config.stats.spanning_monthly}};
    meta["cuts"] = nlohmann::ordered_json::array();
    for (const auto& c : config.stats.subsample_cuts)
        meta["cuts"].push_back(c.to_string());
    {
        std::ofstream out(results / "meta.json");
        if (!out) throw DataError("cannot write run metadata");
        out << meta.dump(2) << '\n';
    }

    report::write_tables(tables.string(), to_tables(outputs),
                         outputs.indicator.empty() ? nullptr : &outputs.indicator,
                         outputs.risk_free.empty() ? nullptr : &outputs.risk_free,
                         config.stats);
}

void regenerate_reports(const std::string& run_dir) {
    const fs::path results = fs::path(run_dir) / "results";
    const fs::path meta_path = results / "meta.json";
    if (!fs::exists(meta_path))
        throw DataError("no persisted results under '" + run_dir + "'");
    std::ifstream in(meta_path);
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const std::exception& e) {
        throw DataError("bad run metadata: " + std::string(e.what()));
    }

    report::TableConfig config;
    if (meta.contains("stats")) {
        const auto& s = meta["stats"];
        config.n_per_year = s.value("days_per_year", config.n_per_year);
        config.gamma = s.value("gamma", config.gamma);
        config.nw_lag = s.value("nw_lag", config.nw_lag);
        config.adjusted_moments =
            s.value("adjusted_moments", config.adjusted_moments);
        config.spanning_monthly =
            s.value("spanning_monthly", config.spanning_monthly);
    }
    if (meta.contains("cuts"))
        for (const auto& c : meta["cuts"])
            config.subsample_cuts.push_back(Date::parse(c.get<std::string>()));

    std::vector<report::StrategyTable> tables;
    for (const auto& name : meta.at("strategies")) {
        report::StrategyTable table;
        table.name = name.get<std::string>();
        table.result = backtest::read_backtest_csv(
            (results / (table.name + ".csv")).string());
        const fs::path lev = results / ("leverage_" + table.name + ".csv");
        if (fs::exists(lev)) table.leverage = read_series_csv(lev.string());
        tables.push_back(std::move(table));
    }

    ReturnSeries indicator, risk_free;
    if (fs::exists(results / "indicator.csv"))
        indicator = read_series_csv((results / "indicator.csv").string());
    if (fs::exists(results / "risk_free.csv"))
        risk_free = read_series_csv((results / "risk_free.csv").string());

    const fs::path tables_dir = fs::path(run_dir) / "tables";
    fs::create_directories(tables_dir);
    report::write_tables(tables_dir.string(), tables,
                         indicator.empty() ? nullptr : &indicator,
                         risk_free.empty() ? nullptr : &risk_free, config);
}

void write_fit(const RunConfig& config) {
    std::vector<marketdata::CotSeries> cot;
    const auto market = backtest::apply_filters(load_market(config, cot),
                                                config.filters);
    const auto panel = nscurve::fit_panel(market, config.fit_depth, {},
                                          config.fit_seasonal_ids, config.threads);
    fs::create_directories(config.out_dir);
    nscurve::write_fit_csv(panel,
                           (fs::path(config.out_dir) / "fits.csv").string());
}

}  // namespace nsdyn::pipeline
