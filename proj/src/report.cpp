#include "nsdyn/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>

#include "nsdyn/csv.hpp"
#include "nsdyn/errors.hpp"

namespace nsdyn::report {

namespace {

std::ofstream open_table(const std::string& dir, const char* file) {
    const std::string path = dir + "/" + file;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

std::string fmt(double v) { return csv::format_double(v); }

ReturnSeries slice(const ReturnSeries& s, const std::optional<Date>& after,
                   const std::optional<Date>& until) {
    ReturnSeries out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (after && !(*after < s.dates[i])) continue;
        if (until && *until < s.dates[i]) continue;
        out.dates.push_back(s.dates[i]);
        out.values.push_back(s.values[i]);
    }
    return out;
}

struct Segment {
    std::string label;
    std::optional<Date> after;  // exclusive
    std::optional<Date> until;  // inclusive
};

std::vector<Segment> segments(const std::vector<Date>& cuts) {
    std::vector<Segment> out;
    out.push_back({"full", {}, {}});
    if (cuts.empty()) return out;
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        Segment seg;
        seg.until = cuts[i];
        if (i == 0) {
            seg.label = "until_" + cuts[i].to_string();
        } else {
            seg.after = cuts[i - 1];
            seg.label = cuts[i - 1].to_string() + "_to_" + cuts[i].to_string();
        }
        out.push_back(seg);
    }
    out.push_back({"after_" + cuts.back().to_string(), cuts.back(), {}});
    return out;
}

void write_summary(const std::string& dir,
                   const std::vector<StrategyTable>& strategies,
                   const TableConfig& config) {
    auto out = open_table(dir, "summary.csv");
    out << "strategy,basis,sample,n_obs,ann_mean_geometric,ann_mean_arithmetic,"
           "ann_volatility,ann_downside_volatility,sharpe,sharpe_geometric,"
           "sortino,omega,skewness,excess_kurtosis,var99_cornish_fisher,"
           "pct_positive_months,max_drawdown,cer,degenerate\n";
    const auto segs = segments(config.subsample_cuts);
    const char* basis_names[4] = {"gross", "net_tc1", "net_tc2", "net_tc3"};
    for (const auto& strat : strategies) {
        const ReturnSeries* bases[4] = {&strat.result.gross, &strat.result.net[0],
                                        &strat.result.net[1], &strat.result.net[2]};
        for (int b = 0; b < 4; ++b) {
            for (const auto& seg : segs) {
                const ReturnSeries r = slice(*bases[b], seg.after, seg.until);
                if (r.empty() && seg.label != "full") continue;
                const auto s = perfstats::summarize(r, config.n_per_year,
                                                    config.gamma,
                                                    config.adjusted_moments);
                out << strat.name << ',' << basis_names[b] << ',' << seg.label
                    << ',' << s.n_obs << ',' << fmt(s.ann_mean_geometric) << ','
                    << fmt(s.ann_mean_arithmetic) << ',' << fmt(s.ann_volatility)
                    << ',' << fmt(s.ann_downside_volatility) << ','
                    << fmt(s.sharpe) << ',' << fmt(s.sharpe_geometric) << ','
                    << fmt(s.sortino) << ',' << fmt(s.omega) << ','
                    << fmt(s.skewness) << ',' << fmt(s.excess_kurtosis) << ','
                    << fmt(s.var99_cornish_fisher) << ','
                    << fmt(s.pct_positive_months) << ',' << fmt(s.max_drawdown)
                    << ',' << fmt(s.cer) << ',' << (s.degenerate_ratios ? 1 : 0)
                    << '\n';
            }
        }
    }
}

void write_turnover(const std::string& dir,
                    const std::vector<StrategyTable>& strategies,
                    const TableConfig& config) {
    auto out = open_table(dir, "turnover.csv");
    out << "strategy,n_obs,mean_turnover,ann_gross,ann_net_tc1,ann_net_tc2,"
           "ann_net_tc3,ann_cost_tc1,ann_cost_tc2,ann_cost_tc3\n";
    const double n = config.n_per_year;
    for (const auto& strat : strategies) {
        const double gross = mean(strat.result.gross.values);
        out << strat.name << ',' << strat.result.gross.size() << ','
            << fmt(mean(strat.result.turnover)) << ',' << fmt(n * gross);
        std::string costs;
        for (int s = 0; s < 3; ++s) {
            const double net = mean(strat.result.net[std::size_t(s)].values);
            out << ',' << fmt(n * net);
            costs += ',' + fmt(n * (gross - net));
        }
        out << costs << '\n';
    }
}

// Inner join of the named series onto their common dates.
perfstats::RegressorTable join_series(
    const std::vector<const StrategyTable*>& others) {
    perfstats::RegressorTable table;
    std::map<Date, std::vector<double>> rows;
    std::map<Date, std::size_t> seen;
    for (std::size_t k = 0; k < others.size(); ++k) {
        table.names.push_back(others[k]->name);
        const auto& s = others[k]->result.net[0];
        for (std::size_t i = 0; i < s.size(); ++i) {
            auto it = seen.try_emplace(s.dates[i], 0).first;
            if (it->second != k) continue;  // missing in an earlier series
            ++it->second;
            rows[s.dates[i]].push_back(s.values[i]);
        }
    }
    for (const auto& [d, row] : rows) {
        if (row.size() != others.size()) continue;
        table.dates.push_back(d);
    }
    table.x.resize(static_cast<Eigen::Index>(table.dates.size()),
                   static_cast<Eigen::Index>(others.size()));
    Eigen::Index r = 0;
    for (const auto& [d, row] : rows) {
        if (row.size() != others.size()) continue;
        for (std::size_t c = 0; c < row.size(); ++c)
            table.x(r, static_cast<Eigen::Index>(c)) = row[c];
        ++r;
    }
    return table;
}

void write_spanning(const std::string& dir,
                    const std::vector<StrategyTable>& strategies,
                    const TableConfig& config) {
    auto out = open_table(dir, "spanning.csv");
    out << "strategy,term,estimate,se,tstat\n";
    if (strategies.size() < 2) return;
    const double periods = config.spanning_monthly ? 12.0 : config.n_per_year;
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        std::vector<const StrategyTable*> others;
        for (std::size_t j = 0; j < strategies.size(); ++j)
            if (j != i) others.push_back(&strategies[j]);
        const auto table = join_series(others);
        perfstats::RegressionReport rep;
        try {
            rep = perfstats::spanning(strategies[i].result.net[0], table,
                                      config.spanning_monthly, config.nw_lag);
        } catch (const std::exception&) {
            continue;  // too few overlapping months or collinear factors
        }
        out << strategies[i].name << ",alpha_ann," << fmt(rep.alpha_annualized)
            << ',' << fmt(rep.se(0) * periods) << ',' << fmt(rep.tstat(0))
            << '\n';
        for (std::size_t k = 1; k < rep.names.size(); ++k) {
            const auto idx = static_cast<Eigen::Index>(k);
            out << strategies[i].name << ',' << rep.names[k] << ','
                << fmt(rep.coef(idx)) << ',' << fmt(rep.se(idx)) << ','
                << fmt(rep.tstat(idx)) << '\n';
        }
        out << strategies[i].name << ",adj_r2," << fmt(rep.adj_r2) << ",,\n";
    }
}

void write_conditional(const std::string& dir,
                       const std::vector<StrategyTable>& strategies,
                       const ReturnSeries* indicator,
                       const TableConfig& config) {
    auto out = open_table(dir, "conditional.csv");
    out << "strategy,side,n_obs,ann_mean_arithmetic,ann_volatility,sharpe,"
           "diff_tstat,one_sided\n";
    if (!indicator || indicator->empty()) return;
    for (const auto& strat : strategies) {
        perfstats::ConditionalPerf cp;
        try {
            cp = perfstats::conditional_perf(strat.result.gross, *indicator,
                                             config.n_per_year);
        } catch (const std::exception&) {
            continue;
        }
        const perfstats::PerfSummary* sides[2] = {&cp.high, &cp.low};
        const char* side_names[2] = {"high", "low"};
        for (int s = 0; s < 2; ++s)
            out << strat.name << ',' << side_names[s] << ',' << sides[s]->n_obs
                << ',' << fmt(sides[s]->ann_mean_arithmetic) << ','
                << fmt(sides[s]->ann_volatility) << ',' << fmt(sides[s]->sharpe)
                << ',' << fmt(cp.diff_tstat) << ',' << (cp.one_sided ? 1 : 0)
                << '\n';
    }
}

void write_weekday(const std::string& dir,
                   const std::vector<StrategyTable>& strategies,
                   const TableConfig& config) {
    auto out = open_table(dir, "weekday.csv");
    out << "strategy,weekday,n_obs,ann_mean,tstat\n";
    for (const auto& strat : strategies)
        for (const auto& row :
             perfstats::weekday_perf(strat.result.gross, config.n_per_year))
            out << strat.name << ',' << row.weekday << ',' << row.n_obs << ','
                << fmt(row.ann_mean) << ',' << fmt(row.tstat) << '\n';
}

void write_curves(const std::string& dir, const char* file,
                  const std::vector<std::string>& names,
                  const std::vector<ReturnSeries>& curves) {
    auto out = open_table(dir, file);
    out << "date";
    for (const auto& name : names) out << ',' << name;
    out << '\n';
    std::vector<Date> all;
    for (const auto& c : curves) all.insert(all.end(), c.dates.begin(), c.dates.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::vector<std::size_t> pos(curves.size(), 0);
    for (const auto& d : all) {
        out << d.to_string();
        for (std::size_t c = 0; c < curves.size(); ++c) {
            while (pos[c] < curves[c].size() && curves[c].dates[pos[c]] < d)
                ++pos[c];
            const bool at = pos[c] < curves[c].size() && curves[c].dates[pos[c]] == d;
            // Forward-fill once a curve has started; blank before that.
            if (at)
                out << ',' << fmt(curves[c].values[pos[c]]);
            else if (pos[c] > 0)
                out << ',' << fmt(curves[c].values[pos[c] - 1]);
            else
                out << ',';
        }
        out << '\n';
    }
}

}  // namespace

void write_tables(const std::string& dir,
                  const std::vector<StrategyTable>& strategies,
                  const ReturnSeries* indicator, const ReturnSeries* risk_free,
                  const TableConfig& config) {
    write_summary(dir, strategies, config);
    write_turnover(dir, strategies, config);
    write_spanning(dir, strategies, config);
    write_conditional(dir, strategies, indicator, config);
    write_weekday(dir, strategies, config);

    std::vector<std::string> names;
    std::vector<ReturnSeries> wealth;
    for (const auto& strat : strategies) {
        names.push_back(strat.name);
        wealth.push_back(perfstats::wealth_curve(strat.result.gross, risk_free));
    }
    write_curves(dir, "wealth.csv", names, wealth);

    std::vector<std::string> lev_names;
    std::vector<ReturnSeries> lev;
    for (const auto& strat : strategies) {
        if (strat.leverage.empty()) continue;
        lev_names.push_back(strat.name);
        lev.push_back(strat.leverage);
    }
    if (!lev.empty()) write_curves(dir, "leverage.csv", lev_names, lev);
}

}  // namespace nsdyn::report
