#include "nsdyn/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nsdyn/csv.hpp"
#include "nsdyn/errors.hpp"

namespace nsdyn::portfolio {

Geometry geometry_for(Family family) {
    switch (family) {
        case Family::L:
        case Family::LAVG:
        case Family::Factor:
            return Geometry::OutrightFront;
        case Family::S:
        case Family::SAVG:
            return Geometry::SlopeSpread;
        case Family::C:
        case Family::CAVG:
            return Geometry::Butterfly;
    }
    throw ConfigError("unknown strategy family");
}

Family parse_family(const std::string& name) {
    if (name == "L") return Family::L;
    if (name == "S") return Family::S;
    if (name == "C") return Family::C;
    if (name == "LAVG") return Family::LAVG;
    if (name == "SAVG") return Family::SAVG;
    if (name == "CAVG") return Family::CAVG;
    if (name == "factor" || name == "Factor") return Family::Factor;
    throw ConfigError("unknown strategy family '" + name + "'");
}

std::string to_string(Family family) {
    switch (family) {
        case Family::L: return "L";
        case Family::S: return "S";
        case Family::C: return "C";
        case Family::LAVG: return "LAVG";
        case Family::SAVG: return "SAVG";
        case Family::CAVG: return "CAVG";
        case Family::Factor: return "factor";
    }
    throw ConfigError("unknown strategy family");
}

namespace {

/// Adds one commodity's spread at the given capital; the capital is the
/// commodity's share of gross exposure, split across contract legs.
void add_spread(std::vector<BookEntry>& entries, const std::string& id,
                Geometry geometry, double capital, bool long_spread,
                bool long_leg) {
    double sign = long_spread ? 1.0 : -1.0;
    switch (geometry) {
        case Geometry::OutrightFront:
            entries.push_back({id, 1, sign * capital, long_leg});
            break;
        case Geometry::SlopeSpread:
            entries.push_back({id, 1, sign * capital / 2.0, long_leg});
            entries.push_back({id, 4, -sign * capital / 2.0, long_leg});
            break;
        case Geometry::Butterfly:
            entries.push_back({id, 1, -sign * capital / 4.0, long_leg});
            entries.push_back({id, 2, sign * capital / 2.0, long_leg});
            entries.push_back({id, 4, -sign * capital / 4.0, long_leg});
            break;
    }
}

}  // namespace

WeightBook build_cs_book(const signals::SignalPanel& signal, Family family) {
    if (family != Family::L && family != Family::S && family != Family::C)
        throw ConfigError("cross-sectional books are for the L/S/C families");
    WeightBook book;
    book.name = signal.kind + "_cs";
    book.geometry = geometry_for(family);

    const auto& panel = signal.values;
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        std::vector<std::size_t> longs, shorts;
        for (std::size_t c = 0; c < panel.cols(); ++c) {
            if (!panel.has(r, c)) continue;
            double v = panel.at(r, c);
            if (v > 0) {
                longs.push_back(c);
            } else if (family == Family::L) {
                if (v < 0) shorts.push_back(c);  // zeros excluded for L
            } else {
                shorts.push_back(c);  // "remaining" includes zeros for S and C
            }
        }
        if (longs.empty() && shorts.empty()) continue;

        BookDay day;
        day.date = panel.dates()[r];
        day.degenerate = longs.empty() || shorts.empty();
        for (std::size_t c : longs)
            add_spread(day.entries, panel.ids()[c], book.geometry,
                       0.5 / double(longs.size()), true, true);
        for (std::size_t c : shorts)
            add_spread(day.entries, panel.ids()[c], book.geometry,
                       0.5 / double(shorts.size()), false, false);
        book.days.push_back(std::move(day));
    }
    return book;
}

WeightBook build_ts_book(const signals::SignalPanel& signal, Family family) {
    if (family != Family::L && family != Family::S && family != Family::C)
        throw ConfigError("time-series books are for the L/S/C families");
    WeightBook book;
    book.name = signal.kind + "_ts";
    book.geometry = geometry_for(family);

    const auto& panel = signal.values;
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        std::vector<std::pair<std::size_t, bool>> active;  // (col, long?)
        bool any_signal = false;
        for (std::size_t c = 0; c < panel.cols(); ++c) {
            if (!panel.has(r, c)) continue;
            any_signal = true;
            double v = panel.at(r, c);
            if (v > 0)
                active.push_back({c, true});
            else if (v < 0)
                active.push_back({c, false});
            // zero signals are skipped; capital renormalizes over the rest
        }
        if (!any_signal) continue;

        BookDay day;
        day.date = panel.dates()[r];
        day.degenerate = active.empty();
        for (const auto& [c, is_long] : active)
            add_spread(day.entries, panel.ids()[c], book.geometry,
                       1.0 / double(active.size()), is_long, is_long);
        book.days.push_back(std::move(day));
    }
    return book;
}

WeightBook build_naive_book(Family kind, const marketdata::Market& market) {
    if (kind != Family::LAVG && kind != Family::SAVG && kind != Family::CAVG)
        throw ConfigError("naive books are LAVG, SAVG or CAVG");
    WeightBook book;
    book.name = kind == Family::LAVG   ? "LAVG"
                : kind == Family::SAVG ? "SAVG"
                                       : "CAVG";
    book.geometry = geometry_for(kind);
    int depth = book.geometry == Geometry::OutrightFront ? 1 : 4;

    for (std::size_t r = 0; r < market.calendar.size(); ++r) {
        const Date& d = market.calendar[r];
        std::vector<std::size_t> members;
        for (std::size_t c = 0; c < market.chains.size(); ++c)
            if (marketdata::snapshot(market.chains[c], market.schedules[c], d,
                                     depth))
                members.push_back(c);
        if (members.empty()) continue;
        BookDay day;
        day.date = d;
        for (std::size_t c : members)
            add_spread(day.entries, market.chains[c].commodity_id,
                       book.geometry, 1.0 / double(members.size()), true, true);
        book.days.push_back(std::move(day));
    }
    return book;
}

WeightBook build_factor_book(const signals::SignalPanel& characteristic,
                             bool long_high) {
    WeightBook book;
    book.name = characteristic.kind + "_factor";
    book.geometry = Geometry::OutrightFront;
    book.monthly = true;

    const auto& panel = characteristic.values;
    auto ends = month_end_mask(panel.dates());
    // Last observed value per commodity within the month, sampled month-end.
    std::vector<double> latest(panel.cols(), kNaN);
    int current_month =
        panel.rows() ? panel.dates()[0].month_index() : 0;
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        if (panel.dates()[r].month_index() != current_month) {
            std::fill(latest.begin(), latest.end(), kNaN);
            current_month = panel.dates()[r].month_index();
        }
        for (std::size_t c = 0; c < panel.cols(); ++c)
            if (panel.has(r, c)) latest[c] = panel.at(r, c);
        if (!ends[r]) continue;

        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t c = 0; c < panel.cols(); ++c)
            if (!std::isnan(latest[c])) ranked.push_back({latest[c], c});

        BookDay day;
        day.date = panel.dates()[r];
        if (ranked.size() >= 2) {
            std::sort(ranked.begin(), ranked.end(),
                      [&](const auto& a, const auto& b) {
                          if (a.first != b.first)
                              return long_high ? a.first > b.first
                                               : a.first < b.first;
                          return panel.ids()[a.second] < panel.ids()[b.second];
                      });
            std::size_t n = ranked.size();
            std::size_t n_long = (n + 1) / 2;  // odd cross-section: extra long
            std::size_t n_short = n - n_long;
            for (std::size_t i = 0; i < n; ++i) {
                bool is_long = i < n_long;
                double w = is_long ? 0.5 / double(n_long)
                                   : -0.5 / double(n_short);
                day.entries.push_back(
                    {panel.ids()[ranked[i].second], 1, w, is_long});
            }
        }
        // Fewer than two names: the month is empty (all cash). Leading empty
        // months are dropped so the series starts when the factor exists.
        if (!day.entries.empty() || !book.days.empty())
            book.days.push_back(std::move(day));
    }
    return book;
}

double dispersion(const nscurve::FitPanel& fits, const Date& date) {
    int row = fits.beta_slope.row_of(date);
    if (row < 0) return kNaN;
    std::vector<double> values;
    for (std::size_t c = 0; c < fits.ids.size(); ++c)
        if (fits.beta_slope.has(std::size_t(row), c))
            values.push_back(fits.beta_slope.at(std::size_t(row), c));
    if (values.size() < 2) return kNaN;
    return sample_sd(values);
}

ReturnSeries dispersion_series(const nscurve::FitPanel& fits) {
    ReturnSeries out;
    for (std::size_t r = 0; r < fits.dates.size(); ++r) {
        std::vector<double> values;
        for (std::size_t c = 0; c < fits.ids.size(); ++c)
            if (fits.beta_slope.has(r, c))
                values.push_back(fits.beta_slope.at(r, c));
        if (values.size() < 2) continue;
        out.dates.push_back(fits.dates[r]);
        out.values.push_back(sample_sd(values));
    }
    return out;
}

namespace {

/// sigma_hat per base date: mean of the last `d` dispersion values strictly
/// before the return date; NaN when the window is incomplete.
std::vector<double> trailing_dispersion(const ReturnSeries& base,
                                        const ReturnSeries& dispersions,
                                        int d) {
    std::vector<double> sig(base.size(), kNaN);
    for (std::size_t i = 0; i < base.size(); ++i) {
        auto it = std::lower_bound(dispersions.dates.begin(),
                                   dispersions.dates.end(), base.dates[i]);
        long have = it - dispersions.dates.begin();
        if (have < d) continue;
        double sum = 0.0;
        for (long j = have - d; j < have; ++j)
            sum += dispersions.values[std::size_t(j)];
        sig[i] = sum / double(d);
    }
    return sig;
}

double sd_of(const std::vector<double>& x) {
    if (x.size() < 2) return kNaN;
    double m = 0.0;
    for (double v : x) m += v;
    m /= double(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / double(x.size() - 1));
}

}  // namespace

ReturnSeries timed_returns(const ReturnSeries& base,
                           const ReturnSeries& dispersions,
                           const TimingConfig& config, double* c_out) {
    if (config.d < 1) throw ConfigError("timing window must be >= 1");
    std::vector<double> sig = trailing_dispersion(base, dispersions, config.d);

    ReturnSeries out;
    if (!config.expanding) {
        std::vector<double> r, scaled;
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (std::isnan(sig[i])) continue;
            r.push_back(base.values[i]);
            scaled.push_back(sig[i] * base.values[i]);
        }
        double sd_r = sd_of(r);
        double sd_scaled = sd_of(scaled);
        if (!(sd_r > 0) || !(sd_scaled > 0))
            throw NumericError("timing calibration needs non-constant returns");
        double c = sd_scaled / sd_r;
        if (c_out) *c_out = c;
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (std::isnan(sig[i])) continue;
            out.dates.push_back(base.dates[i]);
            out.values.push_back(sig[i] / c * base.values[i]);
        }
        return out;
    }

    // Expanding calibration: c_t uses data through day t only.
    std::vector<double> r, scaled;
    double last_c = kNaN;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (std::isnan(sig[i])) continue;
        r.push_back(base.values[i]);
        scaled.push_back(sig[i] * base.values[i]);
        double sd_r = sd_of(r);
        double sd_scaled = sd_of(scaled);
        if (!(sd_r > 0) || !(sd_scaled > 0)) continue;
        double c = sd_scaled / sd_r;
        last_c = c;
        out.dates.push_back(base.dates[i]);
        out.values.push_back(sig[i] / c * base.values[i]);
    }
    if (c_out) *c_out = last_c;
    return out;
}

ReturnSeries timing_leverage(const ReturnSeries& base,
                             const ReturnSeries& dispersions,
                             const TimingConfig& config) {
    double c = kNaN;
    ReturnSeries timed = timed_returns(base, dispersions, config, &c);
    std::vector<double> sig = trailing_dispersion(base, dispersions, config.d);
    ReturnSeries out;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (std::isnan(sig[i])) continue;
        out.dates.push_back(base.dates[i]);
        out.values.push_back(sig[i] / c);
    }
    return out;
}

ReturnSeries blend(const ReturnSeries& a, const ReturnSeries& b) {
    ReturnSeries out;
    std::size_t ia = 0, ib = 0;
    double va = 0.5, vb = 0.5;
    while (ia < a.size() && ib < b.size()) {
        if (a.dates[ia] < b.dates[ib]) {
            ++ia;
            continue;
        }
        if (b.dates[ib] < a.dates[ia]) {
            ++ib;
            continue;
        }
        double ra = a.values[ia];
        double rb = b.values[ib];
        double total = va + vb;
        out.dates.push_back(a.dates[ia]);
        out.values.push_back((va * ra + vb * rb) / total);
        va *= 1.0 + ra;
        vb *= 1.0 + rb;

        // Month-end close relative to the blended calendar: reset to 50/50.
        Date cur = a.dates[ia];
        std::size_t ja = ia + 1, jb = ib + 1;
        Date next;
        bool have_next = false;
        while (ja < a.size() && jb < b.size()) {
            if (a.dates[ja] < b.dates[jb]) {
                ++ja;
            } else if (b.dates[jb] < a.dates[ja]) {
                ++jb;
            } else {
                next = a.dates[ja];
                have_next = true;
                break;
            }
        }
        if (!have_next || next.month_index() != cur.month_index()) {
            double half = (va + vb) / 2.0;
            va = half;
            vb = half;
        }
        ++ia;
        ++ib;
    }
    return out;
}

void write_book_csv(const WeightBook& book, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "date,commodity,location,weight,leg\n";
    for (const auto& day : book.days)
        for (const auto& e : day.entries)
            out << day.date.to_string() << ',' << e.commodity_id << ','
                << e.location << ',' << csv::format_double(e.weight) << ','
                << (e.long_leg ? "long" : "short") << '\n';
}

}  // namespace nsdyn::portfolio
