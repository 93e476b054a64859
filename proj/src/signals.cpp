#include "nsdyn/signals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "nsdyn/csv.hpp"
#include "nsdyn/errors.hpp"

namespace nsdyn::signals {

namespace {

SeriesPanel blank_like(const marketdata::Market& market) {
    std::vector<std::string> ids;
    ids.reserve(market.chains.size());
    for (const auto& chain : market.chains) ids.push_back(chain.commodity_id);
    return SeriesPanel(market.calendar, ids);
}

/// Price of the location-k contract of chain c on calendar row r, or NaN.
double location_price(const marketdata::Market& market, std::size_t c,
                      const Date& d, int loc) {
    const auto& sched = market.schedules[c];
    int ci = sched.contract_at(d, loc);
    if (ci < 0) return kNaN;
    auto px = market.chains[c].contracts[std::size_t(ci)].settle_at(d);
    return px ? *px : kNaN;
}

}  // namespace

SignalPanel delta_beta(const nscurve::FitPanel& fits, Beta which) {
    const SeriesPanel* source = nullptr;
    std::string kind;
    switch (which) {
        case Beta::Level:
            source = &fits.beta_level;
            kind = "dBetaL";
            break;
        case Beta::Slope:
            source = &fits.beta_slope;
            kind = "dBetaS";
            break;
        case Beta::Curvature:
            source = &fits.beta_curvature;
            kind = "dBetaC";
            break;
    }
    SignalPanel out{kind, SeriesPanel(fits.dates, fits.ids)};
    for (std::size_t c = 0; c < fits.ids.size(); ++c)
        for (std::size_t r = 1; r < fits.dates.size(); ++r)
            if (source->has(r, c) && source->has(r - 1, c))
                out.values.at(r, c) = source->at(r, c) - source->at(r - 1, c);
    return out;
}

SignalPanel smooth(const SignalPanel& panel, int window) {
    if (window < 1) throw ConfigError("smoothing window must be >= 1");
    SignalPanel out{panel.kind + "_ma" + std::to_string(window),
                    SeriesPanel(panel.values.dates(), panel.values.ids())};
    std::size_t w = std::size_t(window);
    for (std::size_t c = 0; c < panel.values.cols(); ++c) {
        for (std::size_t r = w - 1; r < panel.values.rows(); ++r) {
            double sum = 0.0;
            bool complete = true;
            for (std::size_t j = r + 1 - w; j <= r; ++j) {
                if (!panel.values.has(j, c)) {
                    complete = false;
                    break;
                }
                sum += panel.values.at(j, c);
            }
            if (complete) out.values.at(r, c) = sum / double(w);
        }
    }
    return out;
}

SignalPanel slope_diff(const marketdata::Market& market) {
    SignalPanel out{"dS", blank_like(market)};
    for (std::size_t c = 0; c < market.chains.size(); ++c) {
        for (std::size_t r = 1; r < market.calendar.size(); ++r) {
            double f1 = location_price(market, c, market.calendar[r], 1);
            double f4 = location_price(market, c, market.calendar[r], 4);
            double p1 = location_price(market, c, market.calendar[r - 1], 1);
            double p4 = location_price(market, c, market.calendar[r - 1], 4);
            if (std::isnan(f1) || std::isnan(f4) || std::isnan(p1) ||
                std::isnan(p4))
                continue;
            out.values.at(r, c) = (f1 - f4) - (p1 - p4);
        }
    }
    return out;
}

SignalPanel pca_slope(const marketdata::Market& market, int window) {
    if (window < 2) throw ConfigError("pca window must be >= 2");
    SignalPanel out{"dPC2", blank_like(market)};
    const std::size_t w = std::size_t(window);
    const int locs = 4;
    for (std::size_t c = 0; c < market.chains.size(); ++c) {
        for (std::size_t r = w - 1; r < market.calendar.size(); ++r) {
            Eigen::MatrixXd prices(Eigen::Index(w), locs);
            bool complete = true;
            for (std::size_t j = 0; j < w && complete; ++j) {
                const Date& d = market.calendar[r + 1 - w + j];
                for (int loc = 1; loc <= locs; ++loc) {
                    double px = location_price(market, c, d, loc);
                    if (std::isnan(px)) {
                        complete = false;
                        break;
                    }
                    prices(Eigen::Index(j), loc - 1) = px;
                }
            }
            if (!complete) continue;

            Eigen::RowVectorXd mean = prices.colwise().mean();
            Eigen::MatrixXd centered = prices.rowwise() - mean;
            Eigen::MatrixXd cov =
                centered.transpose() * centered / double(w - 1);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
            if (eig.info() != Eigen::Success) continue;
            const auto& values = eig.eigenvalues();  // ascending
            double scale = values(locs - 1);
            if (!(scale > 0)) continue;
            // Second component must be separated from both neighbours, else
            // its direction is not identified.
            if ((values(locs - 1) - values(locs - 2)) <= 1e-12 * scale) continue;
            if ((values(locs - 2) - values(locs - 3)) <= 1e-12 * scale) continue;
            Eigen::VectorXd v = eig.eigenvectors().col(locs - 2);
            double spread = v(0) - v(locs - 1);
            if (spread == 0.0) continue;
            if (spread < 0) v = -v;

            Eigen::VectorXd diff =
                (prices.row(Eigen::Index(w - 1)) - prices.row(Eigen::Index(w - 2)))
                    .transpose();
            out.values.at(r, c) = v.dot(diff);
        }
    }
    return out;
}

SignalPanel roll_yield(const marketdata::Market& market, int k) {
    if (k < 2) throw ConfigError("roll yield location must be >= 2");
    SignalPanel out{"RY" + std::to_string(k), blank_like(market)};
    for (std::size_t c = 0; c < market.chains.size(); ++c) {
        for (std::size_t r = 0; r < market.calendar.size(); ++r) {
            double f1 = location_price(market, c, market.calendar[r], 1);
            double fk = location_price(market, c, market.calendar[r], k);
            if (std::isnan(f1) || std::isnan(fk)) continue;
            out.values.at(r, c) = f1 / fk - 1.0;
        }
    }
    return out;
}

Characteristic parse_characteristic(const std::string& name) {
    if (name == "MOM") return Characteristic::MOM;
    if (name == "CARRY") return Characteristic::CARRY;
    if (name == "HP") return Characteristic::HP;
    if (name == "SKEW") return Characteristic::SKEW;
    if (name == "BMOM") return Characteristic::BMOM;
    if (name == "RB") return Characteristic::RB;
    if (name == "LIQ") return Characteristic::LIQ;
    if (name == "CURVEM") return Characteristic::CURVEM;
    throw ConfigError("unknown characteristic '" + name + "'");
}

std::string to_string(Characteristic kind) {
    switch (kind) {
        case Characteristic::MOM: return "MOM";
        case Characteristic::CARRY: return "CARRY";
        case Characteristic::HP: return "HP";
        case Characteristic::SKEW: return "SKEW";
        case Characteristic::BMOM: return "BMOM";
        case Characteristic::RB: return "RB";
        case Characteristic::LIQ: return "LIQ";
        case Characteristic::CURVEM: return "CURVEM";
    }
    throw ConfigError("unknown characteristic value");
}

bool sort_long_high(Characteristic kind) {
    return kind != Characteristic::SKEW && kind != Characteristic::LIQ;
}

namespace {

/// Per-month compounded return of one curve location of one chain, on the
/// chain's own calendar. A month is complete when every chain day in it has
/// a return at the location.
struct MonthlyReturns {
    std::vector<int> month_index;
    std::vector<double> value;   // NaN when incomplete
    std::vector<Date> last_day;  // chain's last trading day of the month
};

MonthlyReturns monthly_location_returns(const marketdata::LocationReturns& lr,
                                        int loc) {
    MonthlyReturns out;
    std::size_t i = 0;
    while (i < lr.dates.size()) {
        int mi = lr.dates[i].month_index();
        double growth = 1.0;
        bool complete = true;
        std::size_t j = i;
        while (j < lr.dates.size() && lr.dates[j].month_index() == mi) {
            double r = lr.ret[j][std::size_t(loc - 1)];
            if (std::isnan(r))
                complete = false;
            else
                growth *= 1.0 + r;
            ++j;
        }
        out.month_index.push_back(mi);
        out.value.push_back(complete ? growth - 1.0 : kNaN);
        out.last_day.push_back(lr.dates[j - 1]);
        i = j;
    }
    return out;
}

/// 12-month compounded growth ending at month slot m, or NaN.
double trailing_year_growth(const MonthlyReturns& mr, std::size_t m) {
    if (m + 1 < 12) return kNaN;
    if (mr.month_index[m] - mr.month_index[m - 11] != 11) return kNaN;
    double growth = 1.0;
    for (std::size_t s = m - 11; s <= m; ++s) {
        if (std::isnan(mr.value[s])) return kNaN;
        growth *= 1.0 + mr.value[s];
    }
    return growth;
}

void emit_monthly(SeriesPanel& panel, std::size_t c, const MonthlyReturns& mr,
                  const std::vector<double>& value_per_month) {
    for (std::size_t m = 0; m < mr.month_index.size(); ++m) {
        if (std::isnan(value_per_month[m])) continue;
        int row = panel.row_of(mr.last_day[m]);
        if (row >= 0) panel.at(std::size_t(row), c) = value_per_month[m];
    }
}

}  // namespace

SignalPanel characteristic(Characteristic kind,
                           const marketdata::Market& market,
                           const std::vector<marketdata::CotSeries>& cot,
                           const CharacteristicParams& params) {
    if (kind == Characteristic::CARRY) {
        SignalPanel carry = roll_yield(market, 2);
        carry.kind = "CARRY";
        return carry;
    }

    SignalPanel out{to_string(kind), blank_like(market)};

    for (std::size_t c = 0; c < market.chains.size(); ++c) {
        const auto& chain = market.chains[c];
        const auto& sched = market.schedules[c];

        switch (kind) {
            case Characteristic::MOM:
            case Characteristic::BMOM:
            case Characteristic::CURVEM: {
                int loc_b = kind == Characteristic::BMOM ? 2
                            : kind == Characteristic::CURVEM
                                ? params.curvem_location
                                : 1;
                int max_loc = std::max(1, loc_b);
                auto lr = marketdata::location_returns(chain, sched, max_loc);
                auto mr_a = monthly_location_returns(lr, 1);
                std::vector<double> values(mr_a.month_index.size(), kNaN);
                if (kind == Characteristic::MOM) {
                    for (std::size_t m = 0; m < values.size(); ++m) {
                        double g = trailing_year_growth(mr_a, m);
                        if (!std::isnan(g)) values[m] = g - 1.0;
                    }
                } else if (kind == Characteristic::BMOM) {
                    auto mr_b = monthly_location_returns(lr, 2);
                    for (std::size_t m = 0; m < values.size(); ++m) {
                        double ga = trailing_year_growth(mr_a, m);
                        double gb = trailing_year_growth(mr_b, m);
                        if (!std::isnan(ga) && !std::isnan(gb))
                            values[m] = ga - gb;
                    }
                } else {
                    auto mr_m =
                        monthly_location_returns(lr, params.curvem_location);
                    for (std::size_t m = 0; m < values.size(); ++m) {
                        double g = trailing_year_growth(mr_m, m);
                        if (!std::isnan(g)) values[m] = g - 1.0;
                    }
                }
                emit_monthly(out.values, c, mr_a, values);
                break;
            }
            case Characteristic::HP: {
                const marketdata::CotSeries* series = nullptr;
                for (const auto& s : cot)
                    if (s.commodity_id == chain.commodity_id) series = &s;
                if (!series) break;
                for (std::size_t r = 0; r < market.calendar.size(); ++r) {
                    const Date& d = market.calendar[r];
                    auto it = std::upper_bound(
                        series->rows.begin(), series->rows.end(), d,
                        [](const Date& x, const marketdata::CotRow& row) {
                            return x < row.date;
                        });
                    long have = it - series->rows.begin();
                    if (have < 52) continue;
                    double sum = 0.0;
                    bool ok = true;
                    for (long w = have - 52; w < have; ++w) {
                        const auto& row = series->rows[std::size_t(w)];
                        double denom = row.commercial_short + row.commercial_long;
                        if (denom <= 0) {
                            ok = false;
                            break;
                        }
                        sum += (row.commercial_short - row.commercial_long) /
                               denom;
                    }
                    if (ok) out.values.at(r, c) = sum / 52.0;
                }
                break;
            }
            case Characteristic::SKEW: {
                auto lr = marketdata::location_returns(chain, sched, 1);
                const int d1 = params.skew_days;
                for (std::size_t i = 0; i < lr.dates.size(); ++i) {
                    if (int(i) + 1 < d1 + 1) continue;  // first row has no return
                    bool ok = true;
                    double mean = 0.0;
                    for (int s = 0; s < d1; ++s) {
                        double r = lr.ret[i - std::size_t(s)][0];
                        if (std::isnan(r)) {
                            ok = false;
                            break;
                        }
                        mean += r;
                    }
                    if (!ok) continue;
                    mean /= double(d1);
                    double m2 = 0.0, m3 = 0.0;
                    for (int s = 0; s < d1; ++s) {
                        double x = lr.ret[i - std::size_t(s)][0] - mean;
                        m2 += x * x;
                        m3 += x * x * x;
                    }
                    m2 /= double(d1);
                    m3 /= double(d1);
                    if (m2 <= 0) continue;
                    int row = out.values.row_of(lr.dates[i]);
                    if (row >= 0)
                        out.values.at(std::size_t(row), c) =
                            m3 / std::pow(m2, 1.5);
                }
                break;
            }
            case Characteristic::RB: {
                for (std::size_t r = 0; r < market.calendar.size(); ++r) {
                    auto snap =
                        marketdata::snapshot(chain, sched, market.calendar[r], 3);
                    if (!snap) continue;
                    const auto& p = snap->points;
                    double lead = std::log(p[0].price / p[1].price) /
                                  double(p[1].maturity_days - p[0].maturity_days);
                    double back = std::log(p[1].price / p[2].price) /
                                  double(p[2].maturity_days - p[1].maturity_days);
                    out.values.at(r, c) = lead - back;
                }
                break;
            }
            case Characteristic::LIQ: {
                auto lr = marketdata::location_returns(chain, sched, 1);
                const int d2 = params.liq_days;
                for (std::size_t i = 0; i < lr.dates.size(); ++i) {
                    if (int(i) + 1 < d2 + 1) continue;
                    bool ok = true;
                    double sum = 0.0;
                    int used = 0;
                    for (int s = 0; s < d2 && ok; ++s) {
                        std::size_t j = i - std::size_t(s);
                        double r = lr.ret[j][0];
                        int ci = lr.contract[j][0];
                        if (std::isnan(r) || ci < 0) {
                            ok = false;
                            break;
                        }
                        if (r == 0.0) continue;  // zero-return days are skipped
                        const auto& contract = chain.contracts[std::size_t(ci)];
                        int rowi = contract.row_at(lr.dates[j]);
                        if (rowi < 0) {
                            ok = false;
                            break;
                        }
                        const auto& data = contract.rows[std::size_t(rowi)];
                        sum += data.volume * data.settle * chain.multiplier /
                               std::fabs(r);
                        ++used;
                    }
                    if (!ok || used == 0) continue;
                    int row = out.values.row_of(lr.dates[i]);
                    if (row >= 0)
                        out.values.at(std::size_t(row), c) = sum / double(used);
                }
                break;
            }
            case Characteristic::CARRY:
                break;  // handled above
        }
    }
    return out;
}

void write_signal_csv(const SignalPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "date,commodity,kind,value\n";
    for (std::size_t r = 0; r < panel.values.rows(); ++r)
        for (std::size_t c = 0; c < panel.values.cols(); ++c)
            if (panel.values.has(r, c))
                out << panel.values.dates()[r].to_string() << ','
                    << panel.values.ids()[c] << ',' << panel.kind << ','
                    << csv::format_double(panel.values.at(r, c)) << '\n';
}

}  // namespace nsdyn::signals
