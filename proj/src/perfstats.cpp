#include "nsdyn/perfstats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <sstream>

#include "nsdyn/errors.hpp"

namespace nsdyn::perfstats {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Bartlett-weighted long-run covariance of the rows of g (T x k), no
// degrees-of-freedom correction so lag 0 reduces to the outer-product
// (heteroskedasticity-only) estimator.
Eigen::MatrixXd bartlett_lrcov(const Eigen::MatrixXd& g, int lag) {
    const auto t = g.rows();
    const auto k = g.cols();
    if (lag >= t)
        throw ConfigError("covariance lag " + std::to_string(lag) +
                          " must be below the sample length " + std::to_string(t));
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(k, k);
    s = g.transpose() * g;
    for (int l = 1; l <= lag; ++l) {
        const double w = 1.0 - static_cast<double>(l) / (lag + 1.0);
        Eigen::MatrixXd gamma =
            g.bottomRows(t - l).transpose() * g.topRows(t - l);
        s += w * (gamma + gamma.transpose());
    }
    return s / static_cast<double>(t);
}

int auto_lag(long t) {
    return static_cast<int>(std::floor(4.0 * std::pow(t / 100.0, 2.0 / 9.0)));
}

struct Moments {
    double mean = 0, sd = 0, skew = 0, exkurt = 0;
};

Moments central_moments(const std::vector<double>& r, bool adjusted) {
    Moments m;
    const double n = static_cast<double>(r.size());
    for (double v : r) m.mean += v;
    m.mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : r) {
        const double d = v - m.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0) {
        m.skew = m3 / std::pow(m2, 1.5);
        m.exkurt = m4 / (m2 * m2) - 3.0;
        if (adjusted && r.size() > 3) {
            m.skew *= std::sqrt(n * (n - 1.0)) / (n - 2.0);
            m.exkurt = ((n + 1.0) * m.exkurt + 6.0) * (n - 1.0) /
                       ((n - 2.0) * (n - 3.0));
        }
    }
    m.sd = r.size() > 1 ? std::sqrt(m2 * n / (n - 1.0)) : 0.0;
    return m;
}

// Inner-join y onto the regressor dates; both must be sorted by date.
void align(const ReturnSeries& y, const RegressorTable& x,
           std::vector<double>& yv, Eigen::MatrixXd& xv,
           std::vector<Date>& dates) {
    std::size_t i = 0, j = 0;
    std::vector<Eigen::Index> keep;
    yv.clear();
    dates.clear();
    while (i < y.dates.size() && j < x.dates.size()) {
        if (y.dates[i] < x.dates[j]) {
            ++i;
        } else if (x.dates[j] < y.dates[i]) {
            ++j;
        } else {
            yv.push_back(y.values[i]);
            dates.push_back(y.dates[i]);
            keep.push_back(static_cast<Eigen::Index>(j));
            ++i;
            ++j;
        }
    }
    xv.resize(static_cast<Eigen::Index>(keep.size()), x.x.cols());
    for (Eigen::Index r = 0; r < xv.rows(); ++r)
        xv.row(r) = x.x.row(keep[static_cast<std::size_t>(r)]);
}

double hac_mean_tstat(const std::vector<double>& r) {
    const long t = static_cast<long>(r.size());
    if (t < 2) return kNaN;
    double mean = 0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(t);
    Eigen::MatrixXd g(t, 1);
    for (long i = 0; i < t; ++i) g(i, 0) = r[static_cast<std::size_t>(i)] - mean;
    const double lr = bartlett_lrcov(g, auto_lag(t))(0, 0);
    if (lr <= 0) return kNaN;
    return mean / std::sqrt(lr / static_cast<double>(t));
}

}  // namespace

PerfSummary summarize(const ReturnSeries& returns, int n_per_year, double gamma,
                      bool adjusted_moments) {
    const auto& r = returns.values;
    PerfSummary s;
    s.n_obs = static_cast<long>(r.size());
    if (r.empty()) return s;
    const double t = static_cast<double>(r.size());
    const double n = static_cast<double>(n_per_year);

    double log_growth = 0;
    bool busted = false;
    for (double v : r) {
        if (1.0 + v <= 0.0) busted = true;
        else log_growth += std::log1p(v);
    }
    s.ann_mean_geometric =
        busted ? -1.0 : std::expm1(log_growth * n / t);

    const Moments m = central_moments(r, adjusted_moments);
    s.ann_mean_arithmetic = n * m.mean;
    s.ann_volatility = std::sqrt(n) * m.sd;
    s.skewness = m.skew;
    s.excess_kurtosis = m.exkurt;

    double down2 = 0, up_sum = 0, down_sum = 0;
    for (double v : r) {
        down2 += std::min(v, 0.0) * std::min(v, 0.0);
        up_sum += std::max(v, 0.0);
        down_sum += std::max(-v, 0.0);
    }
    s.ann_downside_volatility = std::sqrt(n) * std::sqrt(down2 / t);
    s.omega = down_sum > 0
                  ? up_sum / down_sum
                  : (up_sum > 0 ? std::numeric_limits<double>::infinity() : kNaN);

    if (s.ann_volatility > 0) {
        s.sharpe = s.ann_mean_arithmetic / s.ann_volatility;
        s.sharpe_geometric = s.ann_mean_geometric / s.ann_volatility;
    } else {
        s.degenerate_ratios = true;
    }
    if (s.ann_downside_volatility > 0)
        s.sortino = s.ann_mean_arithmetic / s.ann_downside_volatility;

    // Cornish-Fisher quantile adjustment around the 1% normal quantile.
    {
        const double z = -2.32635;
        const double sk = m.skew, ku = m.exkurt;
        const double zcf = z + (z * z - 1.0) * sk / 6.0 +
                           (z * z * z - 3.0 * z) * ku / 24.0 -
                           (2.0 * z * z * z - 5.0 * z) * sk * sk / 36.0;
        s.var99_cornish_fisher = -(m.mean + m.sd * zcf);
    }

    if (r.size() >= 21) {
        const ReturnSeries monthly = compound_monthly(returns);
        if (!monthly.values.empty()) {
            long pos = 0;
            for (double v : monthly.values)
                if (v > 0) ++pos;
            s.pct_positive_months =
                static_cast<double>(pos) / static_cast<double>(monthly.values.size());
        }
    }

    double wealth = 1.0, peak = 1.0, mdd = 0.0;
    for (double v : r) {
        wealth *= 1.0 + v;
        peak = std::max(peak, wealth);
        mdd = std::min(mdd, wealth / peak - 1.0);
    }
    s.max_drawdown = mdd;

    if (!busted) {
        double util = 0;
        for (double v : r)
            util += (std::pow(1.0 + v, 1.0 - gamma) - 1.0) / (1.0 - gamma);
        s.cer = (n / t) * util;
    }
    return s;
}

RegressionReport nw_regression(const ReturnSeries& y, const RegressorTable& x,
                               int lag, bool intercept, int periods_per_year) {
    if (static_cast<Eigen::Index>(x.dates.size()) != x.x.rows())
        throw ConfigError("regressor table has " + std::to_string(x.dates.size()) +
                          " dates but " + std::to_string(x.x.rows()) + " rows");
    std::vector<double> yv;
    Eigen::MatrixXd xv;
    RegressionReport rep;
    align(y, x, yv, xv, rep.dates);
    const Eigen::Index t = static_cast<Eigen::Index>(yv.size());
    const Eigen::Index k = xv.cols() + (intercept ? 1 : 0);
    if (t <= k)
        throw DataError("regression needs more than " + std::to_string(k) +
                        " overlapping observations, got " + std::to_string(t));

    Eigen::MatrixXd design(t, k);
    if (intercept) {
        design.col(0).setOnes();
        design.rightCols(xv.cols()) = xv;
        rep.names.push_back("alpha");
    } else {
        design = xv;
    }
    for (const auto& nm : x.names) rep.names.push_back(nm);
    if (rep.names.size() != static_cast<std::size_t>(k))
        throw ConfigError("regressor table names do not match its column count");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        const auto perm = qr.colsPermutation().indices();
        std::ostringstream msg;
        msg << "collinear regressors:";
        for (Eigen::Index i = qr.rank(); i < k; ++i)
            msg << ' ' << rep.names[static_cast<std::size_t>(perm(i))];
        throw NumericError(msg.str());
    }

    Eigen::Map<const Eigen::VectorXd> yvec(yv.data(), t);
    rep.coef = qr.solve(yvec);
    Eigen::VectorXd resid = yvec - design * rep.coef;
    rep.residuals.assign(resid.data(), resid.data() + t);
    rep.n_obs = t;
    rep.lag = lag == kAutoLag ? auto_lag(t) : lag;
    if (rep.lag < 0) throw ConfigError("negative lag in covariance estimator");

    const double rss = resid.squaredNorm();
    double tss;
    if (intercept) {
        const double ybar = yvec.mean();
        tss = (yvec.array() - ybar).matrix().squaredNorm();
    } else {
        tss = yvec.squaredNorm();
    }
    rep.r2 = tss > 0 ? 1.0 - rss / tss : (rss > 0 ? 0.0 : 1.0);
    rep.adj_r2 = 1.0 - (1.0 - rep.r2) * (static_cast<double>(t) - 1.0) /
                           (static_cast<double>(t - k));

    Eigen::MatrixXd g = design.array().colwise() * resid.array();
    const Eigen::MatrixXd s = bartlett_lrcov(g, rep.lag);
    const Eigen::MatrixXd xtx_inv =
        (design.transpose() * design).ldlt().solve(
            Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd cov =
        static_cast<double>(t) * xtx_inv * s * xtx_inv;

    rep.se.resize(k);
    rep.tstat.resize(k);
    rep.degenerate = rss <= 0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double v = cov(i, i);
        rep.se(i) = v > 0 ? std::sqrt(v) : 0.0;
        rep.tstat(i) = rep.se(i) > 0 ? rep.coef(i) / rep.se(i) : kNaN;
    }
    if (intercept)
        rep.alpha_annualized = rep.coef(0) * static_cast<double>(periods_per_year);
    return rep;
}

RegressionReport spanning(const ReturnSeries& strategy,
                          const RegressorTable& factors, bool monthly, int lag) {
    if (!monthly) return nw_regression(strategy, factors, lag, true, 252);

    const ReturnSeries ym = compound_monthly(strategy);
    RegressorTable fm;
    fm.names = factors.names;
    std::vector<ReturnSeries> cols;
    for (Eigen::Index c = 0; c < factors.x.cols(); ++c) {
        ReturnSeries col;
        col.dates = factors.dates;
        col.values.assign(factors.x.col(c).data(),
                          factors.x.col(c).data() + factors.x.rows());
        cols.push_back(compound_monthly(col));
    }
    if (cols.empty()) throw ConfigError("spanning test needs at least one factor");
    // Re-key months by index so daily label differences cannot break the join.
    std::map<int, std::vector<double>> rows;
    for (std::size_t i = 0; i < cols[0].dates.size(); ++i) {
        bool ok = true;
        std::vector<double> row;
        const int mi = cols[0].dates[i].month_index();
        for (const auto& col : cols) {
            if (i >= col.dates.size() || col.dates[i].month_index() != mi) {
                ok = false;
                break;
            }
            row.push_back(col.values[i]);
        }
        if (ok) rows[mi] = std::move(row);
    }
    ReturnSeries y2;
    for (std::size_t i = 0; i < ym.dates.size(); ++i) {
        auto it = rows.find(ym.dates[i].month_index());
        if (it == rows.end()) continue;
        y2.dates.push_back(ym.dates[i]);
        y2.values.push_back(ym.values[i]);
        fm.dates.push_back(ym.dates[i]);
    }
    fm.x.resize(static_cast<Eigen::Index>(fm.dates.size()),
                static_cast<Eigen::Index>(cols.size()));
    for (Eigen::Index r = 0; r < fm.x.rows(); ++r) {
        const auto& row = rows.at(fm.dates[static_cast<std::size_t>(r)].month_index());
        for (Eigen::Index c = 0; c < fm.x.cols(); ++c)
            fm.x(r, c) = row[static_cast<std::size_t>(c)];
    }
    return nw_regression(y2, fm, lag, true, 12);
}

ConditionalPerf conditional_perf(const ReturnSeries& returns,
                                 const ReturnSeries& indicator, int n_per_year) {
    if (indicator.values.empty())
        throw ConfigError("conditional split needs a non-empty indicator");
    const double threshold = mean(indicator.values);

    ReturnSeries hi, lo;
    std::vector<double> joint;
    std::vector<int> is_high;
    std::size_t j = 0;
    for (std::size_t i = 0; i < returns.dates.size(); ++i) {
        while (j + 1 < indicator.dates.size() &&
               indicator.dates[j + 1] <= returns.dates[i])
            ++j;
        if (indicator.dates[j] > returns.dates[i]) continue;  // before first obs
        const bool high = indicator.values[j] >= threshold;
        auto& side = high ? hi : lo;
        side.dates.push_back(returns.dates[i]);
        side.values.push_back(returns.values[i]);
        joint.push_back(returns.values[i]);
        is_high.push_back(high ? 1 : 0);
    }
    ConditionalPerf out;
    out.high = summarize(hi, n_per_year);
    out.low = summarize(lo, n_per_year);
    out.one_sided = hi.values.empty() || lo.values.empty();
    if (!out.one_sided && joint.size() > 2) {
        // HAC t on the dummy coefficient of r_t = a + b*1{high} + u_t.
        ReturnSeries y;
        RegressorTable d;
        d.names = {"high"};
        for (std::size_t i = 0; i < joint.size(); ++i) {
            const Date dt(static_cast<int>(i));
            y.dates.push_back(dt);
            y.values.push_back(joint[i]);
            d.dates.push_back(dt);
        }
        d.x.resize(static_cast<Eigen::Index>(joint.size()), 1);
        for (std::size_t i = 0; i < joint.size(); ++i)
            d.x(static_cast<Eigen::Index>(i), 0) = is_high[i];
        const auto rep = nw_regression(y, d, kAutoLag, true, n_per_year);
        out.diff_tstat = rep.tstat(1);
    }
    return out;
}

std::vector<WeekdayRow> weekday_perf(const ReturnSeries& returns, int n_per_year) {
    std::map<int, std::vector<double>> buckets;
    for (std::size_t i = 0; i < returns.dates.size(); ++i)
        buckets[returns.dates[i].weekday()].push_back(returns.values[i]);
    std::vector<WeekdayRow> rows;
    for (const auto& [wd, vals] : buckets) {
        WeekdayRow row;
        row.weekday = wd;
        row.n_obs = static_cast<long>(vals.size());
        row.ann_mean = static_cast<double>(n_per_year) * mean(vals);
        row.tstat = hac_mean_tstat(vals);
        rows.push_back(row);
    }
    return rows;
}

ReturnSeries wealth_curve(const ReturnSeries& returns,
                          const ReturnSeries* risk_free) {
    ReturnSeries out;
    out.dates = returns.dates;
    out.values.resize(returns.values.size());
    double wealth = 1.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < returns.values.size(); ++i) {
        double rf = 0.0;
        if (risk_free) {
            while (j < risk_free->dates.size() &&
                   risk_free->dates[j] < returns.dates[i])
                ++j;
            if (j < risk_free->dates.size() &&
                risk_free->dates[j] == returns.dates[i])
                rf = risk_free->values[j];
        }
        wealth *= 1.0 + returns.values[i] + rf;
        out.values[i] = wealth;
    }
    return out;
}

namespace {

struct SharpeParts {
    double mu = 0, q = 0, sr = 0;  // mean, raw second moment, per-period Sharpe
    double dmu = 0, dq = 0;        // gradient of sr in (mu, q)
};

SharpeParts sharpe_parts(const std::vector<double>& r) {
    SharpeParts p;
    const double n = static_cast<double>(r.size());
    for (double v : r) {
        p.mu += v;
        p.q += v * v;
    }
    p.mu /= n;
    p.q /= n;
    const double var = p.q - p.mu * p.mu;
    if (var <= 0) throw NumericError("zero variance in Sharpe ratio comparison");
    const double sd = std::sqrt(var);
    p.sr = p.mu / sd;
    p.dmu = p.q / (var * sd);
    p.dq = -p.mu / (2.0 * var * sd);
    return p;
}

double delta_var(const std::vector<double>& r, const SharpeParts& p) {
    const long t = static_cast<long>(r.size());
    Eigen::MatrixXd g(t, 2);
    for (long i = 0; i < t; ++i) {
        const double v = r[static_cast<std::size_t>(i)];
        g(i, 0) = v - p.mu;
        g(i, 1) = v * v - p.q;
    }
    const Eigen::MatrixXd omega = bartlett_lrcov(g, auto_lag(t));
    Eigen::Vector2d grad(p.dmu, p.dq);
    return grad.dot(omega * grad) / static_cast<double>(t);
}

}  // namespace

SharpeDifference sharpe_difference_test(const ReturnSeries& a,
                                        const ReturnSeries& b) {
    if (a.values.size() < 2 || b.values.size() < 2)
        throw DataError("Sharpe comparison needs at least two observations per series");

    // Pair up overlapping dates; leftovers decide whether samples overlap.
    std::vector<double> av, bv;
    std::size_t i = 0, j = 0;
    while (i < a.dates.size() && j < b.dates.size()) {
        if (a.dates[i] < b.dates[j]) ++i;
        else if (b.dates[j] < a.dates[i]) ++j;
        else {
            av.push_back(a.values[i]);
            bv.push_back(b.values[j]);
            ++i;
            ++j;
        }
    }

    SharpeDifference out;
    double variance;
    if (av.size() >= 2) {
        const auto pa = sharpe_parts(av);
        const auto pb = sharpe_parts(bv);
        out.sr_a = pa.sr;
        out.sr_b = pb.sr;
        const long t = static_cast<long>(av.size());
        Eigen::MatrixXd g(t, 4);
        for (long r = 0; r < t; ++r) {
            const double x = av[static_cast<std::size_t>(r)];
            const double y = bv[static_cast<std::size_t>(r)];
            g(r, 0) = x - pa.mu;
            g(r, 1) = x * x - pa.q;
            g(r, 2) = y - pb.mu;
            g(r, 3) = y * y - pb.q;
        }
        const Eigen::MatrixXd omega = bartlett_lrcov(g, auto_lag(t));
        Eigen::Vector4d grad(pa.dmu, pa.dq, -pb.dmu, -pb.dq);
        variance = grad.dot(omega * grad) / static_cast<double>(t);
    } else {
        const auto pa = sharpe_parts(a.values);
        const auto pb = sharpe_parts(b.values);
        out.sr_a = pa.sr;
        out.sr_b = pb.sr;
        variance = delta_var(a.values, pa) + delta_var(b.values, pb);
    }

    const double diff = out.sr_a - out.sr_b;
    if (variance > 0) {
        out.statistic = diff / std::sqrt(variance);
    } else {
        out.statistic = diff == 0.0 ? 0.0 : kNaN;
    }
    if (std::isfinite(out.statistic))
        out.p_value = 2.0 * (1.0 - normal_cdf(std::abs(out.statistic)));
    return out;
}

}  // namespace nsdyn::perfstats
