#include "nsdyn/nscurve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nsdyn/csv.hpp"
#include "nsdyn/errors.hpp"
#include "nsdyn/parallel.hpp"

namespace nsdyn::nscurve {

namespace {

double root_f(double x) { return std::exp(-x) * (1.0 + x + x * x) - 1.0; }

double solve_curvature_root() {
    // f(0) = 0 is the trivial root; the positive root lies in [1.5, 2]:
    // f(1.5) > 0, f(2) < 0.
    double lo = 1.5, hi = 2.0;
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        double fm = root_f(mid);
        if (std::fabs(fm) < 1e-12) return mid;
        if (fm > 0)
            lo = mid;
        else
            hi = mid;
    }
    throw NumericError("curvature root bisection did not converge");
}

struct OlsResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    double r_squared = 0.0;
};

OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols())
        throw NumericError("rank-deficient curve design (duplicate maturities?)");
    OlsResult out;
    out.beta = qr.solve(y);
    out.residuals = y - x * out.beta;
    double rss = out.residuals.squaredNorm();
    double mean_y = y.mean();
    double tss = (y.array() - mean_y).matrix().squaredNorm();
    if (tss == 0.0)
        out.r_squared = (rss == 0.0) ? 1.0 : 0.0;
    else
        out.r_squared = 1.0 - rss / tss;
    return out;
}

}  // namespace

double curvature_root() {
    static const double root = solve_curvature_root();
    return root;
}

double decay_factor(double avg_maturity_months) {
    if (!(avg_maturity_months > 0))
        throw DataError("average maturity must be positive");
    return curvature_root() / avg_maturity_months;
}

double slope_loading(double x) {
    if (x < 1e-8) return 1.0 - 0.5 * x;
    return (1.0 - std::exp(-x)) / x;
}

double curvature_loading(double x) {
    if (x < 1e-8) return 0.5 * x;
    return (1.0 - std::exp(-x)) / x - std::exp(-x);
}

double lambda_for_maturities(const std::vector<double>& maturity_months) {
    if (maturity_months.empty()) throw DataError("no maturities");
    double sum = 0.0;
    for (double m : maturity_months) sum += m;
    return decay_factor(sum / double(maturity_months.size()));
}

Eigen::MatrixXd ns_loadings(double lambda,
                            const std::vector<double>& maturity_months,
                            const ComponentSet& components) {
    if (!(lambda > 0)) throw DataError("lambda must be positive");
    Eigen::Index n = Eigen::Index(maturity_months.size());
    Eigen::MatrixXd x(n, components.count());
    for (Eigen::Index i = 0; i < n; ++i) {
        double lm = lambda * maturity_months[std::size_t(i)];
        Eigen::Index col = 0;
        x(i, col++) = 1.0;
        if (components.slope) x(i, col++) = slope_loading(lm);
        if (components.curvature) x(i, col++) = curvature_loading(lm);
    }
    return x;
}

namespace {

std::vector<double> maturities_of(const marketdata::CurveSnapshot& snapshot) {
    std::vector<double> m;
    m.reserve(snapshot.points.size());
    for (const auto& p : snapshot.points) m.push_back(p.maturity_months);
    return m;
}

Eigen::VectorXd prices_of(const marketdata::CurveSnapshot& snapshot) {
    Eigen::VectorXd y(Eigen::Index(snapshot.points.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y(i) = snapshot.points[std::size_t(i)].price;
    return y;
}

}  // namespace

NSFit fit_ns(const marketdata::CurveSnapshot& snapshot,
             const ComponentSet& components) {
    if (int(snapshot.points.size()) < components.count())
        throw DataError("snapshot has fewer points than fit components");
    std::vector<double> maturities = maturities_of(snapshot);
    double lambda = lambda_for_maturities(maturities);
    Eigen::MatrixXd x = ns_loadings(lambda, maturities, components);
    OlsResult sol = ols(x, prices_of(snapshot));

    NSFit fit;
    fit.date = snapshot.date;
    fit.commodity_id = snapshot.commodity_id;
    fit.lambda = lambda;
    fit.r_squared = sol.r_squared;
    Eigen::Index col = 0;
    fit.beta_level = sol.beta(col++);
    if (components.slope) fit.beta_slope = sol.beta(col++);
    if (components.curvature) fit.beta_curvature = sol.beta(col++);
    fit.residuals.assign(sol.residuals.data(),
                         sol.residuals.data() + sol.residuals.size());
    return fit;
}

SeasonalNSFit fit_ns_seasonal(const marketdata::CurveSnapshot& snapshot) {
    if (snapshot.points.size() < 5)
        throw ConfigError(
            "seasonal curve fit needs at least 5 points; use a deeper snapshot");
    std::vector<double> maturities = maturities_of(snapshot);
    double lambda = lambda_for_maturities(maturities);
    ComponentSet full;
    Eigen::MatrixXd base = ns_loadings(lambda, maturities, full);
    Eigen::VectorXd y = prices_of(snapshot);

    Eigen::MatrixXd x(base.rows(), base.cols() + 1);
    x.leftCols(base.cols()) = base;

    SeasonalNSFit best;
    bool have_best = false;
    for (int theta = 1; theta <= 12; ++theta) {
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            x(i, base.cols()) = std::cos(
                kSeasonalOmega * (maturities[std::size_t(i)] - double(theta)));
        OlsResult sol = ols(x, y);
        if (!have_best || sol.r_squared > best.r_squared) {
            have_best = true;
            best.date = snapshot.date;
            best.commodity_id = snapshot.commodity_id;
            best.lambda = lambda;
            best.r_squared = sol.r_squared;
            best.beta_level = sol.beta(0);
            best.beta_slope = sol.beta(1);
            best.beta_curvature = sol.beta(2);
            best.beta_seasonal = sol.beta(3);
            best.theta = theta;
            best.residuals.assign(sol.residuals.data(),
                                  sol.residuals.data() + sol.residuals.size());
        }
    }
    return best;
}

FitPanel fit_panel(const marketdata::Market& market, int k,
                   const ComponentSet& components,
                   const std::set<std::string>& seasonal_ids, int threads) {
    for (const auto& id : seasonal_ids)
        if (market.chain_of(id) < 0)
            throw ConfigError("seasonal commodity '" + id + "' not in universe");
    if (!seasonal_ids.empty() && k < 5)
        throw ConfigError("seasonal fits need snapshot depth >= 5, got K=" +
                          std::to_string(k));

    FitPanel panel;
    panel.dates = market.calendar;
    for (const auto& chain : market.chains) panel.ids.push_back(chain.commodity_id);
    panel.beta_level = SeriesPanel(panel.dates, panel.ids);
    panel.beta_slope = SeriesPanel(panel.dates, panel.ids);
    panel.beta_curvature = SeriesPanel(panel.dates, panel.ids);
    panel.beta_seasonal = SeriesPanel(panel.dates, panel.ids);
    panel.theta = SeriesPanel(panel.dates, panel.ids);
    panel.lambda = SeriesPanel(panel.dates, panel.ids);
    panel.r2 = SeriesPanel(panel.dates, panel.ids);

    std::size_t n_cells = market.chains.size() * panel.dates.size();
    std::vector<std::pair<Date, std::string>> cell_failures(n_cells,
                                                            {Date(), ""});

    parallel_for(market.chains.size(), threads, [&](std::size_t c) {
        const auto& chain = market.chains[c];
        const auto& sched = market.schedules[c];
        bool seasonal = seasonal_ids.count(chain.commodity_id) > 0;
        for (std::size_t r = 0; r < panel.dates.size(); ++r) {
            auto snap = marketdata::snapshot(chain, sched, panel.dates[r], k);
            if (!snap) continue;
            try {
                if (seasonal) {
                    SeasonalNSFit fit = fit_ns_seasonal(*snap);
                    panel.beta_level.at(r, c) = fit.beta_level;
                    panel.beta_slope.at(r, c) = fit.beta_slope;
                    panel.beta_curvature.at(r, c) = fit.beta_curvature;
                    panel.beta_seasonal.at(r, c) = fit.beta_seasonal;
                    panel.theta.at(r, c) = double(fit.theta);
                    panel.lambda.at(r, c) = fit.lambda;
                    panel.r2.at(r, c) = fit.r_squared;
                } else {
                    NSFit fit = fit_ns(*snap, components);
                    panel.beta_level.at(r, c) = fit.beta_level;
                    panel.beta_slope.at(r, c) = fit.beta_slope;
                    panel.beta_curvature.at(r, c) = fit.beta_curvature;
                    panel.lambda.at(r, c) = fit.lambda;
                    panel.r2.at(r, c) = fit.r_squared;
                }
            } catch (const NumericError&) {
                cell_failures[c * panel.dates.size() + r] = {panel.dates[r],
                                                             chain.commodity_id};
            }
        }
    });

    for (const auto& f : cell_failures)
        if (!f.second.empty()) panel.failures.push_back(f);
    return panel;
}

void write_fit_csv(const FitPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "date,commodity,beta_level,beta_slope,beta_curvature,beta_seasonal,"
           "theta,lambda,r2\n";
    for (std::size_t r = 0; r < panel.dates.size(); ++r) {
        for (std::size_t c = 0; c < panel.ids.size(); ++c) {
            if (!panel.beta_level.has(r, c)) continue;
            out << panel.dates[r].to_string() << ',' << panel.ids[c] << ','
                << csv::format_double(panel.beta_level.at(r, c)) << ','
                << csv::format_double(panel.beta_slope.at(r, c)) << ','
                << csv::format_double(panel.beta_curvature.at(r, c)) << ',';
            if (panel.beta_seasonal.has(r, c))
                out << csv::format_double(panel.beta_seasonal.at(r, c)) << ','
                    << int(panel.theta.at(r, c)) << ',';
            else
                out << ",,";
            out << csv::format_double(panel.lambda.at(r, c)) << ','
                << csv::format_double(panel.r2.at(r, c)) << '\n';
        }
    }
}

}  // namespace nsdyn::nscurve
