#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nsdyn/dates.hpp"

namespace nsdyn {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Daily return (or generic value) series on an ordered date grid.
struct ReturnSeries {
    std::vector<Date> dates;
    std::vector<double> values;

    std::size_t size() const { return dates.size(); }
    bool empty() const { return dates.empty(); }
};

/// Observation panel: rows are ordered dates, columns are entity ids.
/// Missing observations are NaN.
class SeriesPanel {
public:
    SeriesPanel() = default;
    SeriesPanel(std::vector<Date> dates, std::vector<std::string> ids);

    std::size_t rows() const { return dates_.size(); }
    std::size_t cols() const { return ids_.size(); }

    const std::vector<Date>& dates() const { return dates_; }
    const std::vector<std::string>& ids() const { return ids_; }

    double& at(std::size_t row, std::size_t col) {
        return data_[row * ids_.size() + col];
    }
    double at(std::size_t row, std::size_t col) const {
        return data_[row * ids_.size() + col];
    }

    bool has(std::size_t row, std::size_t col) const {
        return !std::isnan(at(row, col));
    }

    /// Index of a date in the row grid, or -1 if absent.
    int row_of(const Date& d) const;
    /// Index of an id in the column list, or -1 if absent.
    int col_of(const std::string& id) const;

    /// Column as a series, skipping NaN rows.
    ReturnSeries column(std::size_t col) const;

private:
    std::vector<Date> dates_;
    std::vector<std::string> ids_;
    std::vector<double> data_;
};

/// Compound a daily return series into calendar-month returns.
/// Emits one value per calendar month present in the input, keyed by the last
/// input date in that month.
ReturnSeries compound_monthly(const ReturnSeries& daily);

/// True at index i when it is the last entry of its calendar month.
std::vector<bool> month_end_mask(const std::vector<Date>& dates);

/// Sample mean. Empty input yields NaN.
double mean(const std::vector<double>& x);

/// Sample standard deviation (n-1 denominator). Fewer than two points -> NaN.
double sample_sd(const std::vector<double>& x);

}  // namespace nsdyn
