#include "nsdyn/series.hpp"

#include <algorithm>
#include <cmath>

namespace nsdyn {

SeriesPanel::SeriesPanel(std::vector<Date> dates, std::vector<std::string> ids)
    : dates_(std::move(dates)),
      ids_(std::move(ids)),
      data_(dates_.size() * ids_.size(), kNaN) {}

int SeriesPanel::row_of(const Date& d) const {
    auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
    if (it == dates_.end() || *it != d) return -1;
    return int(it - dates_.begin());
}

int SeriesPanel::col_of(const std::string& id) const {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) return -1;
    return int(it - ids_.begin());
}

ReturnSeries SeriesPanel::column(std::size_t col) const {
    ReturnSeries out;
    for (std::size_t r = 0; r < dates_.size(); ++r) {
        double v = at(r, col);
        if (!std::isnan(v)) {
            out.dates.push_back(dates_[r]);
            out.values.push_back(v);
        }
    }
    return out;
}

ReturnSeries compound_monthly(const ReturnSeries& daily) {
    ReturnSeries out;
    std::size_t i = 0;
    while (i < daily.size()) {
        int mi = daily.dates[i].month_index();
        double growth = 1.0;
        std::size_t j = i;
        while (j < daily.size() && daily.dates[j].month_index() == mi) {
            growth *= 1.0 + daily.values[j];
            ++j;
        }
        out.dates.push_back(daily.dates[j - 1]);
        out.values.push_back(growth - 1.0);
        i = j;
    }
    return out;
}

std::vector<bool> month_end_mask(const std::vector<Date>& dates) {
    std::vector<bool> mask(dates.size(), false);
    for (std::size_t i = 0; i < dates.size(); ++i) {
        bool last = (i + 1 == dates.size()) ||
                    dates[i + 1].month_index() != dates[i].month_index();
        mask[i] = last;
    }
    return mask;
}

double mean(const std::vector<double>& x) {
    if (x.empty()) return kNaN;
    double s = 0.0;
    for (double v : x) s += v;
    return s / double(x.size());
}

double sample_sd(const std::vector<double>& x) {
    if (x.size() < 2) return kNaN;
    double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / double(x.size() - 1));
}

}  // namespace nsdyn
