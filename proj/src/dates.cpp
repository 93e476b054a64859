#include "nsdyn/dates.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "nsdyn/errors.hpp"

namespace nsdyn {

namespace {

std::chrono::year_month_day to_ymd(int serial) {
    return std::chrono::year_month_day{
        std::chrono::sys_days{std::chrono::days{serial}}};
}

}  // namespace

Date::Date(int year, int month, int day) {
    std::chrono::year_month_day ymd{std::chrono::year{year},
                                    std::chrono::month{unsigned(month)},
                                    std::chrono::day{unsigned(day)}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date " + std::to_string(year) + "-" +
                        std::to_string(month) + "-" + std::to_string(day));
    }
    serial_ = int(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

Date Date::parse(const std::string& iso) {
    int y = 0, m = 0, d = 0;
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw DataError("bad date '" + iso + "', expected YYYY-MM-DD");
    auto num = [&](int lo, int hi, int& out) {
        auto res = std::from_chars(iso.data() + lo, iso.data() + hi, out);
        if (res.ec != std::errc{} || res.ptr != iso.data() + hi)
            throw DataError("bad date '" + iso + "', expected YYYY-MM-DD");
    };
    num(0, 4, y);
    num(5, 7, m);
    num(8, 10, d);
    return Date(y, m, d);
}

int Date::year() const { return int(to_ymd(serial_).year()); }
int Date::month() const { return int(unsigned(to_ymd(serial_).month())); }
int Date::day() const { return int(unsigned(to_ymd(serial_).day())); }

int Date::weekday() const {
    std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{serial_}}};
    return int(wd.iso_encoding());
}

int Date::month_index() const {
    auto ymd = to_ymd(serial_);
    return int(ymd.year()) * 12 + int(unsigned(ymd.month())) - 1;
}

Date Date::first_of_month() const {
    auto ymd = to_ymd(serial_);
    return Date(int(ymd.year()), int(unsigned(ymd.month())), 1);
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year(), month(), day());
    return buf;
}

}  // namespace nsdyn
