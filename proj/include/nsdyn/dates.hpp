#pragma once

#include <compare>
#include <string>

namespace nsdyn {

/// Calendar date stored as days since 1970-01-01. Cheap to copy and order;
/// conversion to/from year-month-day goes through std::chrono.
class Date {
public:
    Date() : serial_(0) {}
    explicit Date(int serial) : serial_(serial) {}
    Date(int year, int month, int day);

    static Date parse(const std::string& iso);  // "YYYY-MM-DD"

    int serial() const { return serial_; }
    int year() const;
    int month() const;
    int day() const;

    /// 1 = Monday ... 7 = Sunday (ISO numbering).
    int weekday() const;

    /// year*12 + (month-1); consecutive across year boundaries.
    int month_index() const;

    Date first_of_month() const;
    std::string to_string() const;

    Date operator+(int days) const { return Date(serial_ + days); }
    Date operator-(int days) const { return Date(serial_ - days); }
    int operator-(Date other) const { return serial_ - other.serial_; }
    auto operator<=>(const Date&) const = default;

private:
    int serial_;
};

}  // namespace nsdyn
