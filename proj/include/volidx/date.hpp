#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace volidx {

/// Calendar date stored as a serial day count (days since 1970-01-01).
class Date {
public:
    constexpr Date() = default;

    static Date from_ymd(int year, unsigned month, unsigned day);
    static constexpr Date from_serial(std::int32_t serial) { return Date(serial); }

    /// Strict ISO-8601 `YYYY-MM-DD`. Throws DataError on anything else.
    static Date parse(std::string_view text);

    [[nodiscard]] constexpr std::int32_t serial() const { return serial_; }
    [[nodiscard]] std::string iso() const;
    /// 0 = Monday ... 6 = Sunday
    [[nodiscard]] int weekday() const;

    constexpr Date operator+(int days) const { return Date(serial_ + days); }
    constexpr Date operator-(int days) const { return Date(serial_ - days); }
    constexpr int operator-(Date other) const { return serial_ - other.serial_; }

    constexpr auto operator<=>(const Date&) const = default;

private:
    constexpr explicit Date(std::int32_t serial) : serial_(serial) {}
    std::int32_t serial_ = 0;
};

}  // namespace volidx
