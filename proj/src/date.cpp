#include "volidx/date.hpp"

#include "volidx/errors.hpp"

#include <charconv>
#include <cstdio>

namespace volidx {

// Civil-calendar conversions after H. Hinnant's public-domain algorithms.
Date Date::from_ymd(int year, unsigned month, unsigned day) {
    if (month < 1 || month > 12 || day < 1 || day > 31) {
        throw DataError("invalid calendar date");
    }
    const int y = year - (month <= 2 ? 1 : 0);
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned mp = (month + 9) % 12;
    const unsigned doy = (153 * mp + 2) / 5 + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    Date d(era * 146097 + static_cast<int>(doe) - 719468);
    // Reject overflowed days such as 2021-02-30.
    if (d.iso() != [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
            return std::string(buf);
        }()) {
        throw DataError("invalid calendar date");
    }
    return d;
}

Date Date::parse(std::string_view text) {
    auto bad = [&] { return DataError("invalid ISO date '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw bad();
    }
    auto field = [&](std::size_t pos, std::size_t len) {
        int value = 0;
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
        if (ec != std::errc{} || ptr != text.data() + pos + len) {
            throw bad();
        }
        return value;
    };
    const int y = field(0, 4);
    const int m = field(5, 2);
    const int d = field(8, 2);
    try {
        return from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    } catch (const DataError&) {
        throw bad();
    }
}

std::string Date::iso() const {
    const int z = serial_ + 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y + (m <= 2 ? 1 : 0), m, d);
    return buf;
}

int Date::weekday() const {
    // 1970-01-01 was a Thursday.
    const int w = (serial_ + 3) % 7;
    return w < 0 ? w + 7 : w;
}

}  // namespace volidx
