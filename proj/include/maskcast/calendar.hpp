#pragma once

#include <cstdint>
#include <string>

namespace maskcast {

/// Proleptic Gregorian calendar date.
struct Date {
	int year = 1970;
	int month = 1; // 1..12
	int day = 1;   // 1..31

	bool operator==(const Date &) const = default;
	auto operator<=>(const Date &) const = default;
};

bool is_leap_year(int year);
int days_in_month(int year, int month);
bool is_valid_date(const Date &d);

/// Days since 1970-01-01 (negative before).
std::int64_t day_number(const Date &d);
Date date_from_day_number(std::int64_t n);

/// 0 = Monday .. 6 = Sunday.
int day_of_week(const Date &d);

Date next_day(const Date &d);

/// Parses strict ISO-8601 `YYYY-MM-DD`; throws DataError on anything else.
Date parse_date(const std::string &text);
std::string format_date(const Date &d);

} // namespace maskcast
