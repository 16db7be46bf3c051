#include "maskcast/calendar.hpp"

#include "maskcast/errors.hpp"

#include <cstdio>

namespace maskcast {

bool is_leap_year(int year) {
	return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
	static const int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
	if (month == 2 && is_leap_year(year)) {
		return 29;
	}
	return lengths[month - 1];
}

bool is_valid_date(const Date &d) {
	return d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= days_in_month(d.year, d.month);
}

// Howard Hinnant's days-from-civil algorithm.
std::int64_t day_number(const Date &d) {
	std::int64_t y = d.year;
	const std::int64_t m = d.month;
	const std::int64_t day = d.day;
	y -= m <= 2;
	const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
	const std::int64_t yoe = y - era * 400;
	const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + day - 1;
	const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
	return era * 146097 + doe - 719468;
}

Date date_from_day_number(std::int64_t n) {
	const std::int64_t z = n + 719468;
	const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
	const std::int64_t doe = z - era * 146097;
	const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
	const std::int64_t y = yoe + era * 400;
	const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
	const std::int64_t mp = (5 * doy + 2) / 153;
	const std::int64_t day = doy - (153 * mp + 2) / 5 + 1;
	const std::int64_t m = mp + (mp < 10 ? 3 : -9);
	return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(day)};
}

int day_of_week(const Date &d) {
	// day 0 (1970-01-01) was a Thursday; Monday-based index.
	std::int64_t n = day_number(d) + 3;
	n %= 7;
	if (n < 0) {
		n += 7;
	}
	return static_cast<int>(n);
}

Date next_day(const Date &d) {
	return date_from_day_number(day_number(d) + 1);
}

Date parse_date(const std::string &text) {
	if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
		throw DataError("invalid date '" + text + "': expected YYYY-MM-DD");
	}
	for (std::size_t i = 0; i < text.size(); ++i) {
		if (i == 4 || i == 7) {
			continue;
		}
		if (text[i] < '0' || text[i] > '9') {
			throw DataError("invalid date '" + text + "': expected YYYY-MM-DD");
		}
	}
	Date d;
	d.year = std::stoi(text.substr(0, 4));
	d.month = std::stoi(text.substr(5, 2));
	d.day = std::stoi(text.substr(8, 2));
	if (!is_valid_date(d)) {
		throw DataError("invalid date '" + text + "': no such calendar day");
	}
	return d;
}

std::string format_date(const Date &d) {
	char buf[16];
	std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
	return buf;
}

} // namespace maskcast
