#include "maskcast/dataio.hpp"

#include "maskcast/errors.hpp"
#include "maskcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace maskcast {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::string> split_csv_line(const std::string &line) {
	std::vector<std::string> fields;
	std::string cur;
	for (char ch : line) {
		if (ch == ',') {
			fields.push_back(cur);
			cur.clear();
		} else if (ch != '\r') {
			cur.push_back(ch);
		}
	}
	fields.push_back(cur);
	return fields;
}

double parse_double_field(const std::string &s, const std::string &where) {
	try {
		std::size_t pos = 0;
		const double v = std::stod(s, &pos);
		if (pos != s.size()) {
			throw DataError(where + ": trailing characters in number '" + s + "'");
		}
		if (!std::isfinite(v)) {
			throw DataError(where + ": non-finite number '" + s + "'");
		}
		return v;
	} catch (const DataError &) {
		throw;
	} catch (const std::exception &) {
		throw DataError(where + ": not a number: '" + s + "'");
	}
}

int parse_int_field(const std::string &s, const std::string &where) {
	try {
		std::size_t pos = 0;
		const int v = std::stoi(s, &pos);
		if (pos != s.size()) {
			throw DataError(where + ": trailing characters in integer '" + s + "'");
		}
		return v;
	} catch (const DataError &) {
		throw;
	} catch (const std::exception &) {
		throw DataError(where + ": not an integer: '" + s + "'");
	}
}

} // namespace

std::string IngestReport::summary() const {
	std::ostringstream os;
	os << "ingested " << total_rows << " rows across " << rows.size() << " zones";
	if (deduplicated > 0) {
		os << " (" << deduplicated << " duplicate rows dropped)";
	}
	os << "\n";
	for (const auto &[zone, years] : rows) {
		std::int64_t zone_total = 0;
		for (const auto &[year, n] : years) {
			zone_total += n;
		}
		os << "  " << zone << ": " << zone_total << " rows, years " << years.begin()->first << "-"
		   << years.rbegin()->first << "\n";
	}
	for (const auto &w : warnings) {
		os << "  warning: " << w << "\n";
	}
	return os.str();
}

HourlyTable ingest_hourly(const std::vector<std::string> &files, IngestReport *report) {
	if (files.empty()) {
		throw UsageError("ingest: no input files given");
	}
	IngestReport local;
	IngestReport &rep = report ? *report : local;

	std::vector<HourlyRecord> records;
	for (const auto &path : files) {
		std::ifstream in(path);
		if (!in) {
			throw DataError("cannot open '" + path + "'");
		}
		std::string line;
		if (!std::getline(in, line)) {
			throw DataError(path + ": empty file");
		}
		{
			auto header = split_csv_line(line);
			const std::vector<std::string> expected = {"date",      "hour",       "zone",
			                                           "demand_mw", "dry_bulb_f", "dew_point_f"};
			if (header != expected) {
				throw DataError(path + ":1: expected header 'date,hour,zone,demand_mw,dry_bulb_f,dew_point_f'");
			}
		}
		std::size_t line_no = 1;
		while (std::getline(in, line)) {
			++line_no;
			if (line.empty() || line == "\r") {
				continue;
			}
			const std::string where = path + ":" + std::to_string(line_no);
			auto fields = split_csv_line(line);
			if (fields.size() != 6) {
				throw DataError(where + ": expected 6 fields, got " + std::to_string(fields.size()));
			}
			HourlyRecord r;
			r.date = parse_date(fields[0]);
			r.hour = parse_int_field(fields[1], where);
			if (r.hour < 1 || r.hour > 24) {
				throw DataError(where + ": hour " + std::to_string(r.hour) + " outside 1..24");
			}
			r.zone = fields[2];
			if (r.zone.empty()) {
				throw DataError(where + ": empty zone id");
			}
			r.demand_mw = parse_double_field(fields[3], where);
			if (r.demand_mw < 0.0) {
				throw DataError(where + ": negative demand " + fields[3]);
			}
			r.dry_bulb_f = parse_double_field(fields[4], where);
			r.dew_point_f = parse_double_field(fields[5], where);
			if (r.dew_point_f > r.dry_bulb_f + 5.0) {
				rep.warnings.push_back(where + ": dew point " + fields[5] + " exceeds dry bulb " +
				                       fields[4] + " by more than 5F");
			}
			records.push_back(std::move(r));
		}
	}

	std::sort(records.begin(), records.end(), [](const HourlyRecord &a, const HourlyRecord &b) {
		if (a.date != b.date) {
			return a.date < b.date;
		}
		if (a.hour != b.hour) {
			return a.hour < b.hour;
		}
		return a.zone < b.zone;
	});

	// Identical duplicates collapse; conflicting values for one (timestamp, zone) are fatal.
	std::vector<HourlyRecord> unique;
	unique.reserve(records.size());
	for (auto &r : records) {
		if (!unique.empty()) {
			const auto &p = unique.back();
			if (p.date == r.date && p.hour == r.hour && p.zone == r.zone) {
				if (p.demand_mw != r.demand_mw || p.dry_bulb_f != r.dry_bulb_f ||
				    p.dew_point_f != r.dew_point_f) {
					throw DataError("conflicting duplicate for zone " + r.zone + " at " +
					                format_date(r.date) + " hour " + std::to_string(r.hour));
				}
				rep.deduplicated += 1;
				continue;
			}
		}
		unique.push_back(std::move(r));
	}

	HourlyTable table;
	table.records = std::move(unique);
	std::set<std::string> zone_set;
	for (const auto &r : table.records) {
		zone_set.insert(r.zone);
		rep.rows[r.zone][r.date.year] += 1;
		rep.total_rows += 1;
	}
	table.zones.assign(zone_set.begin(), zone_set.end());
	if (table.records.empty()) {
		throw DataError("ingest: no data rows found");
	}
	return table;
}

FeatureTable FeatureTable::slice(std::size_t from, std::size_t count) const {
	FeatureTable out;
	out.zones = zones;
	out.dates.assign(dates.begin() + from, dates.begin() + from + count);
	out.calendar.assign(calendar.begin() + from, calendar.begin() + from + count);
	const std::size_t z = zones.size();
	out.dry_bulb.assign(dry_bulb.begin() + from * z, dry_bulb.begin() + (from + count) * z);
	out.dew_point.assign(dew_point.begin() + from * z, dew_point.begin() + (from + count) * z);
	out.peak_mw.assign(peak_mw.begin() + from * z, peak_mw.begin() + (from + count) * z);
	return out;
}

void FeatureTable::validate() const {
	if (dates.empty()) {
		throw DataError("feature table is empty");
	}
	if (zones.empty()) {
		throw DataError("feature table has no zones");
	}
	for (std::size_t i = 1; i < dates.size(); ++i) {
		if (day_number(dates[i]) != day_number(dates[i - 1]) + 1) {
			throw DataError("feature table dates not consecutive around " + format_date(dates[i - 1]) +
			                " -> " + format_date(dates[i]));
		}
	}
	for (std::size_t i = 0; i < peak_mw.size(); ++i) {
		if (!std::isfinite(peak_mw[i]) || peak_mw[i] <= 0.0) {
			throw DataError("non-positive peak demand at day index " + std::to_string(i / zones.size()));
		}
	}
}

FeatureTable downsample_daily_peak(const HourlyTable &hourly) {
	if (hourly.records.empty()) {
		throw DataError("downsample: empty hourly table");
	}
	const Date first = hourly.records.front().date;
	const Date last = hourly.records.back().date;
	const std::int64_t first_day = day_number(first);
	const std::size_t n_days = static_cast<std::size_t>(day_number(last) - first_day + 1);
	const std::size_t n_zones = hourly.zones.size();

	std::map<std::string, int> zone_index;
	for (std::size_t z = 0; z < n_zones; ++z) {
		zone_index[hourly.zones[z]] = static_cast<int>(z);
	}

	FeatureTable table;
	table.zones = hourly.zones;
	table.dates.resize(n_days);
	table.calendar.resize(n_days);
	table.dry_bulb.assign(n_days * n_zones, 0.0);
	table.dew_point.assign(n_days * n_zones, 0.0);
	table.peak_mw.assign(n_days * n_zones, -1.0); // sentinel: no record seen

	for (std::size_t d = 0; d < n_days; ++d) {
		const Date date = date_from_day_number(first_day + static_cast<std::int64_t>(d));
		table.dates[d] = date;
		table.calendar[d] = {date.month, date.day, day_of_week(date)};
	}

	for (const auto &r : hourly.records) {
		const std::size_t d = static_cast<std::size_t>(day_number(r.date) - first_day);
		const std::size_t idx = d * n_zones + static_cast<std::size_t>(zone_index.at(r.zone));
		if (r.demand_mw > table.peak_mw[idx]) {
			table.peak_mw[idx] = r.demand_mw;
			table.dry_bulb[idx] = r.dry_bulb_f;
			table.dew_point[idx] = r.dew_point_f;
		}
	}

	std::vector<std::string> missing;
	for (std::size_t d = 0; d < n_days && missing.size() <= 8; ++d) {
		for (std::size_t z = 0; z < n_zones; ++z) {
			if (table.peak_mw[d * n_zones + z] < 0.0) {
				missing.push_back(hourly.zones[z] + " " + format_date(table.dates[d]));
			}
		}
	}
	if (!missing.empty()) {
		std::string msg = "downsample: missing hourly data for:";
		for (std::size_t i = 0; i < missing.size() && i < 8; ++i) {
			msg += " " + missing[i];
		}
		if (missing.size() > 8) {
			msg += " ...";
		}
		throw DataError(msg);
	}
	table.validate();
	return table;
}

namespace {

DatasetSplit make_split(const FeatureTable &table, std::size_t pretest_days, std::size_t test_days) {
	const std::size_t train_days = pretest_days * 8 / 10;
	const std::size_t val_days = pretest_days - train_days;
	if (train_days == 0 || val_days == 0) {
		throw DataError("split: pretest span of " + std::to_string(pretest_days) +
		                " days leaves an empty train or validation slice");
	}
	DatasetSplit s;
	s.train = table.slice(0, train_days);
	s.validation = table.slice(train_days, val_days);
	s.test = table.slice(pretest_days, test_days);
	return s;
}

} // namespace

DatasetSplit split_by_year(const FeatureTable &table, int train_end_year, int test_year) {
	if (test_year <= train_end_year) {
		throw UsageError("split: test year must follow the training years");
	}
	std::size_t pretest = 0;
	while (pretest < table.n_days() && table.dates[pretest].year <= train_end_year) {
		++pretest;
	}
	if (pretest == 0) {
		throw DataError("split: no days on or before year " + std::to_string(train_end_year));
	}
	std::size_t test_end = pretest;
	while (test_end < table.n_days() && table.dates[test_end].year < test_year) {
		++test_end; // skip any gap years between train_end and test (none in practice)
	}
	std::size_t test_count = 0;
	while (test_end + test_count < table.n_days() &&
	       table.dates[test_end + test_count].year == test_year) {
		++test_count;
	}
	if (test_count == 0) {
		throw DataError("split: test year " + std::to_string(test_year) + " absent from table");
	}
	auto s = make_split(table.slice(0, pretest), pretest, 0);
	s.test = table.slice(test_end, test_count);
	return s;
}

DatasetSplit split_by_days(const FeatureTable &table, std::size_t pretest_days) {
	if (pretest_days == 0 || pretest_days > table.n_days()) {
		throw UsageError("split: pretest day count " + std::to_string(pretest_days) +
		                 " outside table of " + std::to_string(table.n_days()) + " days");
	}
	return make_split(table, pretest_days, table.n_days() - pretest_days);
}

void SyntheticSpec::validate() const {
	if (n_days < 2) {
		throw UsageError("synthetic: n_days must be at least 2");
	}
	if (n_zones < 1) {
		throw UsageError("synthetic: n_zones must be at least 1");
	}
	if (weather_persistence < 0.0 || weather_persistence >= 1.0) {
		throw UsageError("synthetic: weather_persistence must lie in [0, 1)");
	}
	if (future_signal_weight < 0.0 || autoregressive_weight < 0.0) {
		throw UsageError("synthetic: signal weights must be nonnegative");
	}
	if (!(noise_scale > 0.0)) {
		throw UsageError("synthetic: noise_scale must be positive");
	}
}

double synthetic_base(const SyntheticSpec &) { return 1000.0; }

double synthetic_season(const SyntheticSpec &, int zone, const Date &date) {
	const double doy = static_cast<double>(day_number(date) - day_number(Date{date.year, 1, 1}));
	const double annual = std::sin(2.0 * kPi * (doy - 20.0) / 365.25);
	const double amp = 120.0 * (1.0 + 0.15 * zone);
	const int dow = day_of_week(date);
	const double weekend = (dow >= 5) ? -45.0 : 0.0;
	return amp * annual + weekend;
}

double synthetic_signal(const SyntheticSpec &, int zone, double dry_bulb, double dew_point) {
	const double u = (dry_bulb - 65.0) / 15.0;
	const double w = (dew_point - 50.0) / 15.0;
	return (50.0 + 5.0 * zone) * u + 30.0 * std::sin(1.5 * u) + 15.0 * w;
}

double synthetic_conditional_mean(const SyntheticSpec &spec, int zone, const Date &date,
                                  double dry_bulb, double dew_point, double y_prev,
                                  const Date &prev_date) {
	const double v_prev = y_prev - synthetic_base(spec) - synthetic_season(spec, zone, prev_date);
	return synthetic_base(spec) + synthetic_season(spec, zone, date) +
	       spec.future_signal_weight * synthetic_signal(spec, zone, dry_bulb, dew_point) +
	       spec.autoregressive_weight * v_prev;
}

FeatureTable generate_synthetic(const SyntheticSpec &spec) {
	spec.validate();
	Rng rng(spec.seed);

	const std::size_t z = static_cast<std::size_t>(spec.n_zones);
	FeatureTable table;
	table.zones.reserve(z);
	for (std::size_t i = 0; i < z; ++i) {
		table.zones.push_back("Z" + std::to_string(i + 1));
	}
	table.dates.resize(spec.n_days);
	table.calendar.resize(spec.n_days);
	table.dry_bulb.resize(spec.n_days * z);
	table.dew_point.resize(spec.n_days * z);
	table.peak_mw.resize(spec.n_days * z);

	const Date start{2011, 1, 1};
	const std::int64_t start_day = day_number(start);

	// Weather: seasonal mean plus AR(1) anomaly, dew point a noisy gap below dry bulb.
	auto dry_mean = [](const Date &d) {
		const double doy = static_cast<double>(day_number(d) - day_number(Date{d.year, 1, 1}));
		return 52.0 + 25.0 * std::sin(2.0 * kPi * (doy - 100.0) / 365.25);
	};

	std::vector<double> dry_anom(z, 0.0);
	std::vector<double> v(z, 0.0);

	for (std::size_t d = 0; d < spec.n_days; ++d) {
		const Date date = date_from_day_number(start_day + static_cast<std::int64_t>(d));
		table.dates[d] = date;
		table.calendar[d] = {date.month, date.day, day_of_week(date)};
		for (std::size_t s = 0; s < z; ++s) {
			const int zone = static_cast<int>(s);
			dry_anom[s] = spec.weather_persistence * dry_anom[s] + 6.0 * rng.normal();
			const double dry = dry_mean(date) + dry_anom[s];
			const double gap = std::max(0.0, 12.0 + 3.0 * rng.normal());
			const double dew = dry - gap;
			table.dry_bulb[d * z + s] = dry;
			table.dew_point[d * z + s] = dew;

			v[s] = spec.future_signal_weight * synthetic_signal(spec, zone, dry, dew) +
			       spec.autoregressive_weight * v[s] + spec.noise_scale * rng.normal();
			double y = synthetic_base(spec) + synthetic_season(spec, zone, date) + v[s];
			if (y < 1.0) {
				y = 1.0; // demand floor; unreachable for sane spec scales
			}
			table.peak_mw[d * z + s] = y;
		}
	}
	table.validate();
	return table;
}

void save_feature_table(const FeatureTable &table, const std::string &path) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw DataError("cannot write '" + path + "'");
	}
	out << "date";
	for (const auto &zone : table.zones) {
		out << "," << zone << "_dry_bulb_f," << zone << "_dew_point_f," << zone << "_peak_mw";
	}
	out << "\n";
	const std::size_t z = table.zones.size();
	char buf[64];
	for (std::size_t d = 0; d < table.n_days(); ++d) {
		out << format_date(table.dates[d]);
		for (std::size_t s = 0; s < z; ++s) {
			std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f", table.dry_bulb[d * z + s],
			              table.dew_point[d * z + s], table.peak_mw[d * z + s]);
			out << buf;
		}
		out << "\n";
	}
	if (!out) {
		throw DataError("write failed for '" + path + "'");
	}
}

FeatureTable load_feature_table(const std::string &path) {
	std::ifstream in(path);
	if (!in) {
		throw DataError("cannot open '" + path + "'");
	}
	std::string line;
	if (!std::getline(in, line)) {
		throw DataError(path + ": empty file");
	}
	auto header = split_csv_line(line);
	if (header.size() < 4 || header[0] != "date" || (header.size() - 1) % 3 != 0) {
		throw DataError(path + ": not a feature table file");
	}
	FeatureTable table;
	const std::size_t z = (header.size() - 1) / 3;
	for (std::size_t s = 0; s < z; ++s) {
		const std::string &col = header[1 + 3 * s];
		const std::string suffix = "_dry_bulb_f";
		if (col.size() <= suffix.size() || col.substr(col.size() - suffix.size()) != suffix) {
			throw DataError(path + ": unexpected column '" + col + "'");
		}
		table.zones.push_back(col.substr(0, col.size() - suffix.size()));
	}
	std::size_t line_no = 1;
	while (std::getline(in, line)) {
		++line_no;
		if (line.empty() || line == "\r") {
			continue;
		}
		const std::string where = path + ":" + std::to_string(line_no);
		auto fields = split_csv_line(line);
		if (fields.size() != 1 + 3 * z) {
			throw DataError(where + ": expected " + std::to_string(1 + 3 * z) + " fields");
		}
		const Date date = parse_date(fields[0]);
		table.dates.push_back(date);
		table.calendar.push_back({date.month, date.day, day_of_week(date)});
		for (std::size_t s = 0; s < z; ++s) {
			table.dry_bulb.push_back(parse_double_field(fields[1 + 3 * s], where));
			table.dew_point.push_back(parse_double_field(fields[2 + 3 * s], where));
			table.peak_mw.push_back(parse_double_field(fields[3 + 3 * s], where));
		}
	}
	table.validate();
	return table;
}

} // namespace maskcast
