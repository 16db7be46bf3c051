#pragma once

#include "maskcast/calendar.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace maskcast {

/// One hour of one zone: load plus the two weather predictors.
struct HourlyRecord {
	Date date;
	int hour = 1; // 1..24
	std::string zone;
	double demand_mw = 0.0;
	double dry_bulb_f = 0.0;
	double dew_point_f = 0.0;
};

struct IngestReport {
	// zone -> year -> row count
	std::map<std::string, std::map<int, std::int64_t>> rows;
	std::int64_t total_rows = 0;
	std::int64_t deduplicated = 0;
	std::vector<std::string> warnings;

	std::string summary() const;
};

struct HourlyTable {
	std::vector<HourlyRecord> records; // sorted by (date, hour, zone)
	std::vector<std::string> zones;    // sorted unique zone ids
};

/// Reads canonical hourly CSVs (`date,hour,zone,demand_mw,dry_bulb_f,dew_point_f`),
/// validates, deduplicates identical rows and sorts by time. Conflicting
/// duplicates or malformed rows raise DataError naming the file and line.
HourlyTable ingest_hourly(const std::vector<std::string> &files, IngestReport *report = nullptr);

/// Daily panel: calendar predictors, per-zone weather at the peak hour, and
/// per-zone daily peak demand as the forecast variables.
struct FeatureTable {
	std::vector<Date> dates;               // strictly consecutive days
	std::vector<std::string> zones;        // Z zone names, sorted
	std::vector<std::array<int, 3>> calendar; // per day: month 1..12, day 1..31, dow 0..6
	std::vector<double> dry_bulb;          // day-major, day * Z + z
	std::vector<double> dew_point;         // day-major
	std::vector<double> peak_mw;           // day-major

	std::size_t n_days() const { return dates.size(); }
	int n_zones() const { return static_cast<int>(zones.size()); }

	double weather(std::size_t day, int zone, bool dew) const {
		const auto &v = dew ? dew_point : dry_bulb;
		return v[day * zones.size() + static_cast<std::size_t>(zone)];
	}
	double peak(std::size_t day, int zone) const {
		return peak_mw[day * zones.size() + static_cast<std::size_t>(zone)];
	}

	FeatureTable slice(std::size_t from, std::size_t count) const;

	/// Enforces the table invariants (consecutive dates, positive finite peaks).
	void validate() const;
};

/// Collapses hourly records to one row per day: peak demand per zone, weather
/// taken at the hour of peak demand, calendar fields from the date. Any
/// (zone, day) without records is an error listing the missing days.
FeatureTable downsample_daily_peak(const HourlyTable &hourly);

struct DatasetSplit {
	FeatureTable train;
	FeatureTable validation;
	FeatureTable test;
};

/// Train = first 80% of days up to train_end_year, validation = remaining 20%,
/// test = the named test year.
DatasetSplit split_by_year(const FeatureTable &table, int train_end_year, int test_year);

/// Train = first 80% of the first pretest_days days, validation = the rest of
/// them, test = everything after.
DatasetSplit split_by_days(const FeatureTable &table, std::size_t pretest_days);

/// Controlled synthetic panel for desk-scale experiments.
struct SyntheticSpec {
	std::size_t n_days = 1000;
	int n_zones = 2;
	double weather_persistence = 0.7;   // AR(1) coefficient of the weather anomaly
	double future_signal_weight = 1.0;  // strength of y's dependence on same-day x
	double autoregressive_weight = 0.5; // strength of y's dependence on y_{t-1}
	double noise_scale = 50.0;          // std dev (MW) of the Gaussian demand noise
	std::uint64_t seed = 0;

	void validate() const;
};

/// Generates the synthetic panel. The demand model, exposed piecewise below so
/// tests can recompute it, is
///   y[t] = base + season(zone, date) + v[t]
///   v[t] = future_signal_weight * g(zone, weather[t])
///        + autoregressive_weight * v[t-1] + noise_scale * eps[t]
/// with weather following a seasonal AR(1). Deterministic for a fixed spec.
FeatureTable generate_synthetic(const SyntheticSpec &spec);

double synthetic_base(const SyntheticSpec &spec);
double synthetic_season(const SyntheticSpec &spec, int zone, const Date &date);
/// The weather-to-demand map g: linear in both temperatures plus a harmonic
/// term in dry bulb.
double synthetic_signal(const SyntheticSpec &spec, int zone, double dry_bulb, double dew_point);
/// base + season + future_signal_weight*g + autoregressive_weight*(y_prev - base - season_prev).
double synthetic_conditional_mean(const SyntheticSpec &spec, int zone, const Date &date,
                                  double dry_bulb, double dew_point, double y_prev,
                                  const Date &prev_date);

void save_feature_table(const FeatureTable &table, const std::string &path);
FeatureTable load_feature_table(const std::string &path);

} // namespace maskcast
