#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "maskcast/calendar.hpp"
#include "maskcast/dataio.hpp"
#include "maskcast/errors.hpp"
#include "maskcast/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace maskcast;

namespace {

std::string temp_dir() {
	auto dir = std::filesystem::temp_directory_path() / "maskcast_dataio_test";
	std::filesystem::create_directories(dir);
	return dir.string();
}

std::string write_file(const std::string &name, const std::string &content) {
	const std::string path = temp_dir() + "/" + name;
	std::ofstream out(path, std::ios::binary);
	out << content;
	return path;
}

std::string hourly_header() { return "date,hour,zone,demand_mw,dry_bulb_f,dew_point_f\n"; }

} // namespace

TEST_CASE("calendar arithmetic") {
	CHECK(day_number(Date{1970, 1, 1}) == 0);
	CHECK(format_date(date_from_day_number(day_number(Date{2021, 2, 28}) + 1)) == "2021-03-01");
	CHECK(is_leap_year(2012));
	CHECK(is_leap_year(2000));
	CHECK_FALSE(is_leap_year(2100));
	CHECK(day_of_week(Date{2021, 1, 4}) == 0); // a Monday
	CHECK(day_of_week(Date{2021, 1, 3}) == 6); // a Sunday
	CHECK_THROWS_AS(parse_date("2021-02-30"), DataError);
	CHECK_THROWS_AS(parse_date("2021/01/01"), DataError);
	CHECK(parse_date("2016-02-29") == Date{2016, 2, 29});
}

TEST_CASE("ingest parses one day of one zone") {
	std::string content = hourly_header();
	char buf[96];
	for (int h = 1; h <= 24; ++h) {
		std::snprintf(buf, sizeof buf, "2021-01-01,%d,CT,%d.0,40.0,30.0\n", h, 100 + h);
		content += buf;
	}
	auto path = write_file("one_day.csv", content);
	auto table = ingest_hourly({path});
	CHECK(table.records.size() == 24);
	CHECK(table.zones == std::vector<std::string>{"CT"});
}

TEST_CASE("ingest rejects hour 25 naming the row") {
	auto path = write_file("bad_hour.csv", hourly_header() + "2021-01-01,25,CT,100,40,30\n");
	CHECK_THROWS_WITH_AS(ingest_hourly({path}), doctest::Contains(":2"), DataError);
}

TEST_CASE("ingest rejects malformed rows and conflicting duplicates; dedups identical rows") {
	auto bad = write_file("bad_num.csv", hourly_header() + "2021-01-01,1,CT,abc,40,30\n");
	CHECK_THROWS_AS(ingest_hourly({bad}), DataError);

	auto conflict = write_file("conflict.csv", hourly_header() +
	                                               "2021-01-01,1,CT,100,40,30\n"
	                                               "2021-01-01,1,CT,101,40,30\n");
	CHECK_THROWS_WITH_AS(ingest_hourly({conflict}), doctest::Contains("conflicting"), DataError);

	IngestReport rep;
	auto dup = write_file("dup.csv", hourly_header() +
	                                     "2021-01-01,1,CT,100,40,30\n"
	                                     "2021-01-01,1,CT,100,40,30\n");
	auto table = ingest_hourly({dup}, &rep);
	CHECK(table.records.size() == 1);
	CHECK(rep.deduplicated == 1);
}

TEST_CASE("ingest flags dew point above dry bulb without failing") {
	IngestReport rep;
	auto path = write_file("dew.csv", hourly_header() + "2021-01-01,1,CT,100,40,50\n");
	auto table = ingest_hourly({path}, &rep);
	CHECK(table.records.size() == 1);
	REQUIRE(rep.warnings.size() == 1);
	CHECK(rep.warnings[0].find("dew point") != std::string::npos);
}

TEST_CASE("a decade of hourly rows for one zone is 87,672 samples") {
	// 2011..2020 has three leap years; enumerate the calendar independently
	std::int64_t expected_days = 0;
	for (Date d{2011, 1, 1}; d.year <= 2020; d = next_day(d)) {
		++expected_days;
	}
	CHECK(expected_days == 3653);

	std::string content = hourly_header();
	content.reserve(90000 * 32);
	char buf[96];
	for (Date d{2011, 1, 1}; d.year <= 2020; d = next_day(d)) {
		for (int h = 1; h <= 24; ++h) {
			std::snprintf(buf, sizeof buf, "%s,%d,NEMA,%d.5,55.0,45.0\n", format_date(d).c_str(), h,
			              900 + (h * 7) % 50);
			content += buf;
		}
	}
	auto path = write_file("decade.csv", content);
	IngestReport rep;
	auto table = ingest_hourly({path}, &rep);
	CHECK(table.records.size() == 87672); // 24 * 3653
	std::int64_t zone_total = 0;
	for (const auto &[year, n] : rep.rows.at("NEMA")) {
		zone_total += n;
	}
	CHECK(zone_total == 87672);

	auto daily = downsample_daily_peak(table);
	CHECK(daily.n_days() == 3653);
}

TEST_CASE("daily peak takes the max and the weather at the peak hour") {
	std::string content = hourly_header();
	content += "2021-06-01,1,CT,10,60,50\n";
	content += "2021-06-01,2,CT,15,75,62\n";
	content += "2021-06-01,3,CT,12,70,55\n";
	auto table = downsample_daily_peak(ingest_hourly({write_file("peak.csv", content)}));
	CHECK(table.n_days() == 1);
	CHECK(table.peak(0, 0) == 15.0);
	CHECK(table.weather(0, 0, false) == 75.0);
	CHECK(table.weather(0, 0, true) == 62.0);
	CHECK(table.calendar[0][0] == 6);
	CHECK(table.calendar[0][1] == 1);
	CHECK(table.calendar[0][2] == day_of_week(Date{2021, 6, 1}));
}

TEST_CASE("constant demand day peaks at the constant") {
	std::string content = hourly_header();
	for (int h = 1; h <= 24; ++h) {
		content += "2021-06-01," + std::to_string(h) + ",CT,42,60,50\n";
	}
	auto table = downsample_daily_peak(ingest_hourly({write_file("const.csv", content)}));
	CHECK(table.peak(0, 0) == 42.0);
}

TEST_CASE("downsampling is invariant to hourly row order and matches brute force") {
	Rng rng(77);
	const int days = 12;
	std::vector<HourlyRecord> rows;
	for (int d = 0; d < days; ++d) {
		for (const char *zone : {"A", "B"}) {
			for (int h = 1; h <= 24; ++h) {
				HourlyRecord r;
				r.date = date_from_day_number(day_number(Date{2020, 3, 1}) + d);
				r.hour = h;
				r.zone = zone;
				r.demand_mw = 50.0 + 100.0 * rng.uniform();
				r.dry_bulb_f = rng.uniform(20, 90);
				r.dew_point_f = r.dry_bulb_f - rng.uniform(0, 20);
				rows.push_back(r);
			}
		}
	}
	auto write_rows = [&](const std::vector<HourlyRecord> &rs, const std::string &name) {
		std::string content = hourly_header();
		char buf[128];
		for (const auto &r : rs) {
			std::snprintf(buf, sizeof buf, "%s,%d,%s,%.6f,%.6f,%.6f\n", format_date(r.date).c_str(),
			              r.hour, r.zone.c_str(), r.demand_mw, r.dry_bulb_f, r.dew_point_f);
			content += buf;
		}
		return write_file(name, content);
	};

	auto ingested = ingest_hourly({write_rows(rows, "ordered.csv")});
	auto table = downsample_daily_peak(ingested);
	auto shuffled = rows;
	rng.shuffle(shuffled);
	auto table2 = downsample_daily_peak(ingest_hourly({write_rows(shuffled, "shuffled.csv")}));

	CHECK(table.peak_mw == table2.peak_mw);
	CHECK(table.dry_bulb == table2.dry_bulb);

	// brute force over the parsed records themselves
	auto brute_max = [&](const std::string &zone, const Date &date) {
		double best = -1.0;
		for (const auto &r : ingested.records) {
			if (r.zone == zone && r.date == date && r.demand_mw > best) {
				best = r.demand_mw;
			}
		}
		return best;
	};
	for (std::size_t d = 0; d < table.n_days(); ++d) {
		for (int z = 0; z < table.n_zones(); ++z) {
			CHECK(table.peak(d, z) ==
			      brute_max(table.zones[static_cast<std::size_t>(z)], table.dates[d]));
		}
	}
}

TEST_CASE("a zone-day gap is an error listing the missing day") {
	std::string content = hourly_header();
	content += "2021-06-01,1,CT,10,60,50\n";
	content += "2021-06-03,1,CT,10,60,50\n"; // June 2nd missing
	CHECK_THROWS_WITH_AS(downsample_daily_peak(ingest_hourly({write_file("gap.csv", content)})),
	                     doctest::Contains("2021-06-02"), DataError);
}

TEST_CASE("splits") {
	SyntheticSpec spec;
	spec.n_days = 4018; // 2011-01-01 .. 2021-12-31
	spec.n_zones = 1;
	spec.seed = 3;
	auto table = generate_synthetic(spec);
	REQUIRE(table.dates.back() == Date{2021, 12, 31});

	SUBCASE("year split: 2011-2020 train/val, 2021 test") {
		auto split = split_by_year(table, 2020, 2021);
		CHECK(split.train.n_days() + split.validation.n_days() == 3653);
		CHECK(split.train.n_days() == 2922); // floor(3653 * 0.8)
		CHECK(split.validation.n_days() == 731);
		CHECK(split.test.n_days() == 365);
		CHECK(split.test.dates.front() == Date{2021, 1, 1});
		CHECK(split.train.dates.front() == Date{2011, 1, 1});
		CHECK(split.train.dates.back() < split.validation.dates.front());
		CHECK(split.validation.dates.back() < split.test.dates.front());
	}
	SUBCASE("missing test year is an error") {
		auto head = table.slice(0, 365); // 2011 only
		CHECK_THROWS_AS(split_by_year(head, 2020, 2021), DataError);
	}
	SUBCASE("100-day toy table with an 80-day pretest span splits 64/16/20") {
		auto toy = table.slice(0, 100);
		auto split = split_by_days(toy, 80);
		CHECK(split.train.n_days() == 64);
		CHECK(split.validation.n_days() == 16);
		CHECK(split.test.n_days() == 20);
	}
	SUBCASE("split partitions the table with no date overlap") {
		auto toy = table.slice(0, 237);
		auto split = split_by_days(toy, 150);
		CHECK(split.train.n_days() + split.validation.n_days() + split.test.n_days() ==
		      toy.n_days());
		CHECK(next_day(split.train.dates.back()) == split.validation.dates.front());
		CHECK(next_day(split.validation.dates.back()) == split.test.dates.front());
	}
}

TEST_CASE("synthetic generation") {
	SUBCASE("identical specs generate identical tables") {
		SyntheticSpec spec;
		spec.n_days = 400;
		spec.n_zones = 3;
		spec.seed = 11;
		auto a = generate_synthetic(spec);
		auto b = generate_synthetic(spec);
		CHECK(a.peak_mw == b.peak_mw);
		CHECK(a.dry_bulb == b.dry_bulb);
		CHECK(a.dew_point == b.dew_point);
		spec.seed = 12;
		auto c = generate_synthetic(spec);
		CHECK(a.peak_mw != c.peak_mw);
	}
	SUBCASE("with no signal weights and vanishing noise, y is the calendar seasonality") {
		SyntheticSpec spec;
		spec.n_days = 200;
		spec.n_zones = 2;
		spec.future_signal_weight = 0.0;
		spec.autoregressive_weight = 0.0;
		spec.noise_scale = 1e-9;
		spec.seed = 4;
		auto table = generate_synthetic(spec);
		for (std::size_t d = 0; d < table.n_days(); ++d) {
			for (int z = 0; z < 2; ++z) {
				const double want = synthetic_base(spec) + synthetic_season(spec, z, table.dates[d]);
				CHECK(table.peak(d, z) == doctest::Approx(want).epsilon(1e-6));
			}
		}
	}
	SUBCASE("residual std over 10,000 days matches the configured noise scale within 5%") {
		SyntheticSpec spec;
		spec.n_days = 10000;
		spec.n_zones = 1;
		spec.noise_scale = 1.0;
		spec.future_signal_weight = 0.8;
		spec.autoregressive_weight = 0.5;
		spec.seed = 9;
		auto table = generate_synthetic(spec);
		double ss = 0.0;
		std::int64_t n = 0;
		for (std::size_t d = 1; d < table.n_days(); ++d) {
			const double mean = synthetic_conditional_mean(
			    spec, 0, table.dates[d], table.weather(d, 0, false), table.weather(d, 0, true),
			    table.peak(d - 1, 0), table.dates[d - 1]);
			const double res = table.peak(d, 0) - mean;
			ss += res * res;
			++n;
		}
		const double sd = std::sqrt(ss / static_cast<double>(n));
		CHECK(sd == doctest::Approx(1.0).epsilon(0.05));
	}
}

TEST_CASE("feature table save/load round trip is stable and deterministic") {
	SyntheticSpec spec;
	spec.n_days = 120;
	spec.n_zones = 2;
	spec.seed = 21;
	auto table = generate_synthetic(spec);
	const auto p1 = temp_dir() + "/t1.csv";
	const auto p2 = temp_dir() + "/t2.csv";
	save_feature_table(table, p1);
	auto loaded = load_feature_table(p1);
	CHECK(loaded.n_days() == table.n_days());
	CHECK(loaded.zones == table.zones);
	for (std::size_t i = 0; i < table.peak_mw.size(); ++i) {
		CHECK(loaded.peak_mw[i] == doctest::Approx(table.peak_mw[i]).epsilon(1e-9));
	}
	save_feature_table(loaded, p2);
	std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
	std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
	std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
	CHECK(s1 == s2);
}

TEST_CASE("synthetic spec validation") {
	SyntheticSpec spec;
	spec.n_days = 1;
	CHECK_THROWS_AS(spec.validate(), UsageError);
	spec = SyntheticSpec{};
	spec.weather_persistence = 1.0;
	CHECK_THROWS_AS(spec.validate(), UsageError);
	spec = SyntheticSpec{};
	spec.noise_scale = 0.0;
	CHECK_THROWS_AS(spec.validate(), UsageError);
}
