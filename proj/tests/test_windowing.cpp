#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "maskcast/dataio.hpp"
#include "maskcast/errors.hpp"
#include "maskcast/windowing.hpp"

#include <cmath>

using namespace maskcast;

namespace {

FeatureTable synthetic_table(std::size_t days, int zones, std::uint64_t seed = 1) {
	SyntheticSpec spec;
	spec.n_days = days;
	spec.n_zones = zones;
	spec.seed = seed;
	return generate_synthetic(spec);
}

/// Stats with a chosen normalized fill range for the masking oracle.
NormStats manual_stats(int zones, double mean, double stdev, double lo, double hi) {
	NormStats st;
	st.n_predictor = 2 * zones;
	st.n_forecast = zones;
	const int channels = st.channels();
	for (int c = 0; c < channels; ++c) {
		st.names.push_back("ch" + std::to_string(c));
		st.mean.push_back(mean);
		st.stdev.push_back(stdev);
		st.min.push_back(lo);
		st.max.push_back(hi);
	}
	return st;
}

} // namespace

TEST_CASE("norm stats on a two-point channel") {
	FeatureTable table;
	table.zones = {"Z1"};
	table.dates = {Date{2020, 1, 1}, Date{2020, 1, 2}};
	table.calendar = {{1, 1, 2}, {1, 2, 3}};
	table.dry_bulb = {0.0, 2.0};
	table.dew_point = {-5.0, 5.0};
	table.peak_mw = {100.0, 200.0};
	auto st = compute_norm_stats(table);
	const int c = st.channel_index("dry_bulb[Z1]");
	CHECK(st.mean[c] == 1.0);
	CHECK(st.stdev[c] == 1.0); // population std
	CHECK(st.min[c] == 0.0);
	CHECK(st.max[c] == 2.0);
	CHECK(st.channel_index("peak[Z1]") == 2);
	CHECK_THROWS_AS(st.channel_index("peak[Z9]"), DataError);
}

TEST_CASE("constant channels are rejected by name") {
	FeatureTable table;
	table.zones = {"Z1"};
	table.dates = {Date{2020, 1, 1}, Date{2020, 1, 2}};
	table.calendar = {{1, 1, 2}, {1, 2, 3}};
	table.dry_bulb = {3.0, 3.0};
	table.dew_point = {-5.0, 5.0};
	table.peak_mw = {100.0, 200.0};
	CHECK_THROWS_WITH_AS(compute_norm_stats(table), doctest::Contains("dry_bulb[Z1]"), DataError);
}

TEST_CASE("norm stats match an independent recomputation on 1,000 random values") {
	auto table = synthetic_table(1000, 1, 13);
	auto st = compute_norm_stats(table);
	const int c = st.channel_index("peak[Z1]");
	double sum = 0.0, lo = table.peak(0, 0), hi = lo;
	for (std::size_t d = 0; d < 1000; ++d) {
		sum += table.peak(d, 0);
		lo = std::min(lo, table.peak(d, 0));
		hi = std::max(hi, table.peak(d, 0));
	}
	const double mean = sum / 1000.0;
	double ss = 0.0;
	for (std::size_t d = 0; d < 1000; ++d) {
		ss += (table.peak(d, 0) - mean) * (table.peak(d, 0) - mean);
	}
	CHECK(st.mean[c] == doctest::Approx(mean).epsilon(1e-12));
	CHECK(st.stdev[c] == doctest::Approx(std::sqrt(ss / 1000.0)).epsilon(1e-12));
	CHECK(st.min[c] == lo);
	CHECK(st.max[c] == hi);
}

TEST_CASE("window counts") {
	WindowSpec spec;
	spec.history = 30;
	spec.max_horizon = 59;
	CHECK(window_count(90, spec) == 1);
	CHECK(window_count(100, spec) == 11);
	CHECK(window_count(3653, spec) == 3564);
	CHECK(window_count(89, spec) == 0);

	SUBCASE("formula agrees with brute-force enumeration") {
		for (int history : {2, 5}) {
			for (int horizon : {0, 3}) {
				for (int stride : {1, 2, 3}) {
					WindowSpec s;
					s.history = history;
					s.max_horizon = horizon;
					s.stride = stride;
					const int len = s.window_len();
					for (int table_len = len; table_len < len + 13; ++table_len) {
						std::int64_t brute = 0;
						for (int begin = 0; begin + len <= table_len; begin += stride) {
							++brute;
						}
						CHECK(window_count(table_len, s) == brute);
					}
				}
			}
		}
	}
}

TEST_CASE("make_windows slices, z-scores and rejects short tables") {
	auto table = synthetic_table(100, 2, 5);
	auto st = compute_norm_stats(table);
	WindowSpec spec;
	spec.history = 30;
	spec.max_horizon = 59;
	auto windows = make_windows(table, spec, st);
	REQUIRE(windows.size() == 11);
	CHECK(windows[0].origin_index == 30);
	CHECK(windows[0].origin_date == table.dates[30]);
	CHECK(windows[0].length == 90);
	CHECK(windows[0].history == 30);

	// spot-check the normalization of a forecast entry
	const int z = 1;
	const double expect = st.normalize(table.peak(7, z), st.forecast_channel(z));
	CHECK(windows[0].forecast[7 * 2 + z] == doctest::Approx(expect).epsilon(1e-6));
	// categorical indices are zero-based
	CHECK(windows[0].categorical[0] == table.calendar[0][0] - 1);

	WindowSpec big;
	big.history = 90;
	big.max_horizon = 59;
	CHECK_THROWS_WITH_AS(make_windows(table, big, st), doctest::Contains("150"), DataError);
}

TEST_CASE("mask length sampling") {
	SUBCASE("k = 0 always yields 1") {
		Rng rng(1);
		for (int i = 0; i < 50; ++i) {
			CHECK(sample_mask_length(rng, 0) == 1);
		}
	}
	SUBCASE("uniform frequencies over {1..60} within 5 sigma") {
		Rng rng(2);
		const int draws = 100000;
		std::vector<int> count(61, 0);
		for (int i = 0; i < draws; ++i) {
			const int v = sample_mask_length(rng, 59);
			REQUIRE(v >= 1);
			REQUIRE(v <= 60);
			count[static_cast<std::size_t>(v)] += 1;
		}
		const double p = 1.0 / 60.0;
		const double sigma = std::sqrt(draws * p * (1.0 - p));
		for (int v = 1; v <= 60; ++v) {
			CHECK(std::abs(count[static_cast<std::size_t>(v)] - draws * p) <= 5.0 * sigma);
		}
	}
	SUBCASE("seeded draws replay") {
		Rng a(42), b(42);
		for (int i = 0; i < 200; ++i) {
			CHECK(sample_mask_length(a, 59) == sample_mask_length(b, 59));
		}
	}
}

TEST_CASE("apply_mask boundaries and bit-exactness") {
	auto table = synthetic_table(120, 2, 7);
	auto st = compute_norm_stats(table);
	WindowSpec spec;
	spec.history = 10;
	spec.max_horizon = 9;
	auto windows = make_windows(table, spec, st);
	std::vector<const Window *> ptrs;
	for (const auto &w : windows) {
		ptrs.push_back(&w);
	}
	const int len = spec.window_len();
	const int z = 2;

	SUBCASE("full mask touches exactly the future block") {
		Rng rng(3);
		auto mb = apply_mask(ptrs, spec.max_horizon + 1, rng, st);
		for (int t = 0; t < len; ++t) {
			CHECK(static_cast<int>(mb.step_masked[static_cast<std::size_t>(t)]) ==
			      (t >= spec.history ? 1 : 0));
		}
		// history forecast values bit-identical
		for (std::size_t b = 0; b < ptrs.size(); ++b) {
			for (int t = 0; t < spec.history; ++t) {
				for (int s = 0; s < z; ++s) {
					CHECK(mb.forecast_filled[(b * len + static_cast<std::size_t>(t)) * z +
					                         static_cast<std::size_t>(s)] ==
					      ptrs[b]->forecast[static_cast<std::size_t>(t) * z +
					                        static_cast<std::size_t>(s)]);
				}
			}
		}
	}
	SUBCASE("mask of one touches only the final step, exactly l_m * m scalars differ") {
		Rng rng(4);
		auto mb = apply_mask(ptrs, 1, rng, st);
		std::int64_t diffs = 0;
		for (std::size_t b = 0; b < ptrs.size(); ++b) {
			for (int t = 0; t < len; ++t) {
				for (int s = 0; s < z; ++s) {
					const float got = mb.forecast_filled[(b * len + static_cast<std::size_t>(t)) * z +
					                                     static_cast<std::size_t>(s)];
					const float src = ptrs[b]->forecast[static_cast<std::size_t>(t) * z +
					                                    static_cast<std::size_t>(s)];
					if (got != src) {
						++diffs;
						CHECK(t == len - 1);
					}
				}
			}
		}
		CHECK(diffs == static_cast<std::int64_t>(ptrs.size()) * 1 * z);
	}
	SUBCASE("mask length bounds") {
		Rng rng(5);
		CHECK_THROWS_AS(apply_mask(ptrs, 0, rng, st), UsageError);
		CHECK_THROWS_AS(apply_mask(ptrs, spec.max_horizon + 2, rng, st), UsageError);
	}
	SUBCASE("equal seeds give equal masked batches") {
		Rng a(9), b(9);
		auto ma = apply_mask(ptrs, 5, a, st);
		auto mb = apply_mask(ptrs, 5, b, st);
		CHECK(ma.forecast_filled == mb.forecast_filled);
	}
	SUBCASE("predictors are never stored in the masked batch at all") {
		// masking only rewrites forecast channels; predictor data lives in the
		// window and is shared untouched
		Rng rng(6);
		auto before = ptrs[0]->predictors;
		auto mb = apply_mask(ptrs, 5, rng, st);
		CHECK(ptrs[0]->predictors == before);
	}
}

TEST_CASE("masked fills follow the per-channel uniform range") {
	// normalized range [-2, 3]: mean 40, std 20, raw range [0, 100]
	auto st = manual_stats(1, 40.0, 20.0, 0.0, 100.0);
	CHECK(st.norm_min(st.forecast_channel(0)) == doctest::Approx(-2.0));
	CHECK(st.norm_max(st.forecast_channel(0)) == doctest::Approx(3.0));

	Window w;
	w.length = 2;
	w.history = 1;
	w.n_zones = 1;
	w.categorical.assign(6, 0);
	w.predictors.assign(4, 0.0f);
	w.forecast.assign(2, 0.5f);
	std::vector<const Window *> ptrs(10000, &w);
	Rng rng(31);
	auto mb = apply_mask(ptrs, 1, rng, st);

	double sum = 0.0, lo = 1e9, hi = -1e9;
	for (std::size_t b = 0; b < ptrs.size(); ++b) {
		const double v = mb.forecast_filled[b * 2 + 1];
		sum += v;
		lo = std::min(lo, v);
		hi = std::max(hi, v);
	}
	const double mean = sum / 10000.0;
	CHECK(lo >= -2.0);
	CHECK(hi <= 3.0);
	// uniform(-2,3): mean 0.5, sd of the sample mean = 5/sqrt(12)/100
	const double sigma_mean = 5.0 / std::sqrt(12.0) / 100.0;
	CHECK(std::abs(mean - 0.5) <= 3.0 * sigma_mean);
}

TEST_CASE("denormalize inverts z-scoring") {
	auto st = manual_stats(1, 100.0, 10.0, 50.0, 150.0);
	CHECK(st.denormalize(0.0, 0) == 100.0);
	CHECK(st.denormalize(1.0, 0) == 110.0);

	std::vector<double> values;
	Rng rng(8);
	for (int i = 0; i < 1000; ++i) {
		values.push_back(rng.uniform(40.0, 160.0));
	}
	std::vector<double> norm;
	for (double v : values) {
		norm.push_back(st.normalize(v, 2));
	}
	auto back = denormalize(norm, st, "ch2");
	for (std::size_t i = 0; i < values.size(); ++i) {
		CHECK(std::abs(back[i] - values[i]) <= 1e-9 * std::abs(values[i]));
	}
	CHECK_THROWS_AS(denormalize(norm, st, "nope"), DataError);
}

TEST_CASE("window spec validation") {
	WindowSpec s;
	s.history = 0;
	CHECK_THROWS_AS(s.validate(), UsageError);
	s = WindowSpec{};
	s.max_horizon = -1;
	CHECK_THROWS_AS(s.validate(), UsageError);
	s = WindowSpec{};
	s.stride = 0;
	CHECK_THROWS_AS(s.validate(), UsageError);
	CHECK(WindowSpec{}.window_len() == 90); // paper defaults: T=30, k=59
}
