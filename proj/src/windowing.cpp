#include "maskcast/windowing.hpp"

#include "maskcast/errors.hpp"

#include <cmath>

namespace maskcast {

void WindowSpec::validate() const {
	if (history < 1) {
		throw UsageError("window: history must be at least 1 step");
	}
	if (max_horizon < 0) {
		throw UsageError("window: max horizon must be nonnegative");
	}
	if (stride < 1) {
		throw UsageError("window: stride must be at least 1");
	}
}

int NormStats::channel_index(const std::string &name) const {
	for (std::size_t i = 0; i < names.size(); ++i) {
		if (names[i] == name) {
			return static_cast<int>(i);
		}
	}
	throw DataError("unknown channel '" + name + "'");
}

NormStats compute_norm_stats(const FeatureTable &train) {
	if (train.n_days() == 0) {
		throw DataError("norm stats: empty training table");
	}
	const int z = train.n_zones();
	NormStats st;
	st.n_predictor = 2 * z;
	st.n_forecast = z;
	const int channels = st.channels();
	st.names.resize(channels);
	st.mean.assign(channels, 0.0);
	st.stdev.assign(channels, 0.0);
	st.min.assign(channels, 0.0);
	st.max.assign(channels, 0.0);
	for (int s = 0; s < z; ++s) {
		st.names[2 * s] = "dry_bulb[" + train.zones[s] + "]";
		st.names[2 * s + 1] = "dew_point[" + train.zones[s] + "]";
		st.names[2 * z + s] = "peak[" + train.zones[s] + "]";
	}

	auto channel_value = [&](int channel, std::size_t day) -> double {
		if (channel < st.n_predictor) {
			return train.weather(day, channel / 2, channel % 2 == 1);
		}
		return train.peak(day, channel - st.n_predictor);
	};

	const std::size_t n = train.n_days();
	for (int c = 0; c < channels; ++c) {
		double sum = 0.0, lo = channel_value(c, 0), hi = lo;
		for (std::size_t d = 0; d < n; ++d) {
			const double v = channel_value(c, d);
			sum += v;
			lo = std::min(lo, v);
			hi = std::max(hi, v);
		}
		const double mean = sum / static_cast<double>(n);
		double ss = 0.0;
		for (std::size_t d = 0; d < n; ++d) {
			const double dd = channel_value(c, d) - mean;
			ss += dd * dd;
		}
		const double stdev = std::sqrt(ss / static_cast<double>(n));
		if (!(stdev > 0.0)) {
			throw DataError("norm stats: constant channel " + st.names[c]);
		}
		st.mean[c] = mean;
		st.stdev[c] = stdev;
		st.min[c] = lo;
		st.max[c] = hi;
	}
	return st;
}

std::int64_t window_count(std::int64_t table_len, const WindowSpec &spec) {
	const std::int64_t len = spec.window_len();
	if (table_len < len) {
		return 0;
	}
	return (table_len - len) / spec.stride + 1;
}

std::vector<Window> make_windows(const FeatureTable &table, const WindowSpec &spec,
                                 const NormStats &stats) {
	spec.validate();
	const std::int64_t n = static_cast<std::int64_t>(table.n_days());
	const int len = spec.window_len();
	if (n < len) {
		throw DataError("make_windows: table has " + std::to_string(n) + " days, needs at least " +
		                std::to_string(len));
	}
	const int z = table.n_zones();
	if (stats.n_forecast != z) {
		throw DataError("make_windows: norm stats cover " + std::to_string(stats.n_forecast) +
		                " zones, table has " + std::to_string(z));
	}

	const std::int64_t count = window_count(n, spec);
	std::vector<Window> windows;
	windows.reserve(static_cast<std::size_t>(count));
	for (std::int64_t w = 0; w < count; ++w) {
		const std::int64_t begin = w * spec.stride;
		Window win;
		win.origin_index = begin + spec.history;
		win.origin_date = table.dates[static_cast<std::size_t>(win.origin_index)];
		win.length = len;
		win.history = spec.history;
		win.n_zones = z;
		win.categorical.resize(static_cast<std::size_t>(len) * 3);
		win.predictors.resize(static_cast<std::size_t>(len) * stats.n_predictor);
		win.forecast.resize(static_cast<std::size_t>(len) * stats.n_forecast);
		for (int t = 0; t < len; ++t) {
			const std::size_t day = static_cast<std::size_t>(begin + t);
			const auto &cal = table.calendar[day];
			win.categorical[3 * t + 0] = cal[0] - 1;
			win.categorical[3 * t + 1] = cal[1] - 1;
			win.categorical[3 * t + 2] = cal[2];
			for (int c = 0; c < stats.n_predictor; ++c) {
				const double v = table.weather(day, c / 2, c % 2 == 1);
				win.predictors[static_cast<std::size_t>(t) * stats.n_predictor + c] =
				    static_cast<float>(stats.normalize(v, c));
			}
			for (int s = 0; s < z; ++s) {
				const double v = table.peak(day, s);
				win.forecast[static_cast<std::size_t>(t) * z + s] =
				    static_cast<float>(stats.normalize(v, stats.forecast_channel(s)));
			}
		}
		windows.push_back(std::move(win));
	}
	return windows;
}

int sample_mask_length(Rng &rng, int max_horizon) {
	if (max_horizon < 0) {
		throw UsageError("sample_mask_length: max horizon must be nonnegative");
	}
	return static_cast<int>(rng.uniform_int(1, max_horizon + 1));
}

MaskedBatch apply_mask(std::span<const Window *const> windows, int mask_len, Rng &rng,
                       const NormStats &stats) {
	if (windows.empty()) {
		throw UsageError("apply_mask: empty batch");
	}
	const Window &first = *windows.front();
	const int len = first.length;
	const int z = first.n_zones;
	const int max_mask = len - first.history; // k+1
	if (mask_len < 1 || mask_len > max_mask) {
		throw UsageError("apply_mask: mask length " + std::to_string(mask_len) + " outside 1.." +
		                 std::to_string(max_mask));
	}

	MaskedBatch batch;
	batch.windows.assign(windows.begin(), windows.end());
	batch.mask_len = mask_len;
	batch.length = len;
	batch.n_zones = z;
	batch.step_masked.assign(static_cast<std::size_t>(len), 0);
	for (int t = len - mask_len; t < len; ++t) {
		batch.step_masked[static_cast<std::size_t>(t)] = 1;
	}
	batch.forecast_filled.resize(windows.size() * static_cast<std::size_t>(len) * z);

	std::size_t out = 0;
	for (const Window *w : windows) {
		if (w->length != len || w->n_zones != z || w->history != first.history) {
			throw UsageError("apply_mask: mixed window shapes in one batch");
		}
		std::copy(w->forecast.begin(), w->forecast.end(), batch.forecast_filled.begin() + out);
		for (int t = len - mask_len; t < len; ++t) {
			for (int s = 0; s < z; ++s) {
				const int c = stats.forecast_channel(s);
				batch.forecast_filled[out + static_cast<std::size_t>(t) * z + s] = rng.uniform_f(
				    static_cast<float>(stats.norm_min(c)), static_cast<float>(stats.norm_max(c)));
			}
		}
		out += static_cast<std::size_t>(len) * z;
	}
	return batch;
}

std::vector<double> denormalize(std::span<const double> values, const NormStats &stats,
                                const std::string &channel) {
	const int c = stats.channel_index(channel);
	std::vector<double> out;
	out.reserve(values.size());
	for (double v : values) {
		out.push_back(stats.denormalize(v, c));
	}
	return out;
}

} // namespace maskcast
