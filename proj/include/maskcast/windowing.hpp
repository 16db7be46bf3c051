#pragma once

#include "maskcast/calendar.hpp"
#include "maskcast/dataio.hpp"
#include "maskcast/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace maskcast {

/// Sliding-window geometry: T steps of history, up to k+1 forecast steps.
struct WindowSpec {
	int history = 30;    // T
	int max_horizon = 59; // k
	int stride = 1;

	int window_len() const { return history + max_horizon + 1; }
	void validate() const;
};

/// Per-channel statistics of the continuous channels, computed on the training
/// split only. Channel order: per zone dry bulb, dew point (predictors), then
/// per zone peak demand (forecast variables).
struct NormStats {
	std::vector<std::string> names;
	std::vector<double> mean;
	std::vector<double> stdev; // population std, > 0
	std::vector<double> min;
	std::vector<double> max;
	int n_predictor = 0; // 2Z
	int n_forecast = 0;  // Z

	int channels() const { return n_predictor + n_forecast; }
	double normalize(double v, int channel) const { return (v - mean[channel]) / stdev[channel]; }
	double denormalize(double v, int channel) const { return v * stdev[channel] + mean[channel]; }
	double norm_min(int channel) const { return normalize(min[channel], channel); }
	double norm_max(int channel) const { return normalize(max[channel], channel); }
	int channel_index(const std::string &name) const; // throws DataError when unknown
	/// Channel index of zone z's forecast variable.
	int forecast_channel(int zone) const { return n_predictor + zone; }
};

NormStats compute_norm_stats(const FeatureTable &train);

/// One (T+k+1)-step slice: categorical indices plus z-scored continuous values.
struct Window {
	std::int64_t origin_index = 0; // table index of step T
	Date origin_date;
	int length = 0;
	int history = 0; // T; position T is the forecast origin
	int n_zones = 0;
	std::vector<std::int32_t> categorical; // length * 3: month-1, day-1, dow
	std::vector<float> predictors;         // length * 2Z, normalized
	std::vector<float> forecast;           // length * Z, normalized
};

std::int64_t window_count(std::int64_t table_len, const WindowSpec &spec);
std::vector<Window> make_windows(const FeatureTable &table, const WindowSpec &spec,
                                 const NormStats &stats);

/// Uniform mask length on {1, .., k+1}.
int sample_mask_length(Rng &rng, int max_horizon);

/// A batch of windows whose trailing mask_len steps of forecast channels were
/// replaced by uniform draws from the per-channel training range.
struct MaskedBatch {
	std::vector<const Window *> windows;
	int mask_len = 0;
	int length = 0;
	int n_zones = 0;
	std::vector<std::uint8_t> step_masked; // length flags, 1 for the last mask_len steps
	std::vector<float> forecast_filled;    // batch-major (B * length * Z)
};

MaskedBatch apply_mask(std::span<const Window *const> windows, int mask_len, Rng &rng,
                       const NormStats &stats);

/// Inverse z-scoring of a whole vector for one channel.
std::vector<double> denormalize(std::span<const double> values, const NormStats &stats,
                                const std::string &channel);

} // namespace maskcast
