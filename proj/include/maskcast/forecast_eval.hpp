#pragma once

#include "maskcast/dataio.hpp"
#include "maskcast/models.hpp"
#include "maskcast/rng.hpp"
#include "maskcast/training.hpp"
#include "maskcast/windowing.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace maskcast {

/// History plus known-future predictors for one forecast origin. history_len
/// depends on the formulation: the masked task fills the whole trained window
/// (T + k + 1 - steps history days), the others need exactly T.
struct ForecastRequest {
	Date origin; // first forecasted day
	int steps = 1;
	int history_len = 0;
	std::vector<std::string> zones;
	std::vector<std::array<int, 3>> hist_calendar;
	std::vector<float> hist_predictors; // normalized, history_len * 2Z
	std::vector<float> hist_forecast;   // normalized, history_len * Z
	std::vector<std::array<int, 3>> future_calendar;
	std::vector<float> future_predictors; // normalized, steps * 2Z
};

/// Builds a request from a table; origin_index addresses the first forecast
/// day. Missing history or future predictor days raise DataError naming them.
ForecastRequest make_forecast_request(const FeatureTable &table, const NormStats &stats,
                                      const WindowSpec &spec, Method method,
                                      std::size_t origin_index, int steps);

/// Per-step, per-zone, per-quantile forecasts in MW. `values` carries the
/// monotone (crossing-fixed) quantiles, `raw_values` the model outputs.
struct ForecastResult {
	Date origin;
	std::string method;
	std::string model_tag;
	int steps = 0;
	std::vector<std::string> zones;
	std::vector<double> quantile_levels;
	std::vector<double> values;     // (steps, zones, Q)
	std::vector<double> raw_values; // (steps, zones, Q)

	double value(int step, int zone, int q) const {
		const auto nz = static_cast<std::int64_t>(zones.size());
		const auto nq = static_cast<std::int64_t>(quantile_levels.size());
		return values[static_cast<std::size_t>((step * nz + zone) * nq + q)];
	}
	/// Index of the tau closest to 0.5 (the point-forecast track).
	int median_index() const;
};

/// Flexible-horizon masked inference: one forward pass with the trailing
/// `steps` forecast entries random-filled.
ForecastResult forecast_mmmpf(SequenceModel &model, const ForecastRequest &request,
                              const NormStats &stats, const WindowSpec &spec, Rng &fill_rng);

/// Recursive rollout feeding the median back as pseudo-history.
ForecastResult forecast_rsf(SequenceModel &model, const ForecastRequest &request,
                            const NormStats &stats, const WindowSpec &spec);

/// Direct multi-step: one pass over history, future predictors never enter.
ForecastResult forecast_dmf(SequenceModel &model, const ForecastRequest &request,
                            const NormStats &stats, const WindowSpec &spec);

/// Sample-based: independent per-step application to each future day's x.
ForecastResult forecast_sbf(SequenceModel &fcnn, const ForecastRequest &request,
                            const NormStats &stats);
ForecastResult forecast_sbf(const LinearModel &linear, const ForecastRequest &request,
                            const NormStats &stats);

/// 100 * mean(|pred - actual| / |actual|); zero actuals are an error.
double mape(std::span<const double> pred, std::span<const double> actual);

struct EvalReport {
	std::string method;
	std::string model_tag;
	std::vector<std::string> zones;
	std::vector<double> quantile_levels;
	int horizons = 0;
	std::size_t n_origins = 0;

	struct Pair {
		std::int64_t origin_index;
		int horizon; // 1-based
		int zone;
		double actual;
		std::vector<double> pred; // per quantile, crossing-fixed MW
	};
	std::vector<Pair> pairs;

	// (zone, horizon) MAPE on the median track; count = contributing origins
	std::vector<double> cell_mape;
	std::vector<std::int64_t> cell_count;
	double aggregate_mape = 0.0; // mean of the cells
	std::vector<double> pinball_per_tau;
	std::optional<double> coverage_05_95;

	double cell(int zone, int horizon_1_based) const {
		return cell_mape[static_cast<std::size_t>(zone) * horizons +
		                 static_cast<std::size_t>(horizon_1_based - 1)];
	}
	/// MAPE per horizon averaged over zones.
	std::vector<double> per_horizon_mape() const;
};

using ForecastFn = std::function<ForecastResult(std::size_t origin_index, int steps)>;

/// Rolling-origin evaluation at stride 1: every day with T in-table history
/// days becomes an origin; one full-length forecast per origin, horizons past
/// the table end truncated. Parallel across origins with an order-independent
/// reduction.
EvalReport backtest(const std::string &method, const std::string &model_tag,
                    const FeatureTable &table, const WindowSpec &spec, const ForecastFn &forecast);

/// Forecast callable for the given formulation, with per-origin forked rngs so
/// parallel and serial runs agree.
ForecastFn make_forecaster(Method method, SequenceModel *model, const LinearModel *linear,
                           const FeatureTable &table, const NormStats &stats,
                           const WindowSpec &spec, std::uint64_t seed);

/// Fraction of (origin, horizon, zone) cells with lo <= actual <= hi.
double coverage(const EvalReport &report, double lo_tau, double hi_tau);

/// Writes cells.csv, per_horizon.csv, fan.csv (first origin) and summary.json.
void emit_report(const EvalReport &report, const FeatureTable &table, const std::string &out_dir);

/// Fan-chart CSV for one forecast; actuals written where the table has them.
void emit_fan_chart(const ForecastResult &result, const FeatureTable *table,
                    const std::string &path);

} // namespace maskcast
