#include "maskcast/forecast_eval.hpp"

#include "maskcast/errors.hpp"
#include "maskcast/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

namespace maskcast {
namespace {

std::string quantile_column(double tau) {
	char buf[32];
	std::snprintf(buf, sizeof buf, "%g", tau * 100.0);
	std::string s(buf);
	std::string out = "q";
	for (char c : s) {
		if (c != '.') {
			out.push_back(c);
		} else {
			out.push_back('_');
		}
	}
	return out;
}

} // namespace

ForecastRequest make_forecast_request(const FeatureTable &table, const NormStats &stats,
                                      const WindowSpec &spec, Method method,
                                      std::size_t origin_index, int steps) {
	spec.validate();
	if (steps < 1) {
		throw UsageError("forecast: requested length must be at least 1");
	}
	if (steps > spec.max_horizon + 1) {
		throw UsageError("forecast: requested length " + std::to_string(steps) +
		                 " exceeds the trained maximum of " + std::to_string(spec.max_horizon + 1));
	}
	const std::size_t n = table.n_days();
	if (origin_index + static_cast<std::size_t>(steps) > n) {
		std::string msg = "forecast: future predictors unavailable for:";
		const std::int64_t last = day_number(table.dates.back());
		for (std::size_t d = std::max(origin_index, n); d < origin_index + steps; ++d) {
			msg += " " + format_date(date_from_day_number(
			                 last + static_cast<std::int64_t>(d - n) + 1));
		}
		throw DataError(msg);
	}
	const int history_len =
	    method == Method::mmmpf ? spec.window_len() - steps : spec.history;
	if (origin_index < static_cast<std::size_t>(history_len)) {
		throw DataError("forecast: origin " + format_date(table.dates[origin_index]) + " needs " +
		                std::to_string(history_len) + " history days, table provides " +
		                std::to_string(origin_index));
	}

	const int zp = stats.n_predictor;
	const int zf = stats.n_forecast;
	ForecastRequest req;
	req.origin = table.dates[origin_index];
	req.steps = steps;
	req.history_len = history_len;
	req.zones = table.zones;
	req.hist_calendar.resize(static_cast<std::size_t>(history_len));
	req.hist_predictors.resize(static_cast<std::size_t>(history_len) * zp);
	req.hist_forecast.resize(static_cast<std::size_t>(history_len) * zf);
	for (int t = 0; t < history_len; ++t) {
		const std::size_t day = origin_index - static_cast<std::size_t>(history_len - t);
		req.hist_calendar[static_cast<std::size_t>(t)] = table.calendar[day];
		for (int c = 0; c < zp; ++c) {
			req.hist_predictors[static_cast<std::size_t>(t) * zp + c] =
			    static_cast<float>(stats.normalize(table.weather(day, c / 2, c % 2 == 1), c));
		}
		for (int s = 0; s < zf; ++s) {
			req.hist_forecast[static_cast<std::size_t>(t) * zf + s] = static_cast<float>(
			    stats.normalize(table.peak(day, s), stats.forecast_channel(s)));
		}
	}
	req.future_calendar.resize(static_cast<std::size_t>(steps));
	req.future_predictors.resize(static_cast<std::size_t>(steps) * zp);
	for (int h = 0; h < steps; ++h) {
		const std::size_t day = origin_index + static_cast<std::size_t>(h);
		req.future_calendar[static_cast<std::size_t>(h)] = table.calendar[day];
		for (int c = 0; c < zp; ++c) {
			req.future_predictors[static_cast<std::size_t>(h) * zp + c] =
			    static_cast<float>(stats.normalize(table.weather(day, c / 2, c % 2 == 1), c));
		}
	}
	return req;
}

int ForecastResult::median_index() const {
	int best = 0;
	for (std::size_t i = 1; i < quantile_levels.size(); ++i) {
		if (std::abs(quantile_levels[i] - 0.5) <
		    std::abs(quantile_levels[static_cast<std::size_t>(best)] - 0.5)) {
			best = static_cast<int>(i);
		}
	}
	return best;
}

namespace {

/// Denormalizes, clamps at 0 MW and sorts each cell's quantiles.
ForecastResult finalize_result(std::vector<double> normalized, const ForecastRequest &request,
                               const NormStats &stats, std::vector<std::string> zones,
                               std::vector<double> quantiles, const std::string &method,
                               const std::string &model_tag) {
	const int steps = request.steps;
	const auto nz = static_cast<int>(zones.size());
	const auto nq = static_cast<int>(quantiles.size());
	ForecastResult r;
	r.origin = request.origin;
	r.method = method;
	r.model_tag = model_tag;
	r.steps = steps;
	r.zones = std::move(zones);
	r.quantile_levels = std::move(quantiles);
	r.raw_values.resize(normalized.size());
	r.values.resize(normalized.size());
	bool clamped = false;
	std::vector<double> cell(static_cast<std::size_t>(nq));
	for (int h = 0; h < steps; ++h) {
		for (int z = 0; z < nz; ++z) {
			const int c = stats.forecast_channel(z);
			for (int q = 0; q < nq; ++q) {
				const auto idx = static_cast<std::size_t>((h * nz + z) * nq + q);
				const double mw = stats.denormalize(normalized[idx], c);
				r.raw_values[idx] = mw;
				cell[static_cast<std::size_t>(q)] = std::max(0.0, mw);
				clamped = clamped || mw < 0.0;
			}
			std::sort(cell.begin(), cell.end());
			for (int q = 0; q < nq; ++q) {
				r.values[static_cast<std::size_t>((h * nz + z) * nq + q)] =
				    cell[static_cast<std::size_t>(q)];
			}
		}
	}
	if (clamped) {
		std::cerr << "warning: negative demand forecast clamped to 0 MW (origin "
		          << format_date(r.origin) << ", method " << method << ")\n";
	}
	return r;
}

std::vector<double> read_rows(const nn::Value &out, std::int64_t row0, std::int64_t count) {
	std::vector<double> v(static_cast<std::size_t>(count * out->value.cols));
	for (std::int64_t i = 0; i < count; ++i) {
		const float *src = out->value.row(row0 + i);
		for (std::int64_t j = 0; j < out->value.cols; ++j) {
			v[static_cast<std::size_t>(i * out->value.cols + j)] = src[j];
		}
	}
	return v;
}

void fill_history_steps(StepBatch &sb, const ForecastRequest &req, const InputLayout &layout) {
	const int zp = layout.predictor_channels();
	const int zf = layout.forecast_channels();
	for (int t = 0; t < req.history_len; ++t) {
		const auto &cal = req.hist_calendar[static_cast<std::size_t>(t)];
		sb.set_categorical(0, t, cal[0], cal[1], cal[2]);
		float *cont = sb.continuous.row(t);
		std::copy(req.hist_predictors.begin() + static_cast<std::ptrdiff_t>(t) * zp,
		          req.hist_predictors.begin() + static_cast<std::ptrdiff_t>(t + 1) * zp, cont);
		std::copy(req.hist_forecast.begin() + static_cast<std::ptrdiff_t>(t) * zf,
		          req.hist_forecast.begin() + static_cast<std::ptrdiff_t>(t + 1) * zf, cont + zp);
	}
}

} // namespace

ForecastResult forecast_mmmpf(SequenceModel &model, const ForecastRequest &request,
                              const NormStats &stats, const WindowSpec &spec, Rng &fill_rng) {
	const InputLayout &layout = model.layout();
	const int zp = layout.predictor_channels();
	const int zf = layout.forecast_channels();
	if (request.history_len + request.steps != spec.window_len()) {
		throw UsageError("forecast_mmmpf: request geometry does not fill the trained window");
	}
	StepBatch sb(1, spec.window_len(), layout);
	fill_history_steps(sb, request, layout);
	for (int h = 0; h < request.steps; ++h) {
		const int t = request.history_len + h;
		const auto &cal = request.future_calendar[static_cast<std::size_t>(h)];
		sb.set_categorical(0, t, cal[0], cal[1], cal[2]);
		float *cont = sb.continuous.row(t);
		std::copy(request.future_predictors.begin() + static_cast<std::ptrdiff_t>(h) * zp,
		          request.future_predictors.begin() + static_cast<std::ptrdiff_t>(h + 1) * zp, cont);
		for (int s = 0; s < zf; ++s) {
			const int c = stats.forecast_channel(s);
			cont[zp + s] = fill_rng.uniform_f(static_cast<float>(stats.norm_min(c)),
			                                  static_cast<float>(stats.norm_max(c)));
		}
		sb.set_masked_marker(0, t);
	}
	nn::Value out = model.forward(sb, false, nullptr);
	auto normalized = read_rows(out, request.history_len, request.steps);
	return finalize_result(std::move(normalized), request, stats, layout.zones,
	                       model.config().quantile_levels, "mmmpf", model.tag());
}

ForecastResult forecast_rsf(SequenceModel &model, const ForecastRequest &request,
                            const NormStats &stats, const WindowSpec &spec) {
	const InputLayout &layout = model.layout();
	const int zp = layout.predictor_channels();
	const int zf = layout.forecast_channels();
	const int t_hist = spec.history;
	if (request.history_len != t_hist) {
		throw UsageError("forecast_rsf: request must carry exactly T history steps");
	}
	const auto nq = static_cast<int>(model.config().quantile_levels.size());

	// rolling history of (calendar, predictors, forecast), newest last
	std::vector<std::array<int, 3>> cal(request.hist_calendar);
	std::vector<float> preds(request.hist_predictors);
	std::vector<float> fc(request.hist_forecast);

	std::vector<double> normalized(static_cast<std::size_t>(request.steps) * zf * nq);
	const auto &taus = model.config().quantile_levels;
	int median = 0;
	for (std::size_t q = 1; q < taus.size(); ++q) {
		if (std::abs(taus[q] - 0.5) < std::abs(taus[static_cast<std::size_t>(median)] - 0.5)) {
			median = static_cast<int>(q);
		}
	}

	for (int h = 0; h < request.steps; ++h) {
		StepBatch sb(1, t_hist + 1, layout);
		const std::size_t total = cal.size();
		for (int t = 0; t < t_hist; ++t) {
			const std::size_t src = total - static_cast<std::size_t>(t_hist) + t;
			sb.set_categorical(0, t, cal[src][0], cal[src][1], cal[src][2]);
			float *cont = sb.continuous.row(t);
			std::copy(preds.begin() + static_cast<std::ptrdiff_t>(src) * zp,
			          preds.begin() + static_cast<std::ptrdiff_t>(src + 1) * zp, cont);
			std::copy(fc.begin() + static_cast<std::ptrdiff_t>(src) * zf,
			          fc.begin() + static_cast<std::ptrdiff_t>(src + 1) * zf, cont + zp);
		}
		sb.set_placeholder(0, t_hist); // the step being predicted carries no inputs
		nn::Value out = model.forward(sb, false, nullptr);
		const float *row = out->value.row(t_hist);
		for (int s = 0; s < zf; ++s) {
			for (int q = 0; q < nq; ++q) {
				normalized[static_cast<std::size_t>((h * zf + s) * nq + q)] = row[s * nq + q];
			}
		}
		// the median becomes pseudo-history paired with the day's known predictors
		cal.push_back(request.future_calendar[static_cast<std::size_t>(h)]);
		preds.insert(preds.end(),
		             request.future_predictors.begin() + static_cast<std::ptrdiff_t>(h) * zp,
		             request.future_predictors.begin() + static_cast<std::ptrdiff_t>(h + 1) * zp);
		for (int s = 0; s < zf; ++s) {
			fc.push_back(row[s * nq + median]);
		}
	}
	return finalize_result(std::move(normalized), request, stats, layout.zones,
	                       model.config().quantile_levels, "rsf", model.tag());
}

ForecastResult forecast_dmf(SequenceModel &model, const ForecastRequest &request,
                            const NormStats &stats, const WindowSpec &spec) {
	const InputLayout &layout = model.layout();
	if (request.history_len != spec.history) {
		throw UsageError("forecast_dmf: request must carry exactly T history steps");
	}
	StepBatch sb(1, spec.window_len(), layout);
	fill_history_steps(sb, request, layout);
	for (int t = spec.history; t < spec.window_len(); ++t) {
		sb.set_placeholder(0, t); // future predictors are not part of this formulation
	}
	nn::Value out = model.forward(sb, false, nullptr);
	auto normalized = read_rows(out, spec.history, request.steps);
	return finalize_result(std::move(normalized), request, stats, layout.zones,
	                       model.config().quantile_levels, "dmf", model.tag());
}

ForecastResult forecast_sbf(SequenceModel &fcnn, const ForecastRequest &request,
                            const NormStats &stats) {
	const InputLayout &layout = fcnn.layout();
	const int zp = layout.predictor_channels();
	StepBatch sb(request.steps, 1, layout);
	for (int h = 0; h < request.steps; ++h) {
		const auto &cal = request.future_calendar[static_cast<std::size_t>(h)];
		sb.set_categorical(h, 0, cal[0], cal[1], cal[2]);
		float *cont = sb.continuous.row(h);
		std::copy(request.future_predictors.begin() + static_cast<std::ptrdiff_t>(h) * zp,
		          request.future_predictors.begin() + static_cast<std::ptrdiff_t>(h + 1) * zp, cont);
	}
	nn::Value out = fcnn.forward(sb, false, nullptr);
	auto normalized = read_rows(out, 0, request.steps);
	return finalize_result(std::move(normalized), request, stats, layout.zones,
	                       fcnn.config().quantile_levels, "sbf", fcnn.tag());
}

ForecastResult forecast_sbf(const LinearModel &linear, const ForecastRequest &request,
                            const NormStats &stats) {
	const int zp = stats.n_predictor;
	const int zf = stats.n_forecast;
	std::vector<double> normalized(static_cast<std::size_t>(request.steps) * zf);
	std::vector<double> weather(static_cast<std::size_t>(zp));
	for (int h = 0; h < request.steps; ++h) {
		for (int c = 0; c < zp; ++c) {
			weather[static_cast<std::size_t>(c)] =
			    request.future_predictors[static_cast<std::size_t>(h) * zp + c];
		}
		auto row = sbf_design_row(request.future_calendar[static_cast<std::size_t>(h)], weather);
		auto y = linear.predict(row);
		for (int s = 0; s < zf; ++s) {
			normalized[static_cast<std::size_t>(h * zf + s)] = y[static_cast<std::size_t>(s)];
		}
	}
	std::vector<std::string> zones = request.zones;
	for (int s = static_cast<int>(zones.size()); s < zf; ++s) {
		zones.push_back("Z" + std::to_string(s + 1));
	}
	return finalize_result(std::move(normalized), request, stats, std::move(zones), {0.5}, "sbf",
	                       architecture_name(linear.variant));
}

double mape(std::span<const double> pred, std::span<const double> actual) {
	if (pred.size() != actual.size() || pred.empty()) {
		throw UsageError("mape: vectors must be nonempty and equal length");
	}
	double sum = 0.0;
	for (std::size_t i = 0; i < pred.size(); ++i) {
		if (actual[i] == 0.0) {
			throw DataError("mape: zero actual at index " + std::to_string(i));
		}
		sum += std::abs(pred[i] - actual[i]) / std::abs(actual[i]);
	}
	return 100.0 * sum / static_cast<double>(pred.size());
}

std::vector<double> EvalReport::per_horizon_mape() const {
	const auto nz = static_cast<int>(zones.size());
	std::vector<double> out(static_cast<std::size_t>(horizons), 0.0);
	for (int h = 0; h < horizons; ++h) {
		double s = 0.0;
		for (int z = 0; z < nz; ++z) {
			s += cell_mape[static_cast<std::size_t>(z) * horizons + h];
		}
		out[static_cast<std::size_t>(h)] = s / nz;
	}
	return out;
}

EvalReport backtest(const std::string &method, const std::string &model_tag,
                    const FeatureTable &table, const WindowSpec &spec, const ForecastFn &forecast) {
	spec.validate();
	const auto n = static_cast<std::int64_t>(table.n_days());
	if (n < spec.history + 1) {
		throw DataError("backtest: table has " + std::to_string(n) + " days, needs at least " +
		                std::to_string(spec.history + 1) + " (T+1)");
	}
	const int full = spec.max_horizon + 1;
	std::vector<std::int64_t> origins;
	for (std::int64_t p = spec.history; p < n; ++p) {
		origins.push_back(p);
	}

	std::vector<ForecastResult> results(origins.size());
	std::mutex err_mu;
	std::exception_ptr first_error;
	parallel_for(static_cast<std::int64_t>(origins.size()), [&](std::int64_t b, std::int64_t e) {
		for (std::int64_t i = b; i < e; ++i) {
			try {
				const std::int64_t p = origins[static_cast<std::size_t>(i)];
				const int steps = static_cast<int>(std::min<std::int64_t>(full, n - p));
				results[static_cast<std::size_t>(i)] = forecast(static_cast<std::size_t>(p), steps);
			} catch (...) {
				std::lock_guard<std::mutex> lk(err_mu);
				if (!first_error) {
					first_error = std::current_exception();
				}
				return;
			}
		}
	});
	if (first_error) {
		std::rethrow_exception(first_error);
	}

	EvalReport rep;
	rep.method = method;
	rep.model_tag = model_tag;
	rep.zones = table.zones;
	rep.quantile_levels = results.front().quantile_levels;
	rep.horizons = full;
	rep.n_origins = origins.size();

	const auto nz = static_cast<int>(table.zones.size());
	const auto nq = static_cast<int>(rep.quantile_levels.size());
	const int median = results.front().median_index();

	rep.cell_mape.assign(static_cast<std::size_t>(nz) * full, 0.0);
	rep.cell_count.assign(static_cast<std::size_t>(nz) * full, 0);
	rep.pinball_per_tau.assign(static_cast<std::size_t>(nq), 0.0);
	std::int64_t total_tuples = 0;

	int lo_q = -1, hi_q = -1;
	for (int q = 0; q < nq; ++q) {
		if (std::abs(rep.quantile_levels[static_cast<std::size_t>(q)] - 0.05) < 1e-9) {
			lo_q = q;
		}
		if (std::abs(rep.quantile_levels[static_cast<std::size_t>(q)] - 0.95) < 1e-9) {
			hi_q = q;
		}
	}
	std::int64_t covered = 0;

	for (std::size_t i = 0; i < results.size(); ++i) {
		const auto &r = results[i];
		const std::int64_t p = origins[i];
		for (int h = 0; h < r.steps; ++h) {
			for (int z = 0; z < nz; ++z) {
				EvalReport::Pair pair;
				pair.origin_index = p;
				pair.horizon = h + 1;
				pair.zone = z;
				pair.actual = table.peak(static_cast<std::size_t>(p + h), z);
				pair.pred.resize(static_cast<std::size_t>(nq));
				for (int q = 0; q < nq; ++q) {
					pair.pred[static_cast<std::size_t>(q)] = r.value(h, z, q);
				}
				if (pair.actual == 0.0) {
					throw DataError("backtest: zero actual demand at " +
					                format_date(table.dates[static_cast<std::size_t>(p + h)]));
				}
				const auto cell = static_cast<std::size_t>(z) * full + h;
				rep.cell_mape[cell] +=
				    std::abs(pair.pred[static_cast<std::size_t>(median)] - pair.actual) /
				    std::abs(pair.actual);
				rep.cell_count[cell] += 1;
				for (int q = 0; q < nq; ++q) {
					rep.pinball_per_tau[static_cast<std::size_t>(q)] +=
					    pinball_loss(pair.actual, pair.pred[static_cast<std::size_t>(q)],
					                 rep.quantile_levels[static_cast<std::size_t>(q)]);
				}
				if (lo_q >= 0 && hi_q >= 0 &&
				    pair.pred[static_cast<std::size_t>(lo_q)] <= pair.actual &&
				    pair.actual <= pair.pred[static_cast<std::size_t>(hi_q)]) {
					++covered;
				}
				++total_tuples;
				rep.pairs.push_back(std::move(pair));
			}
		}
	}

	double cell_sum = 0.0;
	for (std::size_t c = 0; c < rep.cell_mape.size(); ++c) {
		if (rep.cell_count[c] == 0) {
			throw DataError("backtest: horizon cell with no origins; table too short");
		}
		rep.cell_mape[c] = 100.0 * rep.cell_mape[c] / static_cast<double>(rep.cell_count[c]);
		cell_sum += rep.cell_mape[c];
	}
	rep.aggregate_mape = cell_sum / static_cast<double>(rep.cell_mape.size());
	for (auto &p : rep.pinball_per_tau) {
		p /= static_cast<double>(total_tuples);
	}
	if (lo_q >= 0 && hi_q >= 0) {
		rep.coverage_05_95 = static_cast<double>(covered) / static_cast<double>(total_tuples);
	}
	return rep;
}

ForecastFn make_forecaster(Method method, SequenceModel *model, const LinearModel *linear,
                           const FeatureTable &table, const NormStats &stats,
                           const WindowSpec &spec, std::uint64_t seed) {
	if (method == Method::sbf && linear != nullptr) {
		return [=, &table, &stats](std::size_t origin, int steps) {
			auto req = make_forecast_request(table, stats, spec, method, origin, steps);
			return forecast_sbf(*linear, req, stats);
		};
	}
	if (model == nullptr) {
		throw UsageError("make_forecaster: no model supplied");
	}
	switch (method) {
	case Method::mmmpf: {
		Rng base(seed);
		return [=, &table, &stats](std::size_t origin, int steps) {
			auto req = make_forecast_request(table, stats, spec, method, origin, steps);
			Rng fill = base.fork(static_cast<std::uint64_t>(origin));
			return forecast_mmmpf(*model, req, stats, spec, fill);
		};
	}
	case Method::rsf:
		return [=, &table, &stats](std::size_t origin, int steps) {
			auto req = make_forecast_request(table, stats, spec, method, origin, steps);
			return forecast_rsf(*model, req, stats, spec);
		};
	case Method::dmf:
		return [=, &table, &stats](std::size_t origin, int steps) {
			auto req = make_forecast_request(table, stats, spec, method, origin, steps);
			return forecast_dmf(*model, req, stats, spec);
		};
	case Method::sbf:
		return [=, &table, &stats](std::size_t origin, int steps) {
			auto req = make_forecast_request(table, stats, spec, method, origin, steps);
			return forecast_sbf(*model, req, stats);
		};
	}
	throw UsageError("make_forecaster: unsupported method");
}

double coverage(const EvalReport &report, double lo_tau, double hi_tau) {
	int lo = -1, hi = -1;
	for (std::size_t q = 0; q < report.quantile_levels.size(); ++q) {
		if (std::abs(report.quantile_levels[q] - lo_tau) < 1e-9) {
			lo = static_cast<int>(q);
		}
		if (std::abs(report.quantile_levels[q] - hi_tau) < 1e-9) {
			hi = static_cast<int>(q);
		}
	}
	if (lo < 0 || hi < 0) {
		throw DataError("coverage: requested quantile level not present in report");
	}
	if (report.pairs.empty()) {
		throw DataError("coverage: empty report");
	}
	std::int64_t covered = 0;
	for (const auto &p : report.pairs) {
		if (p.pred[static_cast<std::size_t>(lo)] <= p.actual &&
		    p.actual <= p.pred[static_cast<std::size_t>(hi)]) {
			++covered;
		}
	}
	return static_cast<double>(covered) / static_cast<double>(report.pairs.size());
}

void emit_report(const EvalReport &report, const FeatureTable &table, const std::string &out_dir) {
	namespace fs = std::filesystem;
	std::error_code ec;
	fs::create_directories(out_dir, ec);
	char buf[256];

	{
		std::ofstream out(out_dir + "/cells.csv", std::ios::binary);
		if (!out) {
			throw DataError("cannot write '" + out_dir + "/cells.csv'");
		}
		out << "method,model,zone,horizon,mape,origins\n";
		for (std::size_t z = 0; z < report.zones.size(); ++z) {
			for (int h = 1; h <= report.horizons; ++h) {
				std::snprintf(buf, sizeof buf, "%s,%s,%s,%d,%.6f,%lld\n", report.method.c_str(),
				              report.model_tag.c_str(), report.zones[z].c_str(), h,
				              report.cell(static_cast<int>(z), h),
				              static_cast<long long>(
				                  report.cell_count[z * static_cast<std::size_t>(report.horizons) +
				                                    static_cast<std::size_t>(h - 1)]));
				out << buf;
			}
		}
	}
	{
		std::ofstream out(out_dir + "/per_horizon.csv", std::ios::binary);
		if (!out) {
			throw DataError("cannot write '" + out_dir + "/per_horizon.csv'");
		}
		out << "horizon,mape\n";
		auto ph = report.per_horizon_mape();
		for (int h = 1; h <= report.horizons; ++h) {
			std::snprintf(buf, sizeof buf, "%d,%.6f\n", h, ph[static_cast<std::size_t>(h - 1)]);
			out << buf;
		}
	}
	{
		// fan chart for the earliest origin
		std::ofstream out(out_dir + "/fan.csv", std::ios::binary);
		if (!out) {
			throw DataError("cannot write '" + out_dir + "/fan.csv'");
		}
		out << "date,zone,actual";
		for (double tau : report.quantile_levels) {
			out << "," << quantile_column(tau);
		}
		out << "\n";
		if (!report.pairs.empty()) {
			const std::int64_t origin = report.pairs.front().origin_index;
			for (const auto &p : report.pairs) {
				if (p.origin_index != origin) {
					continue;
				}
				const auto day = static_cast<std::size_t>(origin + p.horizon - 1);
				out << format_date(table.dates[day]) << ","
				    << report.zones[static_cast<std::size_t>(p.zone)];
				std::snprintf(buf, sizeof buf, ",%.6f", p.actual);
				out << buf;
				for (double v : p.pred) {
					std::snprintf(buf, sizeof buf, ",%.6f", v);
					out << buf;
				}
				out << "\n";
			}
		}
	}
	{
		nlohmann::json j;
		j["method"] = report.method;
		j["model"] = report.model_tag;
		j["aggregate_mape"] = report.aggregate_mape;
		j["horizons"] = report.horizons;
		j["zones"] = report.zones;
		j["origins"] = report.n_origins;
		nlohmann::json pin;
		for (std::size_t q = 0; q < report.quantile_levels.size(); ++q) {
			pin[quantile_column(report.quantile_levels[q])] = report.pinball_per_tau[q];
		}
		j["mean_pinball"] = pin;
		if (report.coverage_05_95) {
			j["coverage_05_95"] = *report.coverage_05_95;
		}
		std::ofstream out(out_dir + "/summary.json", std::ios::binary);
		if (!out) {
			throw DataError("cannot write '" + out_dir + "/summary.json'");
		}
		out << j.dump(2) << "\n";
	}
}

void emit_fan_chart(const ForecastResult &result, const FeatureTable *table,
                    const std::string &path) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw DataError("cannot write '" + path + "'");
	}
	out << "date,zone,actual";
	for (double tau : result.quantile_levels) {
		out << "," << quantile_column(tau);
	}
	out << "\n";
	char buf[64];
	const std::int64_t origin_day = day_number(result.origin);
	for (int h = 0; h < result.steps; ++h) {
		const Date date = date_from_day_number(origin_day + h);
		for (std::size_t z = 0; z < result.zones.size(); ++z) {
			out << format_date(date) << "," << result.zones[z];
			bool have_actual = false;
			if (table != nullptr && !table->dates.empty()) {
				const std::int64_t first = day_number(table->dates.front());
				const std::int64_t idx = origin_day + h - first;
				if (idx >= 0 && idx < static_cast<std::int64_t>(table->n_days())) {
					std::snprintf(buf, sizeof buf, ",%.6f",
					              table->peak(static_cast<std::size_t>(idx), static_cast<int>(z)));
					out << buf;
					have_actual = true;
				}
			}
			if (!have_actual) {
				out << ",";
			}
			for (std::size_t q = 0; q < result.quantile_levels.size(); ++q) {
				std::snprintf(buf, sizeof buf, ",%.6f",
				              result.value(h, static_cast<int>(z), static_cast<int>(q)));
				out << buf;
			}
			out << "\n";
		}
	}
}

} // namespace maskcast
