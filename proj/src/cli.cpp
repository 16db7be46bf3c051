#include "maskcast/cli.hpp"

#include "maskcast/checkpoint.hpp"
#include "maskcast/errors.hpp"
#include "maskcast/forecast_eval.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace maskcast {
namespace {

using nlohmann::json;

// Seed streams: one experiment seed fans out into independent stages.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kBacktestStream = 3;
constexpr std::uint64_t kForecastStream = 4;

void reject_unknown_keys(const json &j, const std::string &where,
                         std::initializer_list<const char *> allowed) {
	for (auto it = j.begin(); it != j.end(); ++it) {
		bool ok = false;
		for (const char *k : allowed) {
			if (it.key() == k) {
				ok = true;
				break;
			}
		}
		if (!ok) {
			throw UsageError("config: unknown key '" + where + it.key() + "'");
		}
	}
}

SyntheticSpec synthetic_from_json(const json &j) {
	reject_unknown_keys(j, "data.synthetic.",
	                    {"n_days", "n_zones", "weather_persistence", "future_signal_weight",
	                     "autoregressive_weight", "noise_scale", "seed"});
	SyntheticSpec s;
	s.n_days = j.at("n_days").get<std::size_t>();
	s.n_zones = j.at("n_zones").get<int>();
	s.weather_persistence = j.value("weather_persistence", s.weather_persistence);
	s.future_signal_weight = j.value("future_signal_weight", s.future_signal_weight);
	s.autoregressive_weight = j.value("autoregressive_weight", s.autoregressive_weight);
	s.noise_scale = j.value("noise_scale", s.noise_scale);
	s.seed = j.value("seed", s.seed);
	return s;
}

} // namespace

std::string ExperimentConfig::checkpoint_path() const {
	return experiment_dir() + "/checkpoints/" + method_name(training.method) + "-" +
	       architecture_name(model.architecture) + ".ck.json";
}

void ExperimentConfig::validate() const {
	if (version != 1) {
		throw UsageError("config: unsupported version " + std::to_string(version));
	}
	if (experiment.empty() || experiment.find('/') != std::string::npos) {
		throw UsageError("config: experiment name must be a nonempty path-free token");
	}
	if (data_source != "synthetic" && data_source != "file") {
		throw UsageError("config: data.source must be 'synthetic' or 'file'");
	}
	if (data_source == "file" && data_path.empty()) {
		throw UsageError("config: data.path required when data.source is 'file'");
	}
	if (data_source == "synthetic" && !synthetic) {
		throw UsageError("config: data.synthetic block required when data.source is 'synthetic'");
	}
	if (split_mode != "days" && split_mode != "year") {
		throw UsageError("config: split.mode must be 'days' or 'year'");
	}
	window.validate();
	model.validate();
	training.validate();
}

ExperimentConfig load_config(const std::string &path) {
	std::ifstream in(path);
	if (!in) {
		throw UsageError("cannot open config '" + path + "'");
	}
	json j;
	try {
		in >> j;
	} catch (const std::exception &e) {
		throw UsageError("config '" + path + "': " + e.what());
	}

	reject_unknown_keys(j, "",
	                    {"version", "experiment", "seed", "output_dir", "data", "split", "window",
	                     "model", "training"});
	ExperimentConfig c;
	c.version = j.at("version").get<int>();
	c.experiment = j.at("experiment").get<std::string>();
	if (!j.contains("seed")) {
		throw UsageError("config: seed is mandatory");
	}
	c.seed = j.at("seed").get<std::uint64_t>();
	c.output_dir = j.value("output_dir", c.output_dir);

	const auto &data = j.at("data");
	reject_unknown_keys(data, "data.", {"source", "path", "synthetic"});
	c.data_source = data.at("source").get<std::string>();
	c.data_path = data.value("path", std::string{});
	if (data.contains("synthetic")) {
		c.synthetic = synthetic_from_json(data.at("synthetic"));
	}

	if (j.contains("split")) {
		const auto &split = j.at("split");
		reject_unknown_keys(split, "split.", {"mode", "test_days", "train_end_year", "test_year"});
		c.split_mode = split.at("mode").get<std::string>();
		c.test_days = split.value("test_days", c.test_days);
		c.train_end_year = split.value("train_end_year", c.train_end_year);
		c.test_year = split.value("test_year", c.test_year);
	}

	if (j.contains("window")) {
		const auto &w = j.at("window");
		reject_unknown_keys(w, "window.", {"history_days", "horizon_days", "stride"});
		c.window.history = w.value("history_days", c.window.history);
		if (w.contains("horizon_days")) {
			c.window.max_horizon = w.at("horizon_days").get<int>() - 1;
		}
		c.window.stride = w.value("stride", c.window.stride);
	}

	if (j.contains("model")) {
		const auto &m = j.at("model");
		reject_unknown_keys(
		    m, "model.",
		    {"architecture", "embedding_dim", "quantile_levels", "mask_indicator", "lstm_layers",
		     "lstm_hidden", "tcn_layers", "tcn_channels", "tcn_kernel", "tcn_dropout",
		     "transformer_dim", "transformer_ff_dim", "transformer_heads", "transformer_layers",
		     "transformer_dropout", "fcnn_layers", "fcnn_width", "ridge_lambda", "lasso_lambda"});
		c.model.architecture = parse_architecture(m.at("architecture").get<std::string>());
		c.model.embedding_dim = m.value("embedding_dim", c.model.embedding_dim);
		c.model.mask_indicator = m.value("mask_indicator", c.model.mask_indicator);
		if (m.contains("quantile_levels")) {
			c.model.quantile_levels = m.at("quantile_levels").get<std::vector<double>>();
		}
		c.model.lstm_layers = m.value("lstm_layers", c.model.lstm_layers);
		c.model.lstm_hidden = m.value("lstm_hidden", c.model.lstm_hidden);
		c.model.tcn_layers = m.value("tcn_layers", c.model.tcn_layers);
		c.model.tcn_channels = m.value("tcn_channels", c.model.tcn_channels);
		c.model.tcn_kernel = m.value("tcn_kernel", c.model.tcn_kernel);
		c.model.tcn_dropout = m.value("tcn_dropout", c.model.tcn_dropout);
		c.model.transformer_dim = m.value("transformer_dim", c.model.transformer_dim);
		c.model.transformer_ff_dim = m.value("transformer_ff_dim", c.model.transformer_ff_dim);
		c.model.transformer_heads = m.value("transformer_heads", c.model.transformer_heads);
		c.model.transformer_layers = m.value("transformer_layers", c.model.transformer_layers);
		c.model.transformer_dropout = m.value("transformer_dropout", c.model.transformer_dropout);
		c.model.fcnn_layers = m.value("fcnn_layers", c.model.fcnn_layers);
		c.model.fcnn_width = m.value("fcnn_width", c.model.fcnn_width);
		c.model.ridge_lambda = m.value("ridge_lambda", c.model.ridge_lambda);
		c.model.lasso_lambda = m.value("lasso_lambda", c.model.lasso_lambda);
	}

	if (j.contains("training")) {
		const auto &t = j.at("training");
		reject_unknown_keys(t, "training.",
		                    {"method", "learning_rate", "batch_size", "epochs", "grad_clip"});
		c.training.method = parse_method(t.at("method").get<std::string>());
		c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
		c.training.batch_size = t.value("batch_size", c.training.batch_size);
		c.training.epochs = t.value("epochs", c.training.epochs);
		c.training.grad_clip = t.value("grad_clip", c.training.grad_clip);
	}
	c.training.seed = Rng(c.seed).fork(kTrainStream).seed();
	c.validate();
	return c;
}

FeatureTable load_config_table(const ExperimentConfig &config) {
	if (config.data_source == "file") {
		return load_feature_table(config.data_path);
	}
	return generate_synthetic(*config.synthetic);
}

DatasetSplit split_config_table(const ExperimentConfig &config, const FeatureTable &table) {
	if (config.split_mode == "year") {
		return split_by_year(table, config.train_end_year, config.test_year);
	}
	if (config.test_days >= table.n_days()) {
		throw UsageError("config: split.test_days leaves no training data");
	}
	return split_by_days(table, table.n_days() - config.test_days);
}

void cmd_ingest(const std::vector<std::string> &files, const std::string &out_path) {
	if (files.empty()) {
		throw UsageError("ingest: at least one input file required");
	}
	IngestReport report;
	HourlyTable hourly = ingest_hourly(files, &report);
	FeatureTable table = downsample_daily_peak(hourly);
	save_feature_table(table, out_path);
	std::cout << report.summary();
	std::cout << "wrote " << table.n_days() << " days x " << table.n_zones() << " zones to "
	          << out_path << "\n";
}

void cmd_synth(const std::string &config_path, const std::string &out_path) {
	ExperimentConfig config = load_config(config_path);
	if (!config.synthetic) {
		throw UsageError("synth: config has no data.synthetic block");
	}
	FeatureTable table = generate_synthetic(*config.synthetic);
	save_feature_table(table, out_path);
	std::cout << "wrote " << table.n_days() << " days x " << table.n_zones() << " zones to "
	          << out_path << "\n";
}

namespace {

void ensure_dirs(const ExperimentConfig &config) {
	namespace fs = std::filesystem;
	std::error_code ec;
	fs::create_directories(config.experiment_dir() + "/checkpoints", ec);
	fs::create_directories(config.experiment_dir() + "/reports", ec);
	fs::create_directories(config.experiment_dir() + "/logs", ec);
}

} // namespace

void cmd_train(const std::string &config_path) {
	ExperimentConfig config = load_config(config_path);
	ensure_dirs(config);
	FeatureTable table = load_config_table(config);
	DatasetSplit split = split_config_table(config, table);

	NormStats stats = compute_norm_stats(split.train);
	InputLayout layout;
	layout.zones = table.zones;

	Checkpoint ck;
	ck.method = config.training.method;
	ck.model_config = config.model;
	ck.layout = layout;
	ck.window = config.window;
	ck.stats = stats;
	ck.seed = config.seed;

	const std::string log_path = config.experiment_dir() + "/logs/train-" +
	                             method_name(config.training.method) + "-" +
	                             architecture_name(config.model.architecture) + ".jsonl";

	if (config.training.method == Method::sbf && is_linear(config.model.architecture)) {
		const double lambda = config.model.architecture == Architecture::linear_ridge
		                          ? config.model.ridge_lambda
		                          : config.model.lasso_lambda;
		ck.linear = train_sbf_linear(config.model.architecture, split.train, stats, lambda);
		save_checkpoint(ck, config.checkpoint_path());
		std::cout << "fitted " << architecture_name(config.model.architecture) << " ("
		          << ck.linear->coef.rows << " features x " << ck.linear->coef.cols
		          << " zones) -> " << config.checkpoint_path() << "\n";
		return;
	}

	auto model = build_model(config.model, layout, Rng(config.seed).fork(kInitStream).seed());
	std::cout << "built " << model->tag() << " with " << model->parameter_count()
	          << " parameters\n";
	TrainingReport report;
	if (config.training.method == Method::sbf) {
		report = train_sbf_fcnn(*model, split.train, split.validation, stats, config.training);
	} else {
		auto train_windows = make_windows(split.train, config.window, stats);
		auto val_windows = make_windows(split.validation, config.window, stats);
		switch (config.training.method) {
		case Method::mmmpf:
			report = train_mmmpf(*model, train_windows, val_windows, stats, config.window,
			                     config.training);
			break;
		case Method::rsf:
			report =
			    train_rsf(*model, train_windows, val_windows, stats, config.window, config.training);
			break;
		case Method::dmf:
			report =
			    train_dmf(*model, train_windows, val_windows, stats, config.window, config.training);
			break;
		default:
			break;
		}
	}
	ck.model = std::move(model);
	ck.best_val_loss = report.best_val_loss;
	save_checkpoint(ck, config.checkpoint_path());
	report.write_jsonl(log_path);
	char buf[128];
	std::snprintf(buf, sizeof buf, "best validation loss %.6f at epoch %d\n", report.best_val_loss,
	              report.best_epoch);
	std::cout << buf << "checkpoint " << config.checkpoint_path() << "\n";
}

namespace {

/// Test slice extended back by T days so every test day becomes an origin.
FeatureTable backtest_slice(const ExperimentConfig &config, const FeatureTable &table,
                            const DatasetSplit &split) {
	const std::size_t test_days = split.test.n_days();
	const auto test_start = static_cast<std::size_t>(day_number(split.test.dates.front()) -
	                                                 day_number(table.dates.front()));
	const auto history = static_cast<std::size_t>(config.window.history);
	if (test_start < history) {
		throw DataError("backtest: not enough pre-test days to seed the history window");
	}
	return table.slice(test_start - history, test_days + history);
}

} // namespace

void cmd_backtest(const std::string &config_path, const std::string &checkpoint_path) {
	ExperimentConfig config = load_config(config_path);
	ensure_dirs(config);
	Checkpoint ck = load_checkpoint(checkpoint_path);
	if (ck.model_config.architecture != config.model.architecture) {
		throw UsageError("backtest: checkpoint architecture " +
		                 architecture_name(ck.model_config.architecture) +
		                 " does not match config architecture " +
		                 architecture_name(config.model.architecture));
	}
	if (ck.method != config.training.method) {
		throw UsageError("backtest: checkpoint method " + method_name(ck.method) +
		                 " does not match config method " + method_name(config.training.method));
	}
	if (ck.window.history != config.window.history ||
	    ck.window.max_horizon != config.window.max_horizon) {
		throw UsageError("backtest: checkpoint window geometry differs from config");
	}

	FeatureTable table = load_config_table(config);
	DatasetSplit split = split_config_table(config, table);
	FeatureTable slice = backtest_slice(config, table, split);

	auto fn = make_forecaster(ck.method, ck.model.get(), ck.linear ? &*ck.linear : nullptr, slice,
	                          ck.stats, ck.window, Rng(config.seed).fork(kBacktestStream).seed());
	const std::string tag = ck.linear ? architecture_name(ck.linear->variant) : ck.model->tag();
	EvalReport report = backtest(method_name(ck.method), tag, slice, ck.window, fn);
	const std::string dir =
	    config.experiment_dir() + "/reports/" + method_name(ck.method) + "-" + tag;
	emit_report(report, slice, dir);
	char buf[128];
	std::snprintf(buf, sizeof buf, "aggregate MAPE %.4f over %d horizons, %zu origins\n",
	              report.aggregate_mape, report.horizons, report.n_origins);
	std::cout << buf << "reports in " << dir << "\n";
}

void cmd_forecast(const std::string &checkpoint_path, const std::string &data_path,
                  const std::string &origin_date, int steps, const std::string &out_path,
                  std::uint64_t seed) {
	if (steps < 1) {
		throw UsageError("forecast: --steps must be at least 1");
	}
	Checkpoint ck = load_checkpoint(checkpoint_path);
	FeatureTable table = load_feature_table(data_path);
	const Date origin = parse_date(origin_date);
	const std::int64_t idx = day_number(origin) - day_number(table.dates.front());
	if (idx < 0 || idx >= static_cast<std::int64_t>(table.n_days())) {
		throw DataError("forecast: origin " + origin_date + " outside the dataset range " +
		                format_date(table.dates.front()) + ".." +
		                format_date(table.dates.back()));
	}
	auto fn = make_forecaster(ck.method, ck.model.get(), ck.linear ? &*ck.linear : nullptr, table,
	                          ck.stats, ck.window, Rng(seed).fork(kForecastStream).seed());
	ForecastResult result = fn(static_cast<std::size_t>(idx), steps);
	emit_fan_chart(result, &table, out_path);
	std::cout << "wrote " << result.steps << "-step forecast for " << result.zones.size()
	          << " zones to " << out_path << "\n";
}

void cmd_report(const std::vector<std::string> &summary_paths, const std::string &out_path) {
	if (summary_paths.empty()) {
		throw UsageError("report: at least one summary.json required");
	}
	struct Row {
		std::string model, method;
		double mape;
	};
	std::vector<Row> rows;
	for (const auto &p : summary_paths) {
		std::ifstream in(p);
		if (!in) {
			throw DataError("cannot open '" + p + "'");
		}
		json j;
		try {
			in >> j;
		} catch (const std::exception &e) {
			throw DataError("summary '" + p + "': " + e.what());
		}
		rows.push_back({j.at("model").get<std::string>(), j.at("method").get<std::string>(),
		                j.at("aggregate_mape").get<double>()});
	}
	std::sort(rows.begin(), rows.end(), [](const Row &a, const Row &b) {
		return a.model != b.model ? a.model < b.model : a.method < b.method;
	});
	std::ofstream out(out_path, std::ios::binary);
	if (!out) {
		throw DataError("cannot write '" + out_path + "'");
	}
	out << "model,method,average_mape\n";
	char buf[128];
	for (const auto &r : rows) {
		std::snprintf(buf, sizeof buf, "%s,%s,%.4f\n", r.model.c_str(), r.method.c_str(), r.mape);
		out << buf;
	}
	std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
}

} // namespace maskcast
