#pragma once

#include "maskcast/dataio.hpp"
#include "maskcast/models.hpp"
#include "maskcast/training.hpp"
#include "maskcast/windowing.hpp"

#include <optional>
#include <string>
#include <vector>

namespace maskcast {

/// One experiment, fully described by a single strict JSON document
/// (unknown keys are rejected so a typo cannot silently change a run).
struct ExperimentConfig {
	int version = 1;
	std::string experiment = "experiment";
	std::uint64_t seed = 0;
	std::string output_dir = "out";

	std::string data_source = "synthetic"; // "synthetic" | "file"
	std::string data_path;
	std::optional<SyntheticSpec> synthetic;

	std::string split_mode = "days"; // "days" | "year"
	std::size_t test_days = 365;
	int train_end_year = 2020;
	int test_year = 2021;

	WindowSpec window;
	ModelConfig model;
	TrainingConfig training;

	std::string experiment_dir() const { return output_dir + "/" + experiment; }
	std::string checkpoint_path() const;
	void validate() const;
};

ExperimentConfig load_config(const std::string &path);

/// Loads or generates the configured table and splits it.
FeatureTable load_config_table(const ExperimentConfig &config);
DatasetSplit split_config_table(const ExperimentConfig &config, const FeatureTable &table);

// Commands: throw UsageError / DataError / TrainingError; the binary maps
// them to exit codes 1 / 2 / 3.
void cmd_ingest(const std::vector<std::string> &files, const std::string &out_path);
void cmd_synth(const std::string &config_path, const std::string &out_path);
void cmd_train(const std::string &config_path);
void cmd_backtest(const std::string &config_path, const std::string &checkpoint_path);
void cmd_forecast(const std::string &checkpoint_path, const std::string &data_path,
                  const std::string &origin_date, int steps, const std::string &out_path,
                  std::uint64_t seed);
void cmd_report(const std::vector<std::string> &summary_paths, const std::string &out_path);

} // namespace maskcast
