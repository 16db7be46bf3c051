#include "maskcast/cli.hpp"
#include "maskcast/errors.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char **argv) {
	CLI::App app{"maskcast: multi-horizon probabilistic demand forecasting"};
	app.require_subcommand(1);

	std::vector<std::string> in_files;
	std::string out_path, config_path, checkpoint_path, data_path, origin_date;
	int steps = 1;
	std::uint64_t seed = 0;

	auto *ingest = app.add_subcommand("ingest", "Convert hourly CSVs into a daily feature table");
	ingest->add_option("files", in_files, "hourly CSV files")->required();
	ingest->add_option("--out", out_path, "output dataset file")->required();

	auto *synth = app.add_subcommand("synth", "Generate the configured synthetic dataset");
	synth->add_option("--config", config_path)->required();
	synth->add_option("--out", out_path)->required();

	auto *train = app.add_subcommand("train", "Train the configured model");
	train->add_option("--config", config_path)->required();

	auto *bt = app.add_subcommand("backtest", "Rolling-origin evaluation on the test span");
	bt->add_option("--config", config_path)->required();
	bt->add_option("--checkpoint", checkpoint_path)->required();

	auto *fc = app.add_subcommand("forecast", "Forecast from one origin date");
	fc->add_option("--checkpoint", checkpoint_path)->required();
	fc->add_option("--data", data_path, "dataset file")->required();
	fc->add_option("--origin", origin_date, "first forecast day, YYYY-MM-DD")->required();
	fc->add_option("--steps", steps, "forecast length l_f")->required();
	fc->add_option("--out", out_path)->required();
	fc->add_option("--seed", seed, "seed for the masked fill values");

	std::vector<std::string> summaries;
	auto *rep = app.add_subcommand("report", "Merge backtest summaries into one table");
	rep->add_option("summaries", summaries, "summary.json files")->required();
	rep->add_option("--out", out_path)->required();

	try {
		app.parse(argc, argv);
		if (ingest->parsed()) {
			maskcast::cmd_ingest(in_files, out_path);
		} else if (synth->parsed()) {
			maskcast::cmd_synth(config_path, out_path);
		} else if (train->parsed()) {
			maskcast::cmd_train(config_path);
		} else if (bt->parsed()) {
			maskcast::cmd_backtest(config_path, checkpoint_path);
		} else if (fc->parsed()) {
			maskcast::cmd_forecast(checkpoint_path, data_path, origin_date, steps, out_path, seed);
		} else if (rep->parsed()) {
			maskcast::cmd_report(summaries, out_path);
		}
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : 1; // non-help parse problems are usage errors
	} catch (const maskcast::UsageError &e) {
		std::cerr << "usage error: " << e.what() << "\n";
		return 1;
	} catch (const maskcast::DataError &e) {
		std::cerr << "data error: " << e.what() << "\n";
		return 2;
	} catch (const maskcast::TrainingError &e) {
		std::cerr << "training error: " << e.what() << "\n";
		return 3;
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	}
	return 0;
}
