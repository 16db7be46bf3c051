#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "maskcast/checkpoint.hpp"
#include "maskcast/cli.hpp"
#include "maskcast/errors.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace maskcast;

namespace {

namespace fs = std::filesystem;

std::string work_dir() {
	auto dir = fs::temp_directory_path() / "maskcast_cli_test";
	fs::create_directories(dir);
	return dir.string();
}

std::string write_file(const std::string &name, const std::string &content) {
	const std::string path = work_dir() + "/" + name;
	std::ofstream out(path, std::ios::binary);
	out << content;
	return path;
}

std::string slurp(const std::string &path) {
	std::ifstream in(path, std::ios::binary);
	REQUIRE_MESSAGE(in.good(), path);
	return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int run_cli(const std::string &args) {
	const std::string cmd = std::string(MASKCAST_CLI_PATH) + " " + args + " >" + work_dir() +
	                        "/stdout.txt 2>" + work_dir() + "/stderr.txt";
	const int status = std::system(cmd.c_str());
	return WEXITSTATUS(status);
}

/// Desk-micro experiment: small synthetic panel, tiny lstm, a few epochs.
/// Linear designs need more than a year of days so every calendar one-hot
/// column is populated.
std::string micro_config(const std::string &name, const std::string &method,
                         const std::string &arch, int n_days = 260) {
	std::string out = work_dir() + "/out";
	return write_file(name + ".json", R"({
  "version": 1,
  "experiment": ")" + name + R"(",
  "seed": 42,
  "output_dir": ")" + out + R"(",
  "data": {
    "source": "synthetic",
    "synthetic": {"n_days": )" + std::to_string(n_days) + R"(, "n_zones": 2,
                  "weather_persistence": 0.6,
                  "future_signal_weight": 1.0, "autoregressive_weight": 0.4,
                  "noise_scale": 40.0, "seed": 9}
  },
  "split": {"mode": "days", "test_days": 40},
  "window": {"history_days": 8, "horizon_days": 5, "stride": 1},
  "model": {"architecture": ")" + arch + R"(", "embedding_dim": 3,
            "lstm_layers": 1, "lstm_hidden": 10, "fcnn_width": 10},
  "training": {"method": ")" + method + R"(", "learning_rate": 0.01,
               "batch_size": 64, "epochs": 4}
})");
}

} // namespace

TEST_CASE("config parsing is strict") {
	auto bad_key = write_file("bad_key.json", R"({
  "version": 1, "experiment": "x", "seed": 1,
  "data": {"source": "synthetic", "synthetic": {"n_days": 100, "n_zones": 1}},
  "windows": {}
})");
	CHECK_THROWS_WITH_AS(load_config(bad_key), doctest::Contains("windows"), UsageError);

	auto no_seed = write_file("no_seed.json", R"({
  "version": 1, "experiment": "x",
  "data": {"source": "synthetic", "synthetic": {"n_days": 100, "n_zones": 1}}
})");
	CHECK_THROWS_WITH_AS(load_config(no_seed), doctest::Contains("seed"), UsageError);

	auto bad_version = write_file("bad_version.json", R"({
  "version": 2, "experiment": "x", "seed": 1,
  "data": {"source": "synthetic", "synthetic": {"n_days": 100, "n_zones": 1}}
})");
	CHECK_THROWS_AS(load_config(bad_version), UsageError);

	auto bad_method = write_file("bad_method.json", R"({
  "version": 1, "experiment": "x", "seed": 1,
  "data": {"source": "synthetic", "synthetic": {"n_days": 100, "n_zones": 1}},
  "training": {"method": "gradient-boost"}
})");
	CHECK_THROWS_WITH_AS(load_config(bad_method), doctest::Contains("mmmpf, rsf, dmf, sbf"),
	                     UsageError);
}

TEST_CASE("checkpoint save/load round-trips parameters bit-exactly") {
	InputLayout layout;
	layout.zones = {"Z1", "Z2"};
	ModelConfig mc;
	mc.embedding_dim = 3;
	mc.lstm_layers = 1;
	mc.lstm_hidden = 7;
	Checkpoint ck;
	ck.method = Method::mmmpf;
	ck.model_config = mc;
	ck.layout = layout;
	ck.window.history = 8;
	ck.window.max_horizon = 4;
	ck.seed = 77;
	FeatureTable table = generate_synthetic({.n_days = 50, .n_zones = 2, .seed = 1});
	ck.stats = compute_norm_stats(table);
	ck.model = build_model(mc, layout, 13);

	const auto path = work_dir() + "/model.ck.json";
	save_checkpoint(ck, path);
	auto loaded = load_checkpoint(path);
	CHECK(loaded.method == Method::mmmpf);
	CHECK(loaded.window.history == 8);
	CHECK(loaded.layout.zones == layout.zones);
	CHECK(loaded.stats.mean == ck.stats.mean);
	auto &pa = ck.model->named_parameters();
	auto &pb = loaded.model->named_parameters();
	REQUIRE(pa.size() == pb.size());
	for (std::size_t i = 0; i < pa.size(); ++i) {
		CHECK(pa[i].first == pb[i].first);
		CHECK(pa[i].second->value.data == pb[i].second->value.data);
	}

	SUBCASE("linear checkpoints round-trip too") {
		Checkpoint lin;
		lin.method = Method::sbf;
		lin.model_config.architecture = Architecture::linear_ridge;
		lin.layout = layout;
		lin.window = ck.window;
		lin.stats = ck.stats;
		LinearModel lm;
		lm.variant = Architecture::linear_ridge;
		lm.lambda = 1.0;
		lm.coef = DMat(3, 2);
		lm.coef.at(1, 1) = 0.123456789;
		lin.linear = lm;
		const auto lpath = work_dir() + "/linear.ck.json";
		save_checkpoint(lin, lpath);
		auto lload = load_checkpoint(lpath);
		REQUIRE(lload.linear.has_value());
		CHECK(lload.linear->coef.a == lm.coef.a);
		CHECK(lload.model == nullptr);
	}
}

TEST_CASE("cli: synth writes a dataset deterministically") {
	auto cfg = micro_config("synth", "mmmpf", "lstm");
	REQUIRE(run_cli("synth --config " + cfg + " --out " + work_dir() + "/panel1.csv") == 0);
	REQUIRE(run_cli("synth --config " + cfg + " --out " + work_dir() + "/panel2.csv") == 0);
	CHECK(slurp(work_dir() + "/panel1.csv") == slurp(work_dir() + "/panel2.csv"));
	CHECK(slurp(work_dir() + "/panel1.csv").substr(0, 4) == "date");
}

TEST_CASE("cli: ingest validates schema and exit codes") {
	auto good = write_file("hourly.csv", "date,hour,zone,demand_mw,dry_bulb_f,dew_point_f\n"
	                                     "2021-01-01,1,CT,100,40,30\n"
	                                     "2021-01-01,2,CT,110,41,30\n");
	CHECK(run_cli("ingest " + good + " --out " + work_dir() + "/ing.csv") == 0);

	// the ingestion summary lists every zone
	const char *zones[8] = {"CT", "ME", "NEMASSBOST", "NH", "RI", "SEMASS", "VT", "WCMASS"};
	std::string eight = "date,hour,zone,demand_mw,dry_bulb_f,dew_point_f\n";
	for (const char *z : zones) {
		for (int h = 1; h <= 24; ++h) {
			eight += "2021-01-01," + std::to_string(h) + "," + z + ",100,40,30\n";
		}
	}
	auto eight_path = write_file("hourly8.csv", eight);
	CHECK(run_cli("ingest " + eight_path + " --out " + work_dir() + "/ing8.csv") == 0);
	auto stdout_text = slurp(work_dir() + "/stdout.txt");
	CHECK(stdout_text.find("8 zones") != std::string::npos);
	for (const char *z : zones) {
		CHECK(stdout_text.find(z) != std::string::npos);
	}

	auto bad = write_file("hourly_bad.csv", "date,hour,zone,demand_mw,dry_bulb_f,dew_point_f\n"
	                                        "2021-01-01,99,CT,100,40,30\n");
	CHECK(run_cli("ingest " + bad + " --out " + work_dir() + "/ing2.csv") == 2);

	CHECK(run_cli("ingest --out " + work_dir() + "/ing3.csv") == 1); // no inputs: usage error
}

TEST_CASE("cli: full pipeline runs and replays byte-identically") {
	auto cfg = micro_config("pipe", "mmmpf", "lstm");
	const std::string out = work_dir() + "/out/pipe";
	REQUIRE(run_cli("train --config " + cfg) == 0);
	const std::string ck = out + "/checkpoints/mmmpf-lstm.ck.json";
	CHECK(fs::exists(ck));
	CHECK(fs::exists(out + "/logs/train-mmmpf-lstm.jsonl"));
	const auto ck_once = slurp(ck);

	REQUIRE(run_cli("train --config " + cfg) == 0);
	CHECK(slurp(ck) == ck_once); // identical training under identical seed

	REQUIRE(run_cli("backtest --config " + cfg + " --checkpoint " + ck) == 0);
	const std::string rep = out + "/reports/mmmpf-lstm";
	for (const char *f : {"cells.csv", "per_horizon.csv", "fan.csv", "summary.json"}) {
		CHECK(fs::exists(rep + std::string("/") + f));
	}
	const auto cells_once = slurp(rep + "/cells.csv");
	const auto summary_once = slurp(rep + "/summary.json");
	REQUIRE(run_cli("backtest --config " + cfg + " --checkpoint " + ck) == 0);
	CHECK(slurp(rep + "/cells.csv") == cells_once);
	CHECK(slurp(rep + "/summary.json") == summary_once);

	// flexible horizon: forecasts of several lengths from the same checkpoint
	REQUIRE(run_cli("synth --config " + cfg + " --out " + work_dir() + "/pipe_panel.csv") == 0);
	for (int steps : {1, 3, 5}) {
		REQUIRE(run_cli("forecast --checkpoint " + ck + " --data " + work_dir() +
		                "/pipe_panel.csv --origin 2011-08-01 --steps " + std::to_string(steps) +
		                " --out " + work_dir() + "/fan.csv --seed 3") == 0);
		const auto fan = slurp(work_dir() + "/fan.csv");
		CHECK(std::count(fan.begin(), fan.end(), '\n') == 1 + steps * 2);
	}
	// usage errors
	CHECK(run_cli("forecast --checkpoint " + ck + " --data " + work_dir() +
	              "/pipe_panel.csv --origin 2011-08-01 --steps 0 --out " + work_dir() +
	              "/fan0.csv") == 1);
	// origin too deep in the future: not enough future predictors
	CHECK(run_cli("forecast --checkpoint " + ck + " --data " + work_dir() +
	              "/pipe_panel.csv --origin 2011-09-15 --steps 5 --out " + work_dir() +
	              "/fan_far.csv") == 2);

	// report merge over two summaries
	auto cfg2 = micro_config("pipe2", "rsf", "lstm");
	REQUIRE(run_cli("train --config " + cfg2) == 0);
	REQUIRE(run_cli("backtest --config " + cfg2 + " --checkpoint " + work_dir() +
	                "/out/pipe2/checkpoints/rsf-lstm.ck.json") == 0);
	REQUIRE(run_cli("report " + rep + "/summary.json " + work_dir() +
	                "/out/pipe2/reports/rsf-lstm/summary.json --out " + work_dir() +
	                "/table.csv") == 0);
	auto merged = slurp(work_dir() + "/table.csv");
	CHECK(merged.find("model,method,average_mape") == 0);
	CHECK(std::count(merged.begin(), merged.end(), '\n') == 3);
	CHECK(merged.find("lstm,mmmpf,") != std::string::npos);
	CHECK(merged.find("lstm,rsf,") != std::string::npos);
}

TEST_CASE("cli: sbf linear and fcnn paths") {
	auto cfg = micro_config("lin", "sbf", "linear-o", 800);
	REQUIRE(run_cli("train --config " + cfg) == 0);
	const std::string ck = work_dir() + "/out/lin/checkpoints/sbf-linear-o.ck.json";
	REQUIRE(run_cli("backtest --config " + cfg + " --checkpoint " + ck) == 0);
	auto summary = slurp(work_dir() + "/out/lin/reports/sbf-linear-o/summary.json");
	CHECK(summary.find("aggregate_mape") != std::string::npos);

	auto cfg_fcnn = micro_config("fcnn", "sbf", "fcnn");
	REQUIRE(run_cli("train --config " + cfg_fcnn) == 0);
	CHECK(fs::exists(work_dir() + "/out/fcnn/checkpoints/sbf-fcnn.ck.json"));
}

TEST_CASE("cli: checkpoint/config mismatch is rejected") {
	auto cfg_lstm = micro_config("mm_a", "mmmpf", "lstm");
	REQUIRE(run_cli("train --config " + cfg_lstm) == 0);
	auto cfg_dmf = micro_config("mm_b", "dmf", "lstm");
	CHECK(run_cli("backtest --config " + cfg_dmf + " --checkpoint " + work_dir() +
	              "/out/mm_a/checkpoints/mmmpf-lstm.ck.json") == 1);
	CHECK(run_cli("backtest --config " + cfg_lstm + " --checkpoint " + work_dir() +
	              "/missing.ck.json") == 2);
}
