#include "maskcast/checkpoint.hpp"

#include "maskcast/errors.hpp"

#include "json.hpp"

#include <cstring>
#include <fstream>

namespace maskcast {
namespace {

const char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const unsigned char *data, std::size_t n) {
	std::string out;
	out.reserve((n + 2) / 3 * 4);
	for (std::size_t i = 0; i < n; i += 3) {
		unsigned v = static_cast<unsigned>(data[i]) << 16;
		if (i + 1 < n) {
			v |= static_cast<unsigned>(data[i + 1]) << 8;
		}
		if (i + 2 < n) {
			v |= static_cast<unsigned>(data[i + 2]);
		}
		out.push_back(kB64[(v >> 18) & 63]);
		out.push_back(kB64[(v >> 12) & 63]);
		out.push_back(i + 1 < n ? kB64[(v >> 6) & 63] : '=');
		out.push_back(i + 2 < n ? kB64[v & 63] : '=');
	}
	return out;
}

std::vector<unsigned char> base64_decode(const std::string &text) {
	int table[256];
	std::fill(std::begin(table), std::end(table), -1);
	for (int i = 0; i < 64; ++i) {
		table[static_cast<unsigned char>(kB64[i])] = i;
	}
	std::vector<unsigned char> out;
	out.reserve(text.size() / 4 * 3);
	unsigned acc = 0;
	int bits = 0;
	for (char c : text) {
		if (c == '=' || c == '\n' || c == '\r') {
			continue;
		}
		const int v = table[static_cast<unsigned char>(c)];
		if (v < 0) {
			throw DataError("checkpoint: invalid base64 payload");
		}
		acc = (acc << 6) | static_cast<unsigned>(v);
		bits += 6;
		if (bits >= 8) {
			bits -= 8;
			out.push_back(static_cast<unsigned char>((acc >> bits) & 0xFF));
		}
	}
	return out;
}

std::string encode_floats(const std::vector<float> &v) {
	return base64_encode(reinterpret_cast<const unsigned char *>(v.data()),
	                     v.size() * sizeof(float));
}

std::vector<float> decode_floats(const std::string &text, std::size_t expected) {
	auto bytes = base64_decode(text);
	if (bytes.size() != expected * sizeof(float)) {
		throw DataError("checkpoint: parameter payload size mismatch");
	}
	std::vector<float> v(expected);
	std::memcpy(v.data(), bytes.data(), bytes.size());
	return v;
}

std::string encode_doubles(const std::vector<double> &v) {
	return base64_encode(reinterpret_cast<const unsigned char *>(v.data()),
	                     v.size() * sizeof(double));
}

std::vector<double> decode_doubles(const std::string &text, std::size_t expected) {
	auto bytes = base64_decode(text);
	if (bytes.size() != expected * sizeof(double)) {
		throw DataError("checkpoint: coefficient payload size mismatch");
	}
	std::vector<double> v(expected);
	std::memcpy(v.data(), bytes.data(), bytes.size());
	return v;
}

nlohmann::json model_config_json(const ModelConfig &c) {
	nlohmann::json j;
	j["architecture"] = architecture_name(c.architecture);
	j["embedding_dim"] = c.embedding_dim;
	j["quantile_levels"] = c.quantile_levels;
	j["mask_indicator"] = c.mask_indicator;
	j["lstm_layers"] = c.lstm_layers;
	j["lstm_hidden"] = c.lstm_hidden;
	j["tcn_layers"] = c.tcn_layers;
	j["tcn_channels"] = c.tcn_channels;
	j["tcn_kernel"] = c.tcn_kernel;
	j["tcn_dropout"] = c.tcn_dropout;
	j["transformer_dim"] = c.transformer_dim;
	j["transformer_ff_dim"] = c.transformer_ff_dim;
	j["transformer_heads"] = c.transformer_heads;
	j["transformer_layers"] = c.transformer_layers;
	j["transformer_dropout"] = c.transformer_dropout;
	j["fcnn_layers"] = c.fcnn_layers;
	j["fcnn_width"] = c.fcnn_width;
	j["ridge_lambda"] = c.ridge_lambda;
	j["lasso_lambda"] = c.lasso_lambda;
	return j;
}

ModelConfig model_config_from_json(const nlohmann::json &j) {
	ModelConfig c;
	c.architecture = parse_architecture(j.at("architecture").get<std::string>());
	c.embedding_dim = j.at("embedding_dim").get<int>();
	c.quantile_levels = j.at("quantile_levels").get<std::vector<double>>();
	c.mask_indicator = j.value("mask_indicator", false);
	c.lstm_layers = j.at("lstm_layers").get<int>();
	c.lstm_hidden = j.at("lstm_hidden").get<int>();
	c.tcn_layers = j.at("tcn_layers").get<int>();
	c.tcn_channels = j.at("tcn_channels").get<int>();
	c.tcn_kernel = j.at("tcn_kernel").get<int>();
	c.tcn_dropout = j.at("tcn_dropout").get<double>();
	c.transformer_dim = j.at("transformer_dim").get<int>();
	c.transformer_ff_dim = j.at("transformer_ff_dim").get<int>();
	c.transformer_heads = j.at("transformer_heads").get<int>();
	c.transformer_layers = j.at("transformer_layers").get<int>();
	c.transformer_dropout = j.at("transformer_dropout").get<double>();
	c.fcnn_layers = j.at("fcnn_layers").get<int>();
	c.fcnn_width = j.at("fcnn_width").get<int>();
	c.ridge_lambda = j.at("ridge_lambda").get<double>();
	c.lasso_lambda = j.at("lasso_lambda").get<double>();
	return c;
}

} // namespace

void save_checkpoint(const Checkpoint &ck, const std::string &path) {
	nlohmann::json j;
	j["version"] = ck.version;
	j["method"] = method_name(ck.method);
	j["seed"] = ck.seed;
	j["best_val_loss"] = ck.best_val_loss;
	j["model_config"] = model_config_json(ck.model_config);
	j["zones"] = ck.layout.zones;
	j["window"] = {{"history", ck.window.history},
	               {"max_horizon", ck.window.max_horizon},
	               {"stride", ck.window.stride}};
	nlohmann::json stats;
	stats["names"] = ck.stats.names;
	stats["mean"] = ck.stats.mean;
	stats["stdev"] = ck.stats.stdev;
	stats["min"] = ck.stats.min;
	stats["max"] = ck.stats.max;
	stats["n_predictor"] = ck.stats.n_predictor;
	stats["n_forecast"] = ck.stats.n_forecast;
	j["norm_stats"] = stats;

	if (ck.model) {
		nlohmann::json params = nlohmann::json::array();
		for (const auto &[name, p] :
		     const_cast<SequenceModel &>(*ck.model).named_parameters()) {
			nlohmann::json pj;
			pj["name"] = name;
			pj["rows"] = p->value.rows;
			pj["cols"] = p->value.cols;
			pj["data"] = encode_floats(p->value.data);
			params.push_back(pj);
		}
		j["parameters"] = params;
	}
	if (ck.linear) {
		nlohmann::json lj;
		lj["variant"] = architecture_name(ck.linear->variant);
		lj["lambda"] = ck.linear->lambda;
		lj["rows"] = ck.linear->coef.rows;
		lj["cols"] = ck.linear->coef.cols;
		lj["coef"] = encode_doubles(ck.linear->coef.a);
		j["linear"] = lj;
	}

	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw DataError("cannot write checkpoint '" + path + "'");
	}
	out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::string &path) {
	std::ifstream in(path);
	if (!in) {
		throw DataError("cannot open checkpoint '" + path + "'");
	}
	nlohmann::json j;
	try {
		in >> j;
	} catch (const std::exception &e) {
		throw DataError("checkpoint '" + path + "': " + e.what());
	}
	Checkpoint ck;
	ck.version = j.at("version").get<int>();
	if (ck.version != 1) {
		throw DataError("checkpoint '" + path + "': unsupported version " +
		                std::to_string(ck.version));
	}
	ck.method = parse_method(j.at("method").get<std::string>());
	ck.seed = j.at("seed").get<std::uint64_t>();
	ck.best_val_loss = j.value("best_val_loss", 0.0);
	ck.model_config = model_config_from_json(j.at("model_config"));
	ck.layout.zones = j.at("zones").get<std::vector<std::string>>();
	ck.window.history = j.at("window").at("history").get<int>();
	ck.window.max_horizon = j.at("window").at("max_horizon").get<int>();
	ck.window.stride = j.at("window").at("stride").get<int>();
	const auto &stats = j.at("norm_stats");
	ck.stats.names = stats.at("names").get<std::vector<std::string>>();
	ck.stats.mean = stats.at("mean").get<std::vector<double>>();
	ck.stats.stdev = stats.at("stdev").get<std::vector<double>>();
	ck.stats.min = stats.at("min").get<std::vector<double>>();
	ck.stats.max = stats.at("max").get<std::vector<double>>();
	ck.stats.n_predictor = stats.at("n_predictor").get<int>();
	ck.stats.n_forecast = stats.at("n_forecast").get<int>();

	if (j.contains("parameters")) {
		ck.model = build_model(ck.model_config, ck.layout, 0);
		auto &params = ck.model->named_parameters();
		const auto &pj = j.at("parameters");
		if (pj.size() != params.size()) {
			throw DataError("checkpoint '" + path + "': parameter count mismatch");
		}
		for (std::size_t i = 0; i < params.size(); ++i) {
			const auto &entry = pj.at(i);
			if (entry.at("name").get<std::string>() != params[i].first) {
				throw DataError("checkpoint '" + path + "': parameter order mismatch at '" +
				                params[i].first + "'");
			}
			const auto rows = entry.at("rows").get<std::int64_t>();
			const auto cols = entry.at("cols").get<std::int64_t>();
			auto &t = params[i].second->value;
			if (rows != t.rows || cols != t.cols) {
				throw DataError("checkpoint '" + path + "': parameter shape mismatch at '" +
				                params[i].first + "'");
			}
			t.data = decode_floats(entry.at("data").get<std::string>(), t.data.size());
		}
	}
	if (j.contains("linear")) {
		const auto &lj = j.at("linear");
		LinearModel lm;
		lm.variant = parse_architecture(lj.at("variant").get<std::string>());
		lm.lambda = lj.at("lambda").get<double>();
		lm.coef = DMat(lj.at("rows").get<std::int64_t>(), lj.at("cols").get<std::int64_t>());
		lm.coef.a = decode_doubles(lj.at("coef").get<std::string>(), lm.coef.a.size());
		ck.linear = std::move(lm);
	}
	return ck;
}

} // namespace maskcast
