#pragma once

#include "maskcast/autograd.hpp"
#include "maskcast/rng.hpp"

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace maskcast {

enum class Architecture {
	lstm,
	tcn,
	transformer,
	fcnn,
	linear_ols,
	linear_ridge,
	linear_lasso,
};

Architecture parse_architecture(const std::string &name); // throws UsageError
std::string architecture_name(Architecture a);
bool is_linear(Architecture a);

struct ModelConfig {
	Architecture architecture = Architecture::lstm;
	int embedding_dim = 5;
	std::vector<double> quantile_levels = {0.05, 0.50, 0.95};
	/// Feed a 0/1 channel marking steps whose forecast values were replaced.
	/// Off by default: masked positions then carry only the random fill.
	bool mask_indicator = false;

	int lstm_layers = 2;
	int lstm_hidden = 50;

	int tcn_layers = 2;
	int tcn_channels = 50;
	int tcn_kernel = 3; // dilation of layer i is 2^i
	double tcn_dropout = 0.2;

	int transformer_dim = 64;
	int transformer_ff_dim = 256;
	int transformer_heads = 4;
	int transformer_layers = 2;
	double transformer_dropout = 0.1;

	int fcnn_layers = 2;
	int fcnn_width = 50;

	double ridge_lambda = 1.0;
	double lasso_lambda = 0.1;

	int n_quantiles() const { return static_cast<int>(quantile_levels.size()); }
	void validate() const;
};

/// Per-step feature contract shared by every backbone: three embedded
/// calendar categoricals, the per-zone weather predictors, then the per-zone
/// forecast channels. Index == cardinality is the "absent step" placeholder
/// used when a formulation must not see a step's inputs.
struct InputLayout {
	std::vector<std::string> zones;
	static constexpr std::array<int, 3> cardinalities{12, 31, 7};

	int n_zones() const { return static_cast<int>(zones.size()); }
	int predictor_channels() const { return 2 * n_zones(); }
	int forecast_channels() const { return n_zones(); }
	int continuous_channels() const { return 3 * n_zones(); }

	bool operator==(const InputLayout &) const = default;
};

/// A batch of equal-length step sequences, flattened batch-major:
/// row (b, t) = b * length + t. The last continuous column is the 0/1
/// masked-step marker; models only read it when configured to.
struct StepBatch {
	std::int64_t batch = 0;
	std::int64_t length = 0;
	std::vector<std::int32_t> categorical; // (batch*length) * 3
	nn::Tensor continuous;                 // (batch*length, 3Z + 1)

	StepBatch() = default;
	StepBatch(std::int64_t b, std::int64_t len, const InputLayout &layout)
	    : batch(b), length(len), categorical(static_cast<std::size_t>(b * len) * 3, 0),
	      continuous(b * len, layout.continuous_channels() + 1) {}

	std::int64_t row(std::int64_t b, std::int64_t t) const { return b * length + t; }

	void set_categorical(std::int64_t b, std::int64_t t, int month_1_12, int day_1_31, int dow_0_6) {
		const auto r = static_cast<std::size_t>(row(b, t)) * 3;
		categorical[r] = month_1_12 - 1;
		categorical[r + 1] = day_1_31 - 1;
		categorical[r + 2] = dow_0_6;
	}
	void set_masked_marker(std::int64_t b, std::int64_t t) {
		continuous.at(row(b, t), continuous.cols - 1) = 1.0f;
	}
	/// Marks step (b, t) as carrying no information: placeholder categorical
	/// indices, zeroed continuous channels, masked marker set.
	void set_placeholder(std::int64_t b, std::int64_t t) {
		const auto r = static_cast<std::size_t>(row(b, t)) * 3;
		for (int c = 0; c < 3; ++c) {
			categorical[r + c] = InputLayout::cardinalities[c];
		}
		float *cont = continuous.row(row(b, t));
		std::fill(cont, cont + continuous.cols, 0.0f);
		set_masked_marker(b, t);
	}
};

/// Trainable map from a step sequence to per-step, per-variable, per-quantile
/// outputs: forward returns (batch*length, m*Q) with quantiles innermost.
class SequenceModel {
public:
	virtual ~SequenceModel() = default;

	const ModelConfig &config() const { return config_; }
	const InputLayout &layout() const { return layout_; }
	std::string tag() const { return architecture_name(config_.architecture); }

	/// rng is only consumed when training (dropout); inference is deterministic.
	virtual nn::Value forward(const StepBatch &batch, bool training, Rng *rng) = 0;

	std::vector<std::pair<std::string, nn::Value>> &named_parameters() { return params_; }
	std::int64_t parameter_count() const;

protected:
	SequenceModel(ModelConfig config, InputLayout layout)
	    : config_(std::move(config)), layout_(std::move(layout)) {}

	nn::Value register_param(const std::string &name, std::int64_t rows, std::int64_t cols,
	                         std::int64_t fan_in, Rng &rng);

	ModelConfig config_;
	InputLayout layout_;
	std::vector<std::pair<std::string, nn::Value>> params_;
};

/// Builds a freshly initialized backbone ({lstm, tcn, transformer, fcnn});
/// linear architectures are fitted closed-form via fit_linear instead.
std::unique_ptr<SequenceModel> build_model(const ModelConfig &config, const InputLayout &layout,
                                           std::uint64_t seed);

/// Small dense double matrix for the closed-form fits.
struct DMat {
	std::int64_t rows = 0, cols = 0;
	std::vector<double> a;
	DMat() = default;
	DMat(std::int64_t r, std::int64_t c) : rows(r), cols(c), a(static_cast<std::size_t>(r * c), 0.0) {}
	double &at(std::int64_t i, std::int64_t j) { return a[static_cast<std::size_t>(i * cols + j)]; }
	double at(std::int64_t i, std::int64_t j) const { return a[static_cast<std::size_t>(i * cols + j)]; }
};

struct LinearModel {
	Architecture variant = Architecture::linear_ols;
	double lambda = 0.0;
	DMat coef; // (n_features, n_outputs)

	std::vector<double> predict(std::span<const double> x) const;
};

/// OLS via normal equations (exact), ridge closed-form, lasso by coordinate
/// descent (objective (1/2n)||Y-XB||^2 + lambda*||B||_1, tolerance 1e-10).
LinearModel fit_linear(Architecture variant, const DMat &x, const DMat &y, double lambda);

} // namespace maskcast
