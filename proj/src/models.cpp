#include "maskcast/models.hpp"

#include "maskcast/errors.hpp"

#include <cmath>

namespace maskcast {

using nn::Value;

Architecture parse_architecture(const std::string &name) {
	if (name == "lstm") {
		return Architecture::lstm;
	}
	if (name == "tcn") {
		return Architecture::tcn;
	}
	if (name == "transformer") {
		return Architecture::transformer;
	}
	if (name == "fcnn") {
		return Architecture::fcnn;
	}
	if (name == "linear-o") {
		return Architecture::linear_ols;
	}
	if (name == "linear-ridge") {
		return Architecture::linear_ridge;
	}
	if (name == "linear-lasso") {
		return Architecture::linear_lasso;
	}
	throw UsageError("unknown architecture '" + name +
	                 "': expected one of lstm, tcn, transformer, fcnn, linear-o, linear-ridge, "
	                 "linear-lasso");
}

std::string architecture_name(Architecture a) {
	switch (a) {
	case Architecture::lstm:
		return "lstm";
	case Architecture::tcn:
		return "tcn";
	case Architecture::transformer:
		return "transformer";
	case Architecture::fcnn:
		return "fcnn";
	case Architecture::linear_ols:
		return "linear-o";
	case Architecture::linear_ridge:
		return "linear-ridge";
	case Architecture::linear_lasso:
		return "linear-lasso";
	}
	return "?";
}

bool is_linear(Architecture a) {
	return a == Architecture::linear_ols || a == Architecture::linear_ridge ||
	       a == Architecture::linear_lasso;
}

void ModelConfig::validate() const {
	if (quantile_levels.empty()) {
		throw UsageError("model: at least one quantile level required");
	}
	for (std::size_t i = 0; i < quantile_levels.size(); ++i) {
		if (!(quantile_levels[i] > 0.0 && quantile_levels[i] < 1.0)) {
			throw UsageError("model: quantile levels must lie in (0, 1)");
		}
		if (i > 0 && quantile_levels[i] <= quantile_levels[i - 1]) {
			throw UsageError("model: quantile levels must be strictly increasing");
		}
	}
	if (embedding_dim < 1 || lstm_layers < 1 || lstm_hidden < 1 || tcn_layers < 1 ||
	    tcn_channels < 1 || tcn_kernel < 1 || fcnn_layers < 1 || fcnn_width < 1 ||
	    transformer_layers < 1 || transformer_heads < 1 || transformer_dim < 1 ||
	    transformer_ff_dim < 1) {
		throw UsageError("model: architecture dimensions must be positive");
	}
	if (transformer_dim % transformer_heads != 0) {
		throw UsageError("model: transformer dim must divide evenly across heads");
	}
	if (tcn_dropout < 0.0 || tcn_dropout >= 1.0 || transformer_dropout < 0.0 ||
	    transformer_dropout >= 1.0) {
		throw UsageError("model: dropout must lie in [0, 1)");
	}
}

std::int64_t SequenceModel::parameter_count() const {
	std::int64_t n = 0;
	for (const auto &[name, p] : params_) {
		n += p->value.size();
	}
	return n;
}

Value SequenceModel::register_param(const std::string &name, std::int64_t rows, std::int64_t cols,
                                    std::int64_t fan_in, Rng &rng) {
	nn::Tensor t(rows, cols);
	// fan_in == 0 marks embedding-style init; otherwise fan-in scaled uniform.
	const float bound = fan_in > 0 ? 1.0f / std::sqrt(static_cast<float>(fan_in)) : 0.1f;
	for (auto &v : t.data) {
		v = rng.uniform_f(-bound, bound);
	}
	auto p = nn::make_parameter(std::move(t));
	params_.emplace_back(name, p);
	return p;
}

namespace {

/// Embeddings + continuous channels, shared by every backbone. The trailing
/// masked-step marker column is forwarded only when configured.
struct InputEncoder {
	std::array<Value, 3> tables;
	int embedding_dim = 5;
	bool use_indicator = false;

	/// Output width when include_forecast selects whether the y channels are fed.
	std::int64_t width(const InputLayout &layout, bool include_forecast) const {
		std::int64_t cont = include_forecast
		                        ? layout.continuous_channels() + (use_indicator ? 1 : 0)
		                        : layout.predictor_channels();
		return 3 * static_cast<std::int64_t>(embedding_dim) + cont;
	}

	Value encode(const StepBatch &sb, const InputLayout &layout, bool include_forecast) const {
		const std::int64_t rows = sb.batch * sb.length;
		std::vector<std::int32_t> idx(static_cast<std::size_t>(rows));
		std::vector<Value> parts;
		parts.reserve(4);
		for (int c = 0; c < 3; ++c) {
			for (std::int64_t r = 0; r < rows; ++r) {
				idx[static_cast<std::size_t>(r)] = sb.categorical[static_cast<std::size_t>(r) * 3 + c];
			}
			parts.push_back(nn::embedding(tables[static_cast<std::size_t>(c)], idx));
		}
		const std::int64_t keep = include_forecast
		                              ? layout.continuous_channels() + (use_indicator ? 1 : 0)
		                              : layout.predictor_channels();
		nn::Tensor cont(rows, keep);
		for (std::int64_t r = 0; r < rows; ++r) {
			const float *src = sb.continuous.row(r);
			std::copy(src, src + keep, cont.row(r));
		}
		parts.push_back(nn::make_constant(std::move(cont)));
		return nn::concat_cols(parts);
	}
};

class LstmModel final : public SequenceModel {
public:
	LstmModel(ModelConfig config, InputLayout layout, std::uint64_t seed)
	    : SequenceModel(std::move(config), std::move(layout)) {
		Rng rng(seed);
		for (int c = 0; c < 3; ++c) {
			encoder_.tables[static_cast<std::size_t>(c)] =
			    register_param("embedding." + std::to_string(c), InputLayout::cardinalities[c] + 1,
			                   config_.embedding_dim, 0, rng);
		}
		encoder_.embedding_dim = config_.embedding_dim;
		encoder_.use_indicator = config_.mask_indicator;
		const int h = config_.lstm_hidden;
		std::int64_t in_dim = encoder_.width(layout_, true);
		for (int l = 0; l < config_.lstm_layers; ++l) {
			const std::string p = "lstm." + std::to_string(l) + ".";
			wx_.push_back(register_param(p + "wx", in_dim, 4 * h, in_dim, rng));
			wh_.push_back(register_param(p + "wh", h, 4 * h, h, rng));
			bias_.push_back(register_param(p + "b", 1, 4 * h, in_dim, rng));
			// forget-gate bias starts at 1
			for (int j = h; j < 2 * h; ++j) {
				bias_.back()->value.data[static_cast<std::size_t>(j)] += 1.0f;
			}
			in_dim = h;
		}
		const std::int64_t out = layout_.forecast_channels() * config_.n_quantiles();
		head_w_ = register_param("head.w", h, out, h, rng);
		head_b_ = register_param("head.b", 1, out, h, rng);
	}

	Value forward(const StepBatch &sb, bool training, Rng *rng) override {
		(void)training;
		(void)rng;
		const std::int64_t B = sb.batch, L = sb.length;
		const int h = config_.lstm_hidden;
		Value cur = encoder_.encode(sb, layout_, true);
		bool step_major = false;
		for (std::size_t l = 0; l < wx_.size(); ++l) {
			Value hprev = nn::make_constant(nn::Tensor::zeros(B, h));
			Value cprev = nn::make_constant(nn::Tensor::zeros(B, h));
			std::vector<Value> steps;
			steps.reserve(static_cast<std::size_t>(L));
			std::vector<std::int64_t> rows(static_cast<std::size_t>(B));
			for (std::int64_t t = 0; t < L; ++t) {
				for (std::int64_t b = 0; b < B; ++b) {
					rows[static_cast<std::size_t>(b)] = step_major ? t * B + b : b * L + t;
				}
				Value xt = nn::gather_rows(cur, rows);
				Value z = nn::add(nn::affine(xt, wx_[l], bias_[l]), nn::matmul(hprev, wh_[l]));
				Value ig = nn::sigmoid(nn::slice_cols(z, 0, h));
				Value fg = nn::sigmoid(nn::slice_cols(z, h, 2 * h));
				Value gg = nn::tanh_op(nn::slice_cols(z, 2 * h, 3 * h));
				Value og = nn::sigmoid(nn::slice_cols(z, 3 * h, 4 * h));
				cprev = nn::add(nn::mul(fg, cprev), nn::mul(ig, gg));
				hprev = nn::mul(og, nn::tanh_op(cprev));
				steps.push_back(hprev);
			}
			cur = nn::concat_rows(steps); // step-major (L*B, h)
			step_major = true;
		}
		// back to batch-major rows (b*L + t)
		std::vector<std::int64_t> perm(static_cast<std::size_t>(B * L));
		for (std::int64_t b = 0; b < B; ++b) {
			for (std::int64_t t = 0; t < L; ++t) {
				perm[static_cast<std::size_t>(b * L + t)] = t * B + b;
			}
		}
		cur = nn::gather_rows(cur, perm);
		return nn::affine(cur, head_w_, head_b_);
	}

private:
	InputEncoder encoder_;
	std::vector<Value> wx_, wh_, bias_;
	Value head_w_, head_b_;
};

class TcnModel final : public SequenceModel {
public:
	TcnModel(ModelConfig config, InputLayout layout, std::uint64_t seed)
	    : SequenceModel(std::move(config), std::move(layout)) {
		Rng rng(seed);
		for (int c = 0; c < 3; ++c) {
			encoder_.tables[static_cast<std::size_t>(c)] =
			    register_param("embedding." + std::to_string(c), InputLayout::cardinalities[c] + 1,
			                   config_.embedding_dim, 0, rng);
		}
		encoder_.embedding_dim = config_.embedding_dim;
		encoder_.use_indicator = config_.mask_indicator;
		std::int64_t in_dim = encoder_.width(layout_, true);
		const int ch = config_.tcn_channels;
		for (int l = 0; l < config_.tcn_layers; ++l) {
			const std::string p = "tcn." + std::to_string(l) + ".";
			LayerParams lp;
			const std::int64_t fan = in_dim * config_.tcn_kernel;
			for (int kk = 0; kk < config_.tcn_kernel; ++kk) {
				lp.taps.push_back(register_param(p + "w" + std::to_string(kk), in_dim, ch, fan, rng));
			}
			lp.bias = register_param(p + "b", 1, ch, fan, rng);
			if (in_dim != ch) {
				lp.proj = register_param(p + "proj", in_dim, ch, in_dim, rng);
			}
			layers_.push_back(std::move(lp));
			in_dim = ch;
		}
		const std::int64_t out = layout_.forecast_channels() * config_.n_quantiles();
		head_w_ = register_param("head.w", ch, out, ch, rng);
		head_b_ = register_param("head.b", 1, out, ch, rng);
	}

	Value forward(const StepBatch &sb, bool training, Rng *rng) override {
		const std::int64_t B = sb.batch, L = sb.length;
		Value cur = encoder_.encode(sb, layout_, true);
		const int kernel = config_.tcn_kernel;
		for (std::size_t l = 0; l < layers_.size(); ++l) {
			const std::int64_t dilation = std::int64_t{1} << l;
			const auto &lp = layers_[l];
			Value acc; // newest tap carries the bias
			for (int kk = kernel - 1; kk >= 0; --kk) {
				const std::int64_t shift = (kernel - 1 - static_cast<std::int64_t>(kk)) * dilation;
				std::vector<std::int64_t> rows(static_cast<std::size_t>(B * L));
				for (std::int64_t b = 0; b < B; ++b) {
					for (std::int64_t t = 0; t < L; ++t) {
						rows[static_cast<std::size_t>(b * L + t)] =
						    t >= shift ? b * L + t - shift : -1; // left zero padding keeps it causal
					}
				}
				Value tap = nn::gather_rows(cur, std::move(rows));
				if (kk == kernel - 1) {
					acc = nn::affine(tap, lp.taps[static_cast<std::size_t>(kk)], lp.bias);
				} else {
					acc = nn::add(acc, nn::matmul(tap, lp.taps[static_cast<std::size_t>(kk)]));
				}
			}
			Value act = nn::relu(acc);
			if (training && config_.tcn_dropout > 0.0) {
				act = nn::dropout(act, static_cast<float>(config_.tcn_dropout), *rng, true);
			}
			Value res = lp.proj ? nn::matmul(cur, lp.proj) : cur;
			cur = nn::add(act, res);
		}
		return nn::affine(cur, head_w_, head_b_);
	}

private:
	struct LayerParams {
		std::vector<Value> taps;
		Value bias;
		Value proj; // 1x1 residual projection when widths differ
	};
	InputEncoder encoder_;
	std::vector<LayerParams> layers_;
	Value head_w_, head_b_;
};

class TransformerModel final : public SequenceModel {
public:
	TransformerModel(ModelConfig config, InputLayout layout, std::uint64_t seed)
	    : SequenceModel(std::move(config), std::move(layout)) {
		Rng rng(seed);
		for (int c = 0; c < 3; ++c) {
			encoder_.tables[static_cast<std::size_t>(c)] =
			    register_param("embedding." + std::to_string(c), InputLayout::cardinalities[c] + 1,
			                   config_.embedding_dim, 0, rng);
		}
		encoder_.embedding_dim = config_.embedding_dim;
		encoder_.use_indicator = config_.mask_indicator;
		const std::int64_t in_dim = encoder_.width(layout_, true);
		const int d = config_.transformer_dim;
		const int ff = config_.transformer_ff_dim;
		in_w_ = register_param("in.w", in_dim, d, in_dim, rng);
		in_b_ = register_param("in.b", 1, d, in_dim, rng);
		for (int l = 0; l < config_.transformer_layers; ++l) {
			const std::string p = "enc." + std::to_string(l) + ".";
			Layer lp;
			lp.wq = register_param(p + "wq", d, d, d, rng);
			lp.bq = register_param(p + "bq", 1, d, d, rng);
			lp.wk = register_param(p + "wk", d, d, d, rng);
			lp.bk = register_param(p + "bk", 1, d, d, rng);
			lp.wv = register_param(p + "wv", d, d, d, rng);
			lp.bv = register_param(p + "bv", 1, d, d, rng);
			lp.wo = register_param(p + "wo", d, d, d, rng);
			lp.bo = register_param(p + "bo", 1, d, d, rng);
			lp.ff1_w = register_param(p + "ff1.w", d, ff, d, rng);
			lp.ff1_b = register_param(p + "ff1.b", 1, ff, d, rng);
			lp.ff2_w = register_param(p + "ff2.w", ff, d, ff, rng);
			lp.ff2_b = register_param(p + "ff2.b", 1, d, ff, rng);
			lp.ln1_g = register_param(p + "ln1.g", 1, d, 0, rng);
			lp.ln1_b = register_param(p + "ln1.b", 1, d, 0, rng);
			lp.ln2_g = register_param(p + "ln2.g", 1, d, 0, rng);
			lp.ln2_b = register_param(p + "ln2.b", 1, d, 0, rng);
			lp.ln1_g->value.fill(1.0f);
			lp.ln1_b->value.fill(0.0f);
			lp.ln2_g->value.fill(1.0f);
			lp.ln2_b->value.fill(0.0f);
			layers_.push_back(std::move(lp));
		}
		const std::int64_t out = layout_.forecast_channels() * config_.n_quantiles();
		head_w_ = register_param("head.w", d, out, d, rng);
		head_b_ = register_param("head.b", 1, out, d, rng);
	}

	Value forward(const StepBatch &sb, bool training, Rng *rng) override {
		const std::int64_t B = sb.batch, L = sb.length;
		const int d = config_.transformer_dim;
		const float p = static_cast<float>(config_.transformer_dropout);
		Value x = nn::affine(encoder_.encode(sb, layout_, true), in_w_, in_b_);
		x = nn::add(x, nn::make_constant(positional_encoding(B, L, d)));
		if (training) {
			x = nn::dropout(x, p, *rng, true);
		}
		for (const auto &lp : layers_) {
			Value q = nn::affine(x, lp.wq, lp.bq);
			Value k = nn::affine(x, lp.wk, lp.bk);
			Value v = nn::affine(x, lp.wv, lp.bv);
			// full bidirectional attention: future predictor steps are real inputs here
			Value att = nn::attention(q, k, v, B, L, config_.transformer_heads);
			Value ao = nn::affine(att, lp.wo, lp.bo);
			if (training) {
				ao = nn::dropout(ao, p, *rng, true);
			}
			x = nn::layer_norm(nn::add(x, ao), lp.ln1_g, lp.ln1_b);
			Value ff = nn::affine(nn::relu(nn::affine(x, lp.ff1_w, lp.ff1_b)), lp.ff2_w, lp.ff2_b);
			if (training) {
				ff = nn::dropout(ff, p, *rng, true);
			}
			x = nn::layer_norm(nn::add(x, ff), lp.ln2_g, lp.ln2_b);
		}
		return nn::affine(x, head_w_, head_b_);
	}

private:
	static nn::Tensor positional_encoding(std::int64_t batch, std::int64_t length, int dim) {
		nn::Tensor pe(batch * length, dim);
		for (std::int64_t t = 0; t < length; ++t) {
			for (int j = 0; j < dim; j += 2) {
				const double angle =
				    static_cast<double>(t) / std::pow(10000.0, static_cast<double>(j) / dim);
				const float s = static_cast<float>(std::sin(angle));
				const float c = static_cast<float>(std::cos(angle));
				for (std::int64_t b = 0; b < batch; ++b) {
					float *row = pe.row(b * length + t);
					row[j] = s;
					if (j + 1 < dim) {
						row[j + 1] = c;
					}
				}
			}
		}
		return pe;
	}

	struct Layer {
		Value wq, bq, wk, bk, wv, bv, wo, bo;
		Value ff1_w, ff1_b, ff2_w, ff2_b;
		Value ln1_g, ln1_b, ln2_g, ln2_b;
	};
	InputEncoder encoder_;
	Value in_w_, in_b_;
	std::vector<Layer> layers_;
	Value head_w_, head_b_;
};

/// Sample-based net: maps each step's predictors to that step's outputs; the
/// forecast channels are never part of its input.
class FcnnModel final : public SequenceModel {
public:
	FcnnModel(ModelConfig config, InputLayout layout, std::uint64_t seed)
	    : SequenceModel(std::move(config), std::move(layout)) {
		Rng rng(seed);
		for (int c = 0; c < 3; ++c) {
			encoder_.tables[static_cast<std::size_t>(c)] =
			    register_param("embedding." + std::to_string(c), InputLayout::cardinalities[c] + 1,
			                   config_.embedding_dim, 0, rng);
		}
		encoder_.embedding_dim = config_.embedding_dim;
		encoder_.use_indicator = config_.mask_indicator;
		std::int64_t in_dim = encoder_.width(layout_, false);
		for (int l = 0; l < config_.fcnn_layers; ++l) {
			const std::string p = "fc." + std::to_string(l) + ".";
			w_.push_back(register_param(p + "w", in_dim, config_.fcnn_width, in_dim, rng));
			b_.push_back(register_param(p + "b", 1, config_.fcnn_width, in_dim, rng));
			in_dim = config_.fcnn_width;
		}
		const std::int64_t out = layout_.forecast_channels() * config_.n_quantiles();
		head_w_ = register_param("head.w", in_dim, out, in_dim, rng);
		head_b_ = register_param("head.b", 1, out, in_dim, rng);
	}

	Value forward(const StepBatch &sb, bool training, Rng *rng) override {
		(void)training;
		(void)rng;
		Value x = encoder_.encode(sb, layout_, false);
		for (std::size_t l = 0; l < w_.size(); ++l) {
			x = nn::relu(nn::affine(x, w_[l], b_[l]));
		}
		return nn::affine(x, head_w_, head_b_);
	}

private:
	InputEncoder encoder_;
	std::vector<Value> w_, b_;
	Value head_w_, head_b_;
};

} // namespace

std::unique_ptr<SequenceModel> build_model(const ModelConfig &config, const InputLayout &layout,
                                           std::uint64_t seed) {
	config.validate();
	if (layout.n_zones() < 1) {
		throw UsageError("model: input layout needs at least one zone");
	}
	switch (config.architecture) {
	case Architecture::lstm:
		return std::make_unique<LstmModel>(config, layout, seed);
	case Architecture::tcn:
		return std::make_unique<TcnModel>(config, layout, seed);
	case Architecture::transformer:
		return std::make_unique<TransformerModel>(config, layout, seed);
	case Architecture::fcnn:
		return std::make_unique<FcnnModel>(config, layout, seed);
	default:
		throw UsageError("architecture '" + architecture_name(config.architecture) +
		                 "' is fitted closed-form; use fit_linear");
	}
}

std::vector<double> LinearModel::predict(std::span<const double> x) const {
	if (static_cast<std::int64_t>(x.size()) != coef.rows) {
		throw UsageError("linear predict: feature vector has " + std::to_string(x.size()) +
		                 " entries, model expects " + std::to_string(coef.rows));
	}
	std::vector<double> y(static_cast<std::size_t>(coef.cols), 0.0);
	for (std::int64_t i = 0; i < coef.rows; ++i) {
		const double xv = x[static_cast<std::size_t>(i)];
		for (std::int64_t j = 0; j < coef.cols; ++j) {
			y[static_cast<std::size_t>(j)] += xv * coef.at(i, j);
		}
	}
	return y;
}

namespace {

/// In-place Cholesky solve of (G) B = C for symmetric positive definite G.
void cholesky_solve(DMat &g, DMat &c) {
	const std::int64_t n = g.rows;
	for (std::int64_t i = 0; i < n; ++i) {
		for (std::int64_t j = 0; j <= i; ++j) {
			double s = g.at(i, j);
			for (std::int64_t k = 0; k < j; ++k) {
				s -= g.at(i, k) * g.at(j, k);
			}
			if (i == j) {
				if (s <= 1e-12) {
					throw DataError("singular design matrix (use ridge for a regularized fit)");
				}
				g.at(i, i) = std::sqrt(s);
			} else {
				g.at(i, j) = s / g.at(j, j);
			}
		}
	}
	// forward then backward substitution per output column
	for (std::int64_t col = 0; col < c.cols; ++col) {
		for (std::int64_t i = 0; i < n; ++i) {
			double s = c.at(i, col);
			for (std::int64_t k = 0; k < i; ++k) {
				s -= g.at(i, k) * c.at(k, col);
			}
			c.at(i, col) = s / g.at(i, i);
		}
		for (std::int64_t i = n - 1; i >= 0; --i) {
			double s = c.at(i, col);
			for (std::int64_t k = i + 1; k < n; ++k) {
				s -= g.at(k, i) * c.at(k, col);
			}
			c.at(i, col) = s / g.at(i, i);
		}
	}
}

DMat lasso_fit(const DMat &x, const DMat &y, double lambda) {
	const std::int64_t n = x.rows, kDim = x.cols, m = y.cols;
	DMat gram(kDim, kDim); // X^T X / n
	for (std::int64_t i = 0; i < kDim; ++i) {
		for (std::int64_t j = 0; j <= i; ++j) {
			double s = 0.0;
			for (std::int64_t r = 0; r < n; ++r) {
				s += x.at(r, i) * x.at(r, j);
			}
			gram.at(i, j) = gram.at(j, i) = s / static_cast<double>(n);
		}
	}
	DMat xty(kDim, m); // X^T Y / n
	for (std::int64_t i = 0; i < kDim; ++i) {
		for (std::int64_t j = 0; j < m; ++j) {
			double s = 0.0;
			for (std::int64_t r = 0; r < n; ++r) {
				s += x.at(r, i) * y.at(r, j);
			}
			xty.at(i, j) = s / static_cast<double>(n);
		}
	}
	DMat beta(kDim, m);
	for (std::int64_t col = 0; col < m; ++col) {
		for (int iter = 0; iter < 100000; ++iter) {
			double max_delta = 0.0, max_beta = 0.0;
			for (std::int64_t j = 0; j < kDim; ++j) {
				double rho = xty.at(j, col);
				for (std::int64_t k = 0; k < kDim; ++k) {
					if (k != j) {
						rho -= gram.at(j, k) * beta.at(k, col);
					}
				}
				const double denom = gram.at(j, j);
				double next = 0.0;
				if (denom > 0.0) {
					if (rho > lambda) {
						next = (rho - lambda) / denom;
					} else if (rho < -lambda) {
						next = (rho + lambda) / denom;
					}
				}
				max_delta = std::max(max_delta, std::abs(next - beta.at(j, col)));
				beta.at(j, col) = next;
				max_beta = std::max(max_beta, std::abs(next));
			}
			if (max_delta <= 1e-10 * std::max(1.0, max_beta)) {
				break;
			}
		}
	}
	return beta;
}

} // namespace

LinearModel fit_linear(Architecture variant, const DMat &x, const DMat &y, double lambda) {
	if (!is_linear(variant)) {
		throw UsageError("fit_linear expects a linear architecture");
	}
	if (x.rows != y.rows) {
		throw UsageError("fit_linear: X and Y row counts differ");
	}
	if (x.rows == 0 || x.cols == 0) {
		throw UsageError("fit_linear: empty design matrix");
	}
	if (variant == Architecture::linear_ols && x.rows < x.cols) {
		throw UsageError("fit_linear: fewer rows than columns; ordinary least squares is "
		                 "underdetermined (use ridge)");
	}
	LinearModel model;
	model.variant = variant;
	model.lambda = variant == Architecture::linear_ols ? 0.0 : lambda;
	if (variant == Architecture::linear_lasso) {
		model.coef = lasso_fit(x, y, lambda);
		return model;
	}
	DMat gram(x.cols, x.cols);
	for (std::int64_t i = 0; i < x.cols; ++i) {
		for (std::int64_t j = 0; j <= i; ++j) {
			double s = 0.0;
			for (std::int64_t r = 0; r < x.rows; ++r) {
				s += x.at(r, i) * x.at(r, j);
			}
			gram.at(i, j) = gram.at(j, i) = s;
		}
	}
	if (variant == Architecture::linear_ridge) {
		for (std::int64_t i = 0; i < x.cols; ++i) {
			gram.at(i, i) += lambda;
		}
	}
	DMat xty(x.cols, y.cols);
	for (std::int64_t i = 0; i < x.cols; ++i) {
		for (std::int64_t j = 0; j < y.cols; ++j) {
			double s = 0.0;
			for (std::int64_t r = 0; r < x.rows; ++r) {
				s += x.at(r, i) * y.at(r, j);
			}
			xty.at(i, j) = s;
		}
	}
	cholesky_solve(gram, xty);
	model.coef = std::move(xty);
	return model;
}

} // namespace maskcast
