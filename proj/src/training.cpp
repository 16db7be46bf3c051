#include "maskcast/training.hpp"

#include "maskcast/errors.hpp"
#include "maskcast/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace maskcast {

Method parse_method(const std::string &name) {
	if (name == "mmmpf") {
		return Method::mmmpf;
	}
	if (name == "rsf") {
		return Method::rsf;
	}
	if (name == "dmf") {
		return Method::dmf;
	}
	if (name == "sbf") {
		return Method::sbf;
	}
	throw UsageError("unknown method '" + name + "': expected one of mmmpf, rsf, dmf, sbf");
}

std::string method_name(Method m) {
	switch (m) {
	case Method::mmmpf:
		return "mmmpf";
	case Method::rsf:
		return "rsf";
	case Method::dmf:
		return "dmf";
	case Method::sbf:
		return "sbf";
	}
	return "?";
}

void TrainingConfig::validate() const {
	if (!(learning_rate > 0.0)) {
		throw UsageError("training: learning rate must be positive");
	}
	if (batch_size < 1) {
		throw UsageError("training: batch size must be at least 1");
	}
	if (epochs < 1) {
		throw UsageError("training: epoch count must be at least 1");
	}
	if (grad_clip < 0.0) {
		throw UsageError("training: gradient clip must be nonnegative");
	}
}

void TrainingReport::write_jsonl(const std::string &path) const {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw DataError("cannot write '" + path + "'");
	}
	char buf[256];
	for (const auto &e : epochs) {
		std::snprintf(buf, sizeof buf,
		              "{\"epoch\":%d,\"train_loss\":%.9g,\"val_loss\":%.9g,\"seconds\":%.3f}\n",
		              e.epoch, e.train_loss, e.val_loss, e.seconds);
		out << buf;
	}
	std::snprintf(buf, sizeof buf, "{\"best_epoch\":%d,\"best_val_loss\":%.9g}\n", best_epoch,
	              best_val_loss);
	out << buf;
}

double pinball_loss(double y, double y_hat, double tau) {
	if (!(tau > 0.0 && tau < 1.0)) {
		throw UsageError("pinball loss: tau must lie in (0, 1)");
	}
	const double ind = y <= y_hat ? 1.0 : 0.0;
	return (y_hat - y) * (ind - tau);
}

double masked_quantile_loss(std::span<const double> pred, std::span<const double> truth,
                            std::span<const std::uint8_t> step_mask, std::int64_t batch,
                            std::int64_t length, std::int64_t m, std::span<const double> taus) {
	const auto q = static_cast<std::int64_t>(taus.size());
	if (static_cast<std::int64_t>(pred.size()) != batch * length * m * q ||
	    static_cast<std::int64_t>(truth.size()) != batch * length * m ||
	    static_cast<std::int64_t>(step_mask.size()) != length) {
		throw UsageError("masked quantile loss: inconsistent shapes");
	}
	std::int64_t masked_steps = 0;
	for (auto f : step_mask) {
		masked_steps += f ? 1 : 0;
	}
	if (masked_steps == 0) {
		throw UsageError("masked quantile loss: empty mask");
	}
	double loss = 0.0;
	for (std::int64_t b = 0; b < batch; ++b) {
		for (std::int64_t t = 0; t < length; ++t) {
			if (!step_mask[static_cast<std::size_t>(t)]) {
				continue;
			}
			for (std::int64_t v = 0; v < m; ++v) {
				const double y = truth[static_cast<std::size_t>((b * length + t) * m + v)];
				for (std::int64_t j = 0; j < q; ++j) {
					const double y_hat =
					    pred[static_cast<std::size_t>(((b * length + t) * m + v) * q + j)];
					loss += pinball_loss(y, y_hat, taus[static_cast<std::size_t>(j)]);
				}
			}
		}
	}
	return loss / (static_cast<double>(batch) * static_cast<double>(masked_steps) *
	               static_cast<double>(m));
}

StepBatch mmmpf_step_batch(const MaskedBatch &masked, const InputLayout &layout) {
	const auto batch = static_cast<std::int64_t>(masked.windows.size());
	const std::int64_t len = masked.length;
	const int zp = layout.predictor_channels();
	const int zf = layout.forecast_channels();
	StepBatch sb(batch, len, layout);
	for (std::int64_t b = 0; b < batch; ++b) {
		const Window &w = *masked.windows[static_cast<std::size_t>(b)];
		for (std::int64_t t = 0; t < len; ++t) {
			const auto r = sb.row(b, t);
			const auto src = static_cast<std::size_t>(t);
			sb.categorical[static_cast<std::size_t>(r) * 3 + 0] = w.categorical[src * 3 + 0];
			sb.categorical[static_cast<std::size_t>(r) * 3 + 1] = w.categorical[src * 3 + 1];
			sb.categorical[static_cast<std::size_t>(r) * 3 + 2] = w.categorical[src * 3 + 2];
			float *cont = sb.continuous.row(r);
			std::copy(w.predictors.begin() + static_cast<std::ptrdiff_t>(src) * zp,
			          w.predictors.begin() + static_cast<std::ptrdiff_t>(src + 1) * zp, cont);
			const float *fill =
			    masked.forecast_filled.data() + (static_cast<std::size_t>(b) * len + src) * zf;
			std::copy(fill, fill + zf, cont + zp);
			if (masked.step_masked[src]) {
				sb.set_masked_marker(b, t);
			}
		}
	}
	return sb;
}

namespace {

StepBatch history_plus_placeholders(std::span<const Window *const> windows,
                                    const InputLayout &layout, std::int64_t length) {
	const auto batch = static_cast<std::int64_t>(windows.size());
	const int zp = layout.predictor_channels();
	const int zf = layout.forecast_channels();
	StepBatch sb(batch, length, layout);
	for (std::int64_t b = 0; b < batch; ++b) {
		const Window &w = *windows[static_cast<std::size_t>(b)];
		const std::int64_t history = w.history;
		for (std::int64_t t = 0; t < length; ++t) {
			if (t >= history) {
				sb.set_placeholder(b, t);
				continue;
			}
			const auto r = sb.row(b, t);
			const auto src = static_cast<std::size_t>(t);
			for (int c = 0; c < 3; ++c) {
				sb.categorical[static_cast<std::size_t>(r) * 3 + c] = w.categorical[src * 3 + c];
			}
			float *cont = sb.continuous.row(r);
			std::copy(w.predictors.begin() + static_cast<std::ptrdiff_t>(src) * zp,
			          w.predictors.begin() + static_cast<std::ptrdiff_t>(src + 1) * zp, cont);
			std::copy(w.forecast.begin() + static_cast<std::ptrdiff_t>(src) * zf,
			          w.forecast.begin() + static_cast<std::ptrdiff_t>(src + 1) * zf, cont + zp);
		}
	}
	return sb;
}

} // namespace

StepBatch rsf_step_batch(std::span<const Window *const> windows, const InputLayout &layout) {
	const std::int64_t length = windows.front()->history + 1;
	return history_plus_placeholders(windows, layout, length);
}

StepBatch dmf_step_batch(std::span<const Window *const> windows, const InputLayout &layout) {
	const std::int64_t length = windows.front()->length;
	return history_plus_placeholders(windows, layout, length);
}

nn::Tensor window_targets(std::span<const Window *const> windows, std::int64_t length) {
	const auto batch = static_cast<std::int64_t>(windows.size());
	const int zf = windows.front()->n_zones;
	nn::Tensor t(batch * length, zf);
	for (std::int64_t b = 0; b < batch; ++b) {
		const Window &w = *windows[static_cast<std::size_t>(b)];
		std::copy(w.forecast.begin(), w.forecast.begin() + static_cast<std::ptrdiff_t>(length * zf),
		          t.row(b * length));
	}
	return t;
}

namespace {

class Adam {
public:
	Adam(std::vector<std::pair<std::string, nn::Value>> &params, double lr, double clip)
	    : params_(params), lr_(lr), clip_(clip) {
		for (auto &[name, p] : params_) {
			m_.emplace_back(p->value.rows, p->value.cols);
			v_.emplace_back(p->value.rows, p->value.cols);
		}
	}

	void zero_grad() {
		for (auto &[name, p] : params_) {
			p->zero_grad();
		}
	}

	void step() {
		++t_;
		if (clip_ > 0.0) {
			double norm_sq = 0.0;
			for (auto &[name, p] : params_) {
				for (float g : p->grad.data) {
					norm_sq += static_cast<double>(g) * g;
				}
			}
			const double norm = std::sqrt(norm_sq);
			if (norm > clip_) {
				const float s = static_cast<float>(clip_ / norm);
				for (auto &[name, p] : params_) {
					for (float &g : p->grad.data) {
						g *= s;
					}
				}
			}
		}
		const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
		const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
		const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
		for (std::size_t i = 0; i < params_.size(); ++i) {
			auto &p = params_[i].second;
			auto &m = m_[i];
			auto &v = v_[i];
			for (std::size_t j = 0; j < p->value.data.size(); ++j) {
				const double g = p->grad.data[j];
				m.data[j] = static_cast<float>(b1 * m.data[j] + (1.0 - b1) * g);
				v.data[j] = static_cast<float>(b2 * v.data[j] + (1.0 - b2) * g * g);
				const double mhat = m.data[j] / bc1;
				const double vhat = v.data[j] / bc2;
				p->value.data[j] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps));
			}
		}
	}

private:
	std::vector<std::pair<std::string, nn::Value>> &params_;
	std::vector<nn::Tensor> m_, v_;
	double lr_, clip_;
	std::int64_t t_ = 0;
};

std::vector<float> step_weights(std::int64_t batch, std::int64_t length,
                                std::span<const std::uint8_t> step_masked) {
	std::vector<float> w(static_cast<std::size_t>(batch * length), 0.0f);
	for (std::int64_t b = 0; b < batch; ++b) {
		for (std::int64_t t = 0; t < length; ++t) {
			if (step_masked[static_cast<std::size_t>(t)]) {
				w[static_cast<std::size_t>(b * length + t)] = 1.0f;
			}
		}
	}
	return w;
}

std::vector<std::uint8_t> suffix_mask(std::int64_t length, std::int64_t masked) {
	std::vector<std::uint8_t> m(static_cast<std::size_t>(length), 0);
	for (std::int64_t t = length - masked; t < length; ++t) {
		m[static_cast<std::size_t>(t)] = 1;
	}
	return m;
}

/// Model inputs for one shard, fully materialized before the compute phase so
/// every rng draw happens in a fixed serial order.
struct PreparedBatch {
	StepBatch sb;
	nn::Tensor targets;
	std::vector<float> weights;
	std::int64_t rows = 0;
};

/// prepare(chunk, shard, rng) -> PreparedBatch; runs on the coordinating
/// thread. The shard index lets per-batch draws (the mask length) happen once.
using PrepareFn =
    std::function<PreparedBatch(std::span<const Window *const>, int shard, Rng &rng)>;

nn::Value prepared_loss(SequenceModel &model, const PreparedBatch &pb, bool training,
                        Rng *dropout_rng) {
	nn::Value pred = model.forward(pb.sb, training, dropout_rng);
	return nn::quantile_loss(pred, pb.targets, pb.weights, model.config().quantile_levels);
}

/// Shared epoch loop: shuffle, minibatch, forward/backward/step, validate with
/// a fixed-stream rng, keep the best-validation parameter snapshot. Batches
/// always split into two fixed shards (a replica model serves the second), so
/// parallel and serial execution produce identical numbers.
TrainingReport run_training(SequenceModel &model, const std::vector<Window> &train,
                            const std::vector<Window> &validation, const TrainingConfig &config,
                            const PrepareFn &prepare_train, const PrepareFn &prepare_val,
                            std::uint64_t replica_build_seed) {
	config.validate();
	if (train.empty()) {
		throw UsageError("training: no training windows");
	}
	if (validation.empty()) {
		throw UsageError("training: no validation windows");
	}
	Rng rng(config.seed);
	const Rng val_rng_proto = rng.fork(0x76616c); // fixed stream: validation fills repeat per epoch

	std::vector<const Window *> order;
	order.reserve(train.size());
	for (const auto &w : train) {
		order.push_back(&w);
	}
	std::vector<const Window *> val_ptrs;
	val_ptrs.reserve(validation.size());
	for (const auto &w : validation) {
		val_ptrs.push_back(&w);
	}

	auto replica = build_model(model.config(), model.layout(), replica_build_seed);
	auto &params = model.named_parameters();
	auto &replica_params = replica->named_parameters();
	auto sync_replica = [&] {
		for (std::size_t i = 0; i < params.size(); ++i) {
			replica_params[i].second->value = params[i].second->value;
		}
	};
	sync_replica();

	// Runs both shards (primary model + replica), returns the combined loss.
	// Gradients, when requested, end up combined in the primary's grad buffers.
	std::uint64_t step_counter = 0;
	auto run_shards = [&](std::span<const Window *const> chunk, bool training, Rng &rng_in,
	                      const PrepareFn &prepare, bool with_grad) {
		const std::size_t n = chunk.size();
		const std::size_t n0 = (n + 1) / 2;
		PreparedBatch pb0 = prepare(chunk.subspan(0, n0), 0, rng_in);
		PreparedBatch pb1;
		const bool two = n0 < n;
		if (two) {
			pb1 = prepare(chunk.subspan(n0), 1, rng_in);
		}
		Rng drop0 = rng_in.fork(2 * step_counter + 0x0d0);
		Rng drop1 = rng_in.fork(2 * step_counter + 0x0d1);
		++step_counter;

		nn::Value loss0, loss1;
		parallel_for(
		    two ? 2 : 1,
		    [&](std::int64_t b, std::int64_t e) {
			    for (std::int64_t s = b; s < e; ++s) {
				    if (s == 0) {
					    loss0 = prepared_loss(model, pb0, training, &drop0);
					    if (with_grad) {
						    nn::backward(loss0);
					    }
				    } else {
					    loss1 = prepared_loss(*replica, pb1, training, &drop1);
					    if (with_grad) {
						    nn::backward(loss1);
					    }
				    }
			    }
		    },
		    1);

		const double w0 = static_cast<double>(pb0.rows) / static_cast<double>(n);
		double loss = w0 * loss0->value.data[0];
		if (two) {
			const double w1 = static_cast<double>(pb1.rows) / static_cast<double>(n);
			loss += w1 * loss1->value.data[0];
			if (with_grad) {
				for (std::size_t i = 0; i < params.size(); ++i) {
					auto &g = params[i].second->grad;
					auto &gr = replica_params[i].second->grad;
					for (std::size_t j = 0; j < g.data.size(); ++j) {
						g.data[j] = static_cast<float>(w0 * g.data[j] + w1 * gr.data[j]);
					}
				}
			}
		} else if (with_grad) {
			for (std::size_t i = 0; i < params.size(); ++i) {
				for (auto &g : params[i].second->grad.data) {
					g = static_cast<float>(w0 * g);
				}
			}
		}
		return loss;
	};

	Adam adam(params, config.learning_rate, config.grad_clip);
	TrainingReport report;
	std::vector<nn::Tensor> best;
	double best_val = 0.0;

	auto evaluate = [&] {
		Rng vrng = val_rng_proto;
		double total = 0.0;
		std::int64_t count = 0;
		for (std::size_t at = 0; at < val_ptrs.size();
		     at += static_cast<std::size_t>(config.batch_size)) {
			const auto n = std::min(static_cast<std::size_t>(config.batch_size), val_ptrs.size() - at);
			std::span<const Window *const> chunk(val_ptrs.data() + at, n);
			total += run_shards(chunk, false, vrng, prepare_val, false) * static_cast<double>(n);
			count += static_cast<std::int64_t>(n);
		}
		return total / static_cast<double>(count);
	};

	for (int epoch = 1; epoch <= config.epochs; ++epoch) {
		const auto t0 = std::chrono::steady_clock::now();
		rng.shuffle(order);
		double train_total = 0.0;
		std::int64_t train_count = 0;
		for (std::size_t at = 0; at < order.size();
		     at += static_cast<std::size_t>(config.batch_size)) {
			const auto n = std::min(static_cast<std::size_t>(config.batch_size), order.size() - at);
			std::span<const Window *const> chunk(order.data() + at, n);
			adam.zero_grad();
			for (auto &[name, p] : replica_params) {
				p->zero_grad();
			}
			const double loss = run_shards(chunk, true, rng, prepare_train, true);
			if (!std::isfinite(loss)) {
				throw TrainingError("training diverged: non-finite loss at epoch " +
				                    std::to_string(epoch) + ", batch offset " + std::to_string(at) +
				                    " (method " + method_name(config.method) + ", lr " +
				                    std::to_string(config.learning_rate) + ")");
			}
			adam.step();
			sync_replica();
			train_total += loss * static_cast<double>(n);
			train_count += static_cast<std::int64_t>(n);
		}
		const double val_loss = evaluate();
		if (!std::isfinite(val_loss)) {
			throw TrainingError("training diverged: non-finite validation loss at epoch " +
			                    std::to_string(epoch));
		}
		const auto t1 = std::chrono::steady_clock::now();
		EpochRecord rec;
		rec.epoch = epoch;
		rec.train_loss = train_total / static_cast<double>(train_count);
		rec.val_loss = val_loss;
		rec.seconds = std::chrono::duration<double>(t1 - t0).count();
		report.epochs.push_back(rec);
		if (best.empty() || val_loss < best_val) {
			best_val = val_loss;
			report.best_epoch = epoch;
			best.clear();
			for (auto &[name, p] : params) {
				best.push_back(p->value);
			}
		}
	}
	// restore the best-validation checkpoint
	for (std::size_t i = 0; i < params.size(); ++i) {
		params[i].second->value = best[i];
	}
	report.best_val_loss = best_val;
	return report;
}

} // namespace

TrainingReport train_mmmpf(SequenceModel &model, const std::vector<Window> &train,
                           const std::vector<Window> &validation, const NormStats &stats,
                           const WindowSpec &spec, const TrainingConfig &config) {
	if (config.method != Method::mmmpf) {
		throw UsageError("train_mmmpf called with method " + method_name(config.method));
	}
	const InputLayout &layout = model.layout();
	const int full = spec.max_horizon + 1;

	auto make_prepared = [&](std::span<const Window *const> chunk, int l_m, Rng &rng) {
		MaskedBatch masked = apply_mask(chunk, l_m, rng, stats);
		auto mask = suffix_mask(masked.length, l_m);
		PreparedBatch pb;
		pb.sb = mmmpf_step_batch(masked, layout);
		pb.targets = window_targets(chunk, pb.sb.length);
		pb.weights = step_weights(pb.sb.batch, pb.sb.length, mask);
		pb.rows = pb.sb.batch;
		return pb;
	};
	// one mask length per optimizer batch, shared by both shards; validation
	// always uses the hardest case, the full k+1 mask
	auto prepare_train = [&, l_m = 1](std::span<const Window *const> chunk, int shard,
	                                  Rng &rng) mutable {
		if (shard == 0) {
			l_m = sample_mask_length(rng, spec.max_horizon);
		}
		return make_prepared(chunk, l_m, rng);
	};
	auto prepare_val = [&](std::span<const Window *const> chunk, int, Rng &rng) {
		return make_prepared(chunk, full, rng);
	};
	return run_training(model, train, validation, config, prepare_train, prepare_val,
	                    config.seed ^ 0x5eedbeef);
}

namespace {

PrepareFn placeholder_prepare(const InputLayout &layout, std::int64_t length,
                              std::vector<std::uint8_t> mask) {
	return [&layout, length, mask = std::move(mask)](std::span<const Window *const> chunk, int,
	                                                 Rng &) {
		PreparedBatch pb;
		pb.sb = history_plus_placeholders(chunk, layout, length);
		pb.targets = window_targets(chunk, length);
		pb.weights = step_weights(pb.sb.batch, length, mask);
		pb.rows = pb.sb.batch;
		return pb;
	};
}

} // namespace

TrainingReport train_rsf(SequenceModel &model, const std::vector<Window> &train,
                         const std::vector<Window> &validation, const NormStats &stats,
                         const WindowSpec &spec, const TrainingConfig &config) {
	if (config.method != Method::rsf) {
		throw UsageError("train_rsf called with method " + method_name(config.method));
	}
	(void)stats;
	const std::int64_t length = spec.history + 1;
	// teacher forcing: loss on the single next step only
	auto fn = placeholder_prepare(model.layout(), length, suffix_mask(length, 1));
	return run_training(model, train, validation, config, fn, fn, config.seed ^ 0x5eedbeef);
}

TrainingReport train_dmf(SequenceModel &model, const std::vector<Window> &train,
                         const std::vector<Window> &validation, const NormStats &stats,
                         const WindowSpec &spec, const TrainingConfig &config) {
	if (config.method != Method::dmf) {
		throw UsageError("train_dmf called with method " + method_name(config.method));
	}
	(void)stats;
	const std::int64_t length = spec.window_len();
	// the whole future block carries the loss
	auto fn =
	    placeholder_prepare(model.layout(), length, suffix_mask(length, spec.max_horizon + 1));
	return run_training(model, train, validation, config, fn, fn, config.seed ^ 0x5eedbeef);
}

namespace {

/// Day tables become one-step "windows" so the FCNN shares the epoch loop.
std::vector<Window> day_windows(const FeatureTable &table, const NormStats &stats) {
	std::vector<Window> days;
	days.reserve(table.n_days());
	const int z = table.n_zones();
	for (std::size_t d = 0; d < table.n_days(); ++d) {
		Window w;
		w.origin_index = static_cast<std::int64_t>(d);
		w.origin_date = table.dates[d];
		w.length = 1;
		w.history = 0;
		w.n_zones = z;
		w.categorical = {table.calendar[d][0] - 1, table.calendar[d][1] - 1, table.calendar[d][2]};
		w.predictors.resize(static_cast<std::size_t>(stats.n_predictor));
		for (int c = 0; c < stats.n_predictor; ++c) {
			w.predictors[static_cast<std::size_t>(c)] =
			    static_cast<float>(stats.normalize(table.weather(d, c / 2, c % 2 == 1), c));
		}
		w.forecast.resize(static_cast<std::size_t>(z));
		for (int s = 0; s < z; ++s) {
			w.forecast[static_cast<std::size_t>(s)] = static_cast<float>(
			    stats.normalize(table.peak(d, s), stats.forecast_channel(s)));
		}
		days.push_back(std::move(w));
	}
	return days;
}

} // namespace

TrainingReport train_sbf_fcnn(SequenceModel &model, const FeatureTable &train,
                              const FeatureTable &validation, const NormStats &stats,
                              const TrainingConfig &config) {
	if (config.method != Method::sbf) {
		throw UsageError("train_sbf_fcnn called with method " + method_name(config.method));
	}
	const InputLayout &layout = model.layout();
	auto train_days = day_windows(train, stats);
	auto val_days = day_windows(validation, stats);
	auto fn = [&layout](std::span<const Window *const> chunk, int, Rng &) {
		const auto batch = static_cast<std::int64_t>(chunk.size());
		PreparedBatch pb;
		pb.sb = StepBatch(batch, 1, layout);
		for (std::int64_t b = 0; b < batch; ++b) {
			const Window &w = *chunk[static_cast<std::size_t>(b)];
			for (int c = 0; c < 3; ++c) {
				pb.sb.categorical[static_cast<std::size_t>(b) * 3 + c] =
				    w.categorical[static_cast<std::size_t>(c)];
			}
			float *cont = pb.sb.continuous.row(b);
			std::copy(w.predictors.begin(), w.predictors.end(), cont);
			// forecast channels stay zero; the sample-based net never reads them
		}
		pb.targets = window_targets(chunk, 1);
		pb.weights.assign(static_cast<std::size_t>(batch), 1.0f);
		pb.rows = batch;
		return pb;
	};
	return run_training(model, train_days, val_days, config, fn, fn, config.seed ^ 0x5eedbeef);
}

std::vector<double> sbf_design_row(const std::array<int, 3> &calendar,
                                   std::span<const double> weather_normalized) {
	std::vector<double> row;
	row.reserve(1 + 11 + 30 + 6 + weather_normalized.size());
	row.push_back(1.0); // intercept
	for (int v = 2; v <= 12; ++v) {
		row.push_back(calendar[0] == v ? 1.0 : 0.0);
	}
	for (int v = 2; v <= 31; ++v) {
		row.push_back(calendar[1] == v ? 1.0 : 0.0);
	}
	for (int v = 1; v <= 6; ++v) {
		row.push_back(calendar[2] == v ? 1.0 : 0.0);
	}
	row.insert(row.end(), weather_normalized.begin(), weather_normalized.end());
	return row;
}

LinearModel train_sbf_linear(Architecture variant, const FeatureTable &train,
                             const NormStats &stats, double lambda) {
	const auto n = static_cast<std::int64_t>(train.n_days());
	const int z = train.n_zones();
	std::vector<double> weather(static_cast<std::size_t>(stats.n_predictor));
	DMat x;
	DMat y(n, z);
	for (std::int64_t d = 0; d < n; ++d) {
		for (int c = 0; c < stats.n_predictor; ++c) {
			weather[static_cast<std::size_t>(c)] =
			    stats.normalize(train.weather(static_cast<std::size_t>(d), c / 2, c % 2 == 1), c);
		}
		auto row = sbf_design_row(train.calendar[static_cast<std::size_t>(d)], weather);
		if (d == 0) {
			x = DMat(n, static_cast<std::int64_t>(row.size()));
		}
		std::copy(row.begin(), row.end(), x.a.begin() + d * x.cols);
		for (int s = 0; s < z; ++s) {
			y.at(d, s) =
			    stats.normalize(train.peak(static_cast<std::size_t>(d), s), stats.forecast_channel(s));
		}
	}
	return fit_linear(variant, x, y, lambda);
}

} // namespace maskcast
