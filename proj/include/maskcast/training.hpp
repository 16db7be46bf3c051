#pragma once

#include "maskcast/dataio.hpp"
#include "maskcast/models.hpp"
#include "maskcast/windowing.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace maskcast {

enum class Method { mmmpf, rsf, dmf, sbf };

Method parse_method(const std::string &name); // throws UsageError listing the choices
std::string method_name(Method m);

struct TrainingConfig {
	Method method = Method::mmmpf;
	double learning_rate = 0.001;
	int batch_size = 1000;
	int epochs = 1000;
	double grad_clip = 5.0; // global-norm clip; 0 disables
	std::uint64_t seed = 0;

	void validate() const;
};

struct EpochRecord {
	int epoch = 0;
	double train_loss = 0.0;
	double val_loss = 0.0;
	double seconds = 0.0;
};

struct TrainingReport {
	std::vector<EpochRecord> epochs;
	int best_epoch = 0;
	double best_val_loss = 0.0;
	std::string notes;

	void write_jsonl(const std::string &path) const;
};

/// Eq.-style pinball loss rho_tau(y, yhat) = (yhat - y) * (1[y <= yhat] - tau).
double pinball_loss(double y, double y_hat, double tau);

/// Reference reduction used by every trainer: mean over masked steps, batch
/// and variables; sum over quantile levels. pred is (batch, length, m, Q)
/// flattened with quantiles innermost, truth (batch, length, m), step_mask has
/// `length` flags. Throws UsageError when the mask is empty.
double masked_quantile_loss(std::span<const double> pred, std::span<const double> truth,
                            std::span<const std::uint8_t> step_mask, std::int64_t batch,
                            std::int64_t length, std::int64_t m,
                            std::span<const double> taus);

// --- formulation input builders ---------------------------------------------
// All three time-series formulations share the backbone; they differ only in
// what the window feeds the model and where the loss is charged.

/// Masked task: real inputs everywhere, forecast channels random-filled on the
/// trailing masked steps.
StepBatch mmmpf_step_batch(const MaskedBatch &masked, const InputLayout &layout);

/// One-step task: steps 0..T-1 are real history, step T is a placeholder the
/// model must fill (it never sees the target step's predictors).
StepBatch rsf_step_batch(std::span<const Window *const> windows, const InputLayout &layout);

/// Direct task: steps 0..T-1 real, the whole future block is placeholders, so
/// the outputs are functions of history alone.
StepBatch dmf_step_batch(std::span<const Window *const> windows, const InputLayout &layout);

/// Per-day targets in normalized units, row-major (window, step, zone).
nn::Tensor window_targets(std::span<const Window *const> windows, std::int64_t length);

// --- trainers ----------------------------------------------------------------

TrainingReport train_mmmpf(SequenceModel &model, const std::vector<Window> &train,
                           const std::vector<Window> &validation, const NormStats &stats,
                           const WindowSpec &spec, const TrainingConfig &config);

TrainingReport train_rsf(SequenceModel &model, const std::vector<Window> &train,
                         const std::vector<Window> &validation, const NormStats &stats,
                         const WindowSpec &spec, const TrainingConfig &config);

TrainingReport train_dmf(SequenceModel &model, const std::vector<Window> &train,
                         const std::vector<Window> &validation, const NormStats &stats,
                         const WindowSpec &spec, const TrainingConfig &config);

/// Sample-based FCNN: per-day x -> y quantile regression on the training days.
TrainingReport train_sbf_fcnn(SequenceModel &model, const FeatureTable &train,
                              const FeatureTable &validation, const NormStats &stats,
                              const TrainingConfig &config);

/// Sample-based linear regressors (point forecasts, squared error).
LinearModel train_sbf_linear(Architecture variant, const FeatureTable &train,
                             const NormStats &stats, double lambda);

/// Design row for the linear SBF models: intercept, drop-first one-hot month /
/// day-of-month / day-of-week, z-scored weather. Shared by fit and forecast.
std::vector<double> sbf_design_row(const std::array<int, 3> &calendar,
                                   std::span<const double> weather_normalized);

} // namespace maskcast
