#pragma once

#include "maskcast/models.hpp"
#include "maskcast/training.hpp"
#include "maskcast/windowing.hpp"

#include <memory>
#include <optional>
#include <string>

namespace maskcast {

/// Self-describing model container: everything needed to forecast again —
/// config, window geometry, normalization stats and the raw parameter bytes.
struct Checkpoint {
	int version = 1;
	Method method = Method::mmmpf;
	ModelConfig model_config;
	InputLayout layout;
	WindowSpec window;
	NormStats stats;
	std::uint64_t seed = 0;
	double best_val_loss = 0.0;

	std::unique_ptr<SequenceModel> model; // null for linear variants
	std::optional<LinearModel> linear;
};

/// Parameter round-trips are bit-exact (raw float bytes, base64).
void save_checkpoint(const Checkpoint &ck, const std::string &path);
Checkpoint load_checkpoint(const std::string &path);

} // namespace maskcast
