#pragma once

#include "maskcast/rng.hpp"
#include "maskcast/tensor.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace maskcast::nn {

/// Reverse-mode autodiff over 2-D float tensors. Graphs are built per batch;
/// parameters are long-lived leaf nodes reused across graphs.
struct Node {
	Tensor value;
	Tensor grad;
	bool requires_grad = false;
	std::vector<std::shared_ptr<Node>> parents;
	std::function<void(Node &)> backward_fn; // scatters this->grad into parents

	explicit Node(Tensor v, bool req) : value(std::move(v)), requires_grad(req) {}

	void ensure_grad() {
		if (grad.rows != value.rows || grad.cols != value.cols) {
			grad = Tensor::zeros(value.rows, value.cols);
		}
	}
	void zero_grad() {
		ensure_grad();
		grad.fill(0.0f);
	}
};

using Value = std::shared_ptr<Node>;

Value make_parameter(Tensor v);
Value make_constant(Tensor v);

/// Runs reverse accumulation from a scalar (1x1) root.
void backward(const Value &root);

// --- graph ops -------------------------------------------------------------

Value matmul(const Value &a, const Value &b);
/// x (R,K) * w (K,N) + bias row b (1,N).
Value affine(const Value &x, const Value &w, const Value &b);
Value add(const Value &a, const Value &b);
Value mul(const Value &a, const Value &b);
Value sigmoid(const Value &a);
Value tanh_op(const Value &a);
Value relu(const Value &a);
Value slice_cols(const Value &a, std::int64_t c0, std::int64_t c1);
Value concat_cols(const std::vector<Value> &parts);
/// Stacks parts (each R_i x C) vertically.
Value concat_rows(const std::vector<Value> &parts);
/// Gathers rows; negative indices read as zero rows (causal padding).
Value gather_rows(const Value &a, std::vector<std::int64_t> rows);
/// Per-row layer norm with learnable gain/bias rows (1,N).
Value layer_norm(const Value &a, const Value &gain, const Value &bias, float eps = 1e-5f);
/// Inverted dropout; identity when training is false.
Value dropout(const Value &a, float p, Rng &rng, bool training);
/// Embedding lookup: table (V,E), one output row per index.
Value embedding(const Value &table, const std::vector<std::int32_t> &idx);
Value mean_all(const Value &a);

/// Multi-head self-attention core. q, k, v are (B*L, D) with D = heads * dh;
/// rows are grouped per sequence. Returns (B*L, D).
Value attention(const Value &q, const Value &k, const Value &v, std::int64_t batch,
                std::int64_t length, int heads);

/// Quantile (pinball) training loss, restricted to rows with weight 1:
///   sum_q mean_{weighted rows, variables} rho_tau_q(target, pred)
/// pred is (R, m*Q) laid out variable-major (m blocks of Q), target (R, m).
Value quantile_loss(const Value &pred, const Tensor &target, const std::vector<float> &row_weight,
                    const std::vector<double> &taus);

} // namespace maskcast::nn
