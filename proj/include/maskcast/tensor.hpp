#pragma once

#include <cstdint>
#include <vector>

namespace maskcast::nn {

/// Dense row-major float matrix. Sequence batches are kept flattened as
/// (batch * length, channels), so every model op is a 2-D op.
struct Tensor {
	std::int64_t rows = 0;
	std::int64_t cols = 0;
	std::vector<float> data;

	Tensor() = default;
	Tensor(std::int64_t r, std::int64_t c) : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0f) {}

	static Tensor zeros(std::int64_t r, std::int64_t c) { return Tensor(r, c); }
	static Tensor full(std::int64_t r, std::int64_t c, float v) {
		Tensor t(r, c);
		std::fill(t.data.begin(), t.data.end(), v);
		return t;
	}

	std::int64_t size() const { return rows * cols; }
	float *row(std::int64_t i) { return data.data() + i * cols; }
	const float *row(std::int64_t i) const { return data.data() + i * cols; }
	float &at(std::int64_t i, std::int64_t j) { return data[static_cast<std::size_t>(i * cols + j)]; }
	float at(std::int64_t i, std::int64_t j) const { return data[static_cast<std::size_t>(i * cols + j)]; }

	void fill(float v) { std::fill(data.begin(), data.end(), v); }

	bool same_shape(const Tensor &o) const { return rows == o.rows && cols == o.cols; }
};

/// C (+)= A * B        with A (M,K), B (K,N).
void matmul_nn(const Tensor &a, const Tensor &b, Tensor &c, bool accumulate);
/// C (+)= A * B^T      with A (M,K), B (N,K).
void matmul_nt(const Tensor &a, const Tensor &b, Tensor &c, bool accumulate);
/// C (+)= A^T * B      with A (K,M), B (K,N).
void matmul_tn(const Tensor &a, const Tensor &b, Tensor &c, bool accumulate);

} // namespace maskcast::nn
