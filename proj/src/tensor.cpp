#include "maskcast/tensor.hpp"

#include "maskcast/parallel.hpp"

#include <cassert>

namespace maskcast::nn {
namespace {

constexpr std::int64_t kParallelFlops = 1 << 19;

// 16-lane float vector with unaligned (element) alignment.
typedef float v16f __attribute__((vector_size(64), aligned(4)));

// One 4-row x (NV*16)-column tile with the accumulators held in registers.
// Explicit vector types: the autovectorizer is unreliable on this pattern.
// ATrans selects A(i,p) vs A(p,i), serving both C = A*B and C = A^T*B.
template <bool ATrans, int NV>
void gemm_tile(const float *a, std::int64_t lda, const float *b, float *c, std::int64_t i,
               std::int64_t j, std::int64_t k, std::int64_t n, bool accumulate) {
	v16f acc[4][NV];
	for (int r = 0; r < 4; ++r) {
		for (int v = 0; v < NV; ++v) {
			if (accumulate) {
				acc[r][v] = *reinterpret_cast<const v16f *>(c + (i + r) * n + j + 16 * v);
			} else {
				acc[r][v] = v16f{} ;
			}
		}
	}
	for (std::int64_t p = 0; p < k; ++p) {
		const float *bp = b + p * n + j;
		const v16f a0 = v16f{} + (ATrans ? a[p * lda + i + 0] : a[(i + 0) * lda + p]);
		const v16f a1 = v16f{} + (ATrans ? a[p * lda + i + 1] : a[(i + 1) * lda + p]);
		const v16f a2 = v16f{} + (ATrans ? a[p * lda + i + 2] : a[(i + 2) * lda + p]);
		const v16f a3 = v16f{} + (ATrans ? a[p * lda + i + 3] : a[(i + 3) * lda + p]);
		for (int v = 0; v < NV; ++v) {
			const v16f bv = *reinterpret_cast<const v16f *>(bp + 16 * v);
			acc[0][v] += a0 * bv;
			acc[1][v] += a1 * bv;
			acc[2][v] += a2 * bv;
			acc[3][v] += a3 * bv;
		}
	}
	for (int r = 0; r < 4; ++r) {
		for (int v = 0; v < NV; ++v) {
			*reinterpret_cast<v16f *>(c + (i + r) * n + j + 16 * v) = acc[r][v];
		}
	}
}

// 4-row tile over the ragged last columns, using a zero-padded copy of B's
// tail so the multiply stays 16 lanes wide; only `rem` columns are stored.
template <bool ATrans>
void gemm_tail(const float *a, std::int64_t lda, const float *btail, float *c, std::int64_t i,
               std::int64_t j0, std::int64_t rem, std::int64_t k, std::int64_t n,
               bool accumulate) {
	v16f acc[4] = {v16f{}, v16f{}, v16f{}, v16f{}};
	for (std::int64_t p = 0; p < k; ++p) {
		const v16f bv = *reinterpret_cast<const v16f *>(btail + 16 * p);
		acc[0] += bv * (v16f{} + (ATrans ? a[p * lda + i + 0] : a[(i + 0) * lda + p]));
		acc[1] += bv * (v16f{} + (ATrans ? a[p * lda + i + 1] : a[(i + 1) * lda + p]));
		acc[2] += bv * (v16f{} + (ATrans ? a[p * lda + i + 2] : a[(i + 2) * lda + p]));
		acc[3] += bv * (v16f{} + (ATrans ? a[p * lda + i + 3] : a[(i + 3) * lda + p]));
	}
	for (int r = 0; r < 4; ++r) {
		float *ci = c + (i + r) * n + j0;
		for (std::int64_t x = 0; x < rem; ++x) {
			ci[x] = (accumulate ? ci[x] : 0.0f) + acc[r][x];
		}
	}
}

// Scalar fallback: rows [i0, i1), columns [j0, n).
template <bool ATrans>
void gemm_edge(const float *a, std::int64_t lda, const float *b, float *c, std::int64_t i0,
               std::int64_t i1, std::int64_t j0, std::int64_t k, std::int64_t n, bool accumulate) {
	for (std::int64_t i = i0; i < i1; ++i) {
		float *ci = c + i * n;
		if (!accumulate) {
			for (std::int64_t x = j0; x < n; ++x) {
				ci[x] = 0.0f;
			}
		}
		for (std::int64_t p = 0; p < k; ++p) {
			const float av = ATrans ? a[p * lda + i] : a[i * lda + p];
			const float *bp = b + p * n;
			for (std::int64_t x = j0; x < n; ++x) {
				ci[x] += av * bp[x];
			}
		}
	}
}

/// Zero-padded copy of B's trailing n%16 columns, built once per product.
std::vector<float> pack_tail(const float *b, std::int64_t k, std::int64_t n) {
	const std::int64_t j0 = n - n % 16;
	std::vector<float> btail(static_cast<std::size_t>(16 * k), 0.0f);
	for (std::int64_t p = 0; p < k; ++p) {
		for (std::int64_t x = 0; x < n - j0; ++x) {
			btail[static_cast<std::size_t>(16 * p + x)] = b[p * n + j0 + x];
		}
	}
	return btail;
}

// Rows [i0, i1) of the full product; callers parallelize over disjoint ranges.
template <bool ATrans>
void gemm_block(const float *a, std::int64_t lda, const float *b, const float *btail, float *c,
                std::int64_t i0, std::int64_t i1, std::int64_t k, std::int64_t n,
                bool accumulate) {
	std::int64_t i = i0;
	for (; i + 4 <= i1; i += 4) {
		std::int64_t j = 0;
		for (; j + 64 <= n; j += 64) {
			gemm_tile<ATrans, 4>(a, lda, b, c, i, j, k, n, accumulate);
		}
		for (; j + 16 <= n; j += 16) {
			gemm_tile<ATrans, 1>(a, lda, b, c, i, j, k, n, accumulate);
		}
		if (j < n) {
			gemm_tail<ATrans>(a, lda, btail, c, i, j, n - j, k, n, accumulate);
		}
	}
	if (i < i1) {
		gemm_edge<ATrans>(a, lda, b, c, i, i1, 0, k, n, accumulate);
	}
}

// Dot-product kernel for small C = A*B^T products.
void nt_block(const float *a, const float *b, float *c, std::int64_t m, std::int64_t k,
              std::int64_t n, bool accumulate) {
	for (std::int64_t i = 0; i < m; ++i) {
		const float *ai = a + i * k;
		float *ci = c + i * n;
		for (std::int64_t j = 0; j < n; ++j) {
			const float *bj = b + j * k;
			float s = 0.0f;
			for (std::int64_t p = 0; p < k; ++p) {
				s += ai[p] * bj[p];
			}
			ci[j] = accumulate ? ci[j] + s : s;
		}
	}
}

} // namespace

void matmul_nn(const Tensor &a, const Tensor &b, Tensor &c, bool accumulate) {
	assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
	const std::int64_t m = a.rows, k = a.cols, n = b.cols;
	std::vector<float> btail;
	if (n % 16 != 0) {
		btail = pack_tail(b.data.data(), k, n);
	}
	if (m * k * n < kParallelFlops) {
		gemm_block<false>(a.data.data(), k, b.data.data(), btail.data(), c.data.data(), 0, m, k, n,
		                  accumulate);
		return;
	}
	const std::int64_t min_rows = std::max<std::int64_t>(8, kParallelFlops / (k * n + 1));
	parallel_for(
	    m,
	    [&](std::int64_t r0, std::int64_t r1) {
		    gemm_block<false>(a.data.data(), k, b.data.data(), btail.data(), c.data.data(), r0, r1,
		                      k, n, accumulate);
	    },
	    min_rows);
}

void matmul_nt(const Tensor &a, const Tensor &b, Tensor &c, bool accumulate) {
	assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
	const std::int64_t m = a.rows, k = a.cols, n = b.rows;
	if (m * k * n < (1 << 15)) {
		nt_block(a.data.data(), b.data.data(), c.data.data(), m, k, n, accumulate);
		return;
	}
	// transposing B once lets the blocked kernel stream along rows
	Tensor bt(k, n);
	for (std::int64_t j = 0; j < n; ++j) {
		const float *bj = b.row(j);
		for (std::int64_t p = 0; p < k; ++p) {
			bt.data[static_cast<std::size_t>(p * n + j)] = bj[p];
		}
	}
	std::vector<float> btail;
	if (n % 16 != 0) {
		btail = pack_tail(bt.data.data(), k, n);
	}
	const std::int64_t min_rows = std::max<std::int64_t>(8, kParallelFlops / (k * n + 1));
	parallel_for(
	    m,
	    [&](std::int64_t r0, std::int64_t r1) {
		    gemm_block<false>(a.data.data(), k, bt.data.data(), btail.data(), c.data.data(), r0, r1,
		                      k, n, accumulate);
	    },
	    min_rows);
}

void matmul_tn(const Tensor &a, const Tensor &b, Tensor &c, bool accumulate) {
	assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
	const std::int64_t k = a.rows, m = a.cols, n = b.cols;
	std::vector<float> btail;
	if (n % 16 != 0) {
		btail = pack_tail(b.data.data(), k, n);
	}
	if (m * k * n < kParallelFlops) {
		gemm_block<true>(a.data.data(), m, b.data.data(), btail.data(), c.data.data(), 0, m, k, n,
		                 accumulate);
		return;
	}
	const std::int64_t min_rows = std::max<std::int64_t>(8, kParallelFlops / (k * n + 1));
	parallel_for(
	    m,
	    [&](std::int64_t r0, std::int64_t r1) {
		    gemm_block<true>(a.data.data(), m, b.data.data(), btail.data(), c.data.data(), r0, r1, k,
		                     n, accumulate);
	    },
	    min_rows);
}

} // namespace maskcast::nn
