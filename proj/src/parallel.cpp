#include "maskcast/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace maskcast {

namespace {

int configured_threads() {
	int n = static_cast<int>(std::thread::hardware_concurrency());
	if (const char *env = std::getenv("MASKCAST_THREADS")) {
		const int v = std::atoi(env);
		if (v > 0) {
			n = v;
		}
	}
	return n > 0 ? n : 1;
}

} // namespace

int thread_count() {
	static const int n = configured_threads();
	return n;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)> &fn,
                  std::int64_t min_chunk) {
	if (n <= 0) {
		return;
	}
	const int nt = thread_count();
#ifdef _OPENMP
	// static schedule over disjoint ranges: results never depend on the thread
	// count; nested calls run serially (omp nesting stays disabled)
	if (nt > 1 && n > min_chunk && !omp_in_parallel()) {
		const std::int64_t chunks = std::min<std::int64_t>(nt, (n + min_chunk - 1) / min_chunk);
		const std::int64_t per = (n + chunks - 1) / chunks;
#pragma omp parallel for schedule(static, 1) num_threads(static_cast<int>(chunks))
		for (std::int64_t c = 0; c < chunks; ++c) {
			const std::int64_t b = c * per;
			const std::int64_t e = std::min(n, b + per);
			if (b < e) {
				fn(b, e);
			}
		}
		return;
	}
#else
	(void)nt;
#endif
	fn(0, n);
}

} // namespace maskcast
