#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace maskcast {

/// Seeded random stream with fixed, library-independent draw semantics so
/// experiment replays are bit-identical for a given seed on a given build.
class Rng {
public:
	explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

	std::uint64_t seed() const { return seed_; }

	std::uint64_t next_u64() { return engine_(); }

	/// Uniform on [0, 1) with 53 random bits.
	double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

	float uniform_f(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

	/// Standard normal via Box-Muller; consumes two draws per pair.
	double normal() {
		if (have_spare_) {
			have_spare_ = false;
			return spare_;
		}
		double u1 = uniform();
		double u2 = uniform();
		while (u1 <= 0.0) {
			u1 = uniform();
		}
		const double r = std::sqrt(-2.0 * std::log(u1));
		const double theta = 2.0 * 3.14159265358979323846 * u2;
		spare_ = r * std::sin(theta);
		have_spare_ = true;
		return r * std::cos(theta);
	}

	/// Uniform integer on [lo, hi] inclusive, rejection sampled (no modulo bias).
	std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
		const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
		if (span == 0) { // full 64-bit range
			return static_cast<std::int64_t>(next_u64());
		}
		const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
		std::uint64_t x = next_u64();
		while (x >= limit) {
			x = next_u64();
		}
		return lo + static_cast<std::int64_t>(x % span);
	}

	/// Fisher-Yates shuffle driven by this stream.
	template <typename T> void shuffle(std::vector<T> &v) {
		for (std::size_t i = v.size(); i > 1; --i) {
			const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
			std::swap(v[i - 1], v[j]);
		}
	}

	/// Derives an independent stream; used for per-worker / per-origin rngs.
	Rng fork(std::uint64_t stream) const {
		std::uint64_t z = seed_ ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
		z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
		z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
		return Rng(z ^ (z >> 31));
	}

private:
	std::uint64_t seed_;
	std::mt19937_64 engine_;
	bool have_spare_ = false;
	double spare_ = 0.0;
};

} // namespace maskcast
