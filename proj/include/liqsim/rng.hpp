#pragma once

#include <cstdint>
#include <random>

namespace liqsim {

// Identifies a reproducible noise source. Identical (seed, stream_id)
// give bit-identical output; distinct stream_ids give independent
// streams from the same seed.
struct RngSpec {
    std::uint64_t seed = 42;
    std::uint64_t stream_id = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_stream(RngSpec spec, std::uint64_t path_index) {
    std::uint64_t s = spec.seed;
    std::uint64_t a = splitmix64(s);
    s ^= spec.stream_id * 0xda942042e4dd58b5ULL;
    std::uint64_t b = splitmix64(s);
    s ^= path_index * 0x2545f4914f6cdd1dULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b + 0x165667b19e3779f9ULL) ^ (c << 1);
}

}  // namespace detail

// Per-path generator derived from (seed, stream_id, path index). Each
// path owns its stream, so batches are reproducible regardless of how
// work is split across threads.
class PathRng {
public:
    PathRng(RngSpec spec, std::uint64_t path_index)
        : engine_(detail::mix_stream(spec, path_index)) {}

    double normal() { return normal_(engine_); }

    // Uniform on (0,1), endpoints excluded.
    double uniform() {
        double u;
        do {
            u = uniform_(engine_);
        } while (u <= 0.0 || u >= 1.0);
        return u;
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace liqsim
