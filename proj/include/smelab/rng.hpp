#pragma once

#include <cstdint>
#include <random>

namespace smelab {

// splitmix64 finalizer; used to turn (seed, stream-id) pairs into
// well-separated engine seeds so replicas never share state.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// A private random stream. Every simulation replica owns one, keyed by
// (seed, replica), which makes ensembles reproducible independently of how
// replicas are scheduled across threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t engine_seed) : engine_(engine_seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    // Uniform integer in [0, n).
    long uniform_int(long n) {
        return std::uniform_int_distribution<long>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline RngStream make_stream(std::uint64_t seed, std::uint64_t stream_id) {
    return RngStream(splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x51ed270b7a64fa1dULL)));
}

}  // namespace smelab
