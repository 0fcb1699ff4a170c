#pragma once

#include <cstdint>

namespace fseg {

// Deterministic seeded random stream. PCG32 (O'Neill), XSH-RR output,
// multiplier 6364136223846793005; stream_id selects the increment, so
// (seed, stream_id) pairs give independent, platform-stable sequences.
class RngStream {
public:
    RngStream(uint64_t seed, uint64_t stream_id);

    uint64_t seed() const { return seed_; }
    uint64_t stream_id() const { return stream_id_; }

    uint32_t next_u32();
    uint64_t next_u64();

    // uniform in [0, 1), 53-bit resolution
    double uniform();

    // uniform integer in [0, n), n > 0 (rejection sampling, unbiased)
    uint32_t uniform_int(uint32_t n);

    // standard normal via Box-Muller; consumes exactly two uniforms per call
    double gaussian();
    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

private:
    uint64_t seed_;
    uint64_t stream_id_;
    uint64_t state_;
    uint64_t inc_;
};

} // namespace fseg
