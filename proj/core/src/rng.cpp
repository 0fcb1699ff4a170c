#include "fseg/rng.hpp"

#include <cmath>

namespace fseg {

namespace {
constexpr uint64_t kPcgMult = 6364136223846793005ULL;
}

RngStream::RngStream(uint64_t seed, uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    inc_ = (stream_id << 1u) | 1u;
    state_ = 0u;
    next_u32();
    state_ += seed;
    next_u32();
}

uint32_t RngStream::next_u32() {
    uint64_t old = state_;
    state_ = old * kPcgMult + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
}

uint64_t RngStream::next_u64() {
    uint64_t hi = next_u32();
    uint64_t lo = next_u32();
    return (hi << 32) | lo;
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint32_t RngStream::uniform_int(uint32_t n) {
    // classic rejection: draw until below the largest multiple of n
    uint32_t threshold = (0u - n) % n;
    for (;;) {
        uint32_t r = next_u32();
        if (r >= threshold) return r % n;
    }
}

double RngStream::gaussian() {
    // Box-Muller, cosine branch only; u1 nudged away from 0
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

} // namespace fseg
