#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace vortex {

/// Philox4x32-10 counter-based generator (Salmon et al. 2011).
std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key);

/// splitmix64 finalizer; used to derive child seeds.
uint64_t mix64(uint64_t x);

/// Child seed for a (tag, a, b) cell under a master seed. Independent of call order.
uint64_t derive_seed(uint64_t master, uint64_t tag, uint64_t a, uint64_t b = 0);

/// Uniform in (0, 1) from 64 random bits (53-bit resolution, never 0).
inline double bits_to_unit(uint32_t hi, uint32_t lo) {
    uint64_t v = (static_cast<uint64_t>(hi) << 32 | lo) >> 11;
    return (static_cast<double>(v) + 0.5) * 0x1.0p-53;
}

/// Two independent standard normals from one Philox block (Box-Muller).
std::pair<double, double> gaussian_pair(const std::array<uint32_t, 4>& block);

/// Keyed stream: draw i of the stream is a pure function of (seed, stream, i).
class PhiloxStream {
public:
    PhiloxStream(uint64_t seed, uint64_t stream);

    double uniform();
    double normal();
    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n);

    /// Random block addressed directly by a 64-bit counter within this stream.
    std::array<uint32_t, 4> block_at(uint64_t counter) const;

private:
    std::array<uint32_t, 2> key_;
    uint32_t stream_hi_;
    uint64_t counter_ = 0;
    std::array<uint32_t, 4> buf_{};
    int buf_pos_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;

    uint32_t next32();
};

}  // namespace vortex
