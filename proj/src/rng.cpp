#include "vortex/rng.hpp"

#include <cmath>
#include <numbers>

namespace vortex {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
}

}  // namespace

std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> c, std::array<uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t master, uint64_t tag, uint64_t a, uint64_t b) {
    uint64_t s = mix64(master);
    s = mix64(s ^ mix64(tag + 0x1234567ull));
    s = mix64(s ^ mix64(a + 0x89ABCDEFull));
    s = mix64(s ^ mix64(b + 0x2468ACE0ull));
    return s;
}

std::pair<double, double> gaussian_pair(const std::array<uint32_t, 4>& b) {
    double u1 = bits_to_unit(b[0], b[1]);
    double u2 = bits_to_unit(b[2], b[3]);
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(th), r * std::sin(th)};
}

PhiloxStream::PhiloxStream(uint64_t seed, uint64_t stream)
    : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
      stream_hi_(static_cast<uint32_t>(mix64(stream) >> 32) ^ static_cast<uint32_t>(stream)) {}

std::array<uint32_t, 4> PhiloxStream::block_at(uint64_t counter) const {
    return philox4x32({static_cast<uint32_t>(counter), static_cast<uint32_t>(counter >> 32),
                       stream_hi_, 0x5EED5EEDu},
                      key_);
}

uint32_t PhiloxStream::next32() {
    if (buf_pos_ == 4) {
        buf_ = block_at(counter_++);
        buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
}

double PhiloxStream::uniform() {
    uint32_t hi = next32();
    uint32_t lo = next32();
    return bits_to_unit(hi, lo);
}

double PhiloxStream::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
}

uint64_t PhiloxStream::below(uint64_t n) {
    if (n <= 1) return 0;
    // rejection to remove modulo bias
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
        uint64_t v = static_cast<uint64_t>(next32()) << 32 | next32();
        if (v < limit) return v % n;
    }
}

}  // namespace vortex
