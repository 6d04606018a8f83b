#include "mspsa/rng.hpp"

#include <cmath>
#include <numbers>

namespace mspsa {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t state = a;
    splitmix64(state);
    state ^= 0xD2B74407B1CE6E93ull * (b + 1);
    std::uint64_t out = splitmix64(state);
    splitmix64(state);
    return out ^ splitmix64(state);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(mix(seed, stream_id)) {}

RngStream RngStream::fork(std::uint64_t tag) const {
    return RngStream(mix(seed_, tag ^ 0xA5A5A5A5A5A5A5A5ull), stream_id_);
}

std::uint64_t RngStream::next_word() {
    ++draws_;
    return engine_();
}

double RngStream::uniform() {
    // 53-bit mantissa, value in [0, 1)
    return static_cast<double>(next_word() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::rademacher() { return uniform() < 0.5 ? 1.0 : -1.0; }

int RngStream::categorical(std::span<const double> probs) {
    const double u = uniform();
    double cum = 0.0;
    for (std::size_t j = 0; j + 1 < probs.size(); ++j) {
        cum += probs[j];
        if (u < cum) return static_cast<int>(j);
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace mspsa
