#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mspsa {

/// Seeded, replayable random stream. Identical (seed, stream_id) produce
/// identical draw sequences: the engine is std::mt19937_64 (bit-exact by the
/// standard) and every distribution below is a fixed transform of its raw
/// output, never a library distribution object. uniform(), rademacher(), and
/// categorical() are bit-exact everywhere; gaussian() additionally depends on
/// libm's log/cos rounding, identical on a given toolchain. Draw accounting:
///   uniform()     1 engine word, value in [0, 1)
///   gaussian()    2 engine words (Box-Muller, cosine branch only)
///   categorical() 1 engine word (inverse CDF walk)
///   rademacher()  1 engine word
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t draws() const { return draws_; }

    /// Derive an independent substream keyed by tag; depends only on
    /// (seed, stream_id, tag), never on how much this stream has been used.
    RngStream fork(std::uint64_t tag) const;

    double uniform();
    double gaussian();  // standard normal
    double rademacher();  // +1 or -1, equiprobable

    /// Sample an index with the given probabilities (assumed to sum to ~1).
    int categorical(std::span<const double> probs);

  private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t draws_ = 0;
    std::mt19937_64 engine_;

    std::uint64_t next_word();
};

}  // namespace mspsa
