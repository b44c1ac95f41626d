#pragma once

#include "delayoco/common.hpp"

#include <array>
#include <cstdint>
#include <limits>

namespace delayoco {

// Philox4x32-10 block function (Salmon et al. 2011).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

// Derive a 64-bit key from a parent seed and a tag.
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t tag);

inline constexpr const char *kRngAlgorithm = "philox4x32-10";

// Counter-based stream: block i of stream (key, stream) is
// philox(ctr = {stream_lo, stream_hi, i_lo, i_hi}, key).
// Substreams are cheap to construct, so each (run, round) owns one.
class CounterRng {
  public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t key, std::uint64_t stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()();
    double uniform();          // [0, 1) with 53 random bits
    double uniform_open();     // (0, 1)
    double normal();           // Box-Muller; second draw cached
    std::uint64_t below(std::uint64_t n); // uniform in [0, n)

  private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Tags separating the independent random sources of an episode.
enum class StreamTag : std::uint64_t {
    Losses = 1,
    Delays = 2,
    Player = 3,
    Validation = 4,
    Test = 5,
};

// Uniform on the unit sphere: normalized Gaussian, zero vector redrawn.
Vector random_unit_vector(CounterRng &rng, int k);

inline CounterRng substream(std::uint64_t seed, StreamTag tag,
                            std::uint64_t index) {
    return CounterRng(derive_key(seed, static_cast<std::uint64_t>(tag)), index);
}

} // namespace delayoco
