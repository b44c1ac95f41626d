#include "delayoco/rng.hpp"

#include <cmath>
#include <numbers>

namespace delayoco {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t &hi,
                    std::uint32_t &lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kW0;
            k[1] += kW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(splitmix64(seed) ^ (tag * 0xD1B54A32D192ED03ull));
}

CounterRng::CounterRng(std::uint64_t key, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(key),
           static_cast<std::uint32_t>(key >> 32)},
      stream_(stream) {}

void CounterRng::refill() {
    buf_ = philox4x32({static_cast<std::uint32_t>(stream_),
                       static_cast<std::uint32_t>(stream_ >> 32),
                       static_cast<std::uint32_t>(block_),
                       static_cast<std::uint32_t>(block_ >> 32)},
                      key_);
    ++block_;
    pos_ = 0;
}

CounterRng::result_type CounterRng::operator()() {
    if (pos_ > 2)
        refill();
    std::uint64_t hi = buf_[pos_];
    std::uint64_t lo = buf_[pos_ + 1];
    pos_ += 2;
    return (hi << 32) | lo;
}

double CounterRng::uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform_open() {
    return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52;
}

double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
}

std::uint64_t CounterRng::below(std::uint64_t n) {
    if (n == 0)
        throw ValidationError("below(0)");
    // reject the short tail so x % n is unbiased
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t x = (*this)();
        if (x >= threshold)
            return x % n;
    }
}

Vector random_unit_vector(CounterRng &rng, int k) {
    Vector g(k);
    double n = 0.0;
    do {
        for (int i = 0; i < k; ++i)
            g[i] = rng.normal();
        n = g.norm();
    } while (n == 0.0);
    return g / n;
}

} // namespace delayoco
