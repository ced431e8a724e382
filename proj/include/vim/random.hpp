#pragma once

// Counter-based random streams.
//
// Every stream is a Philox4x32-10 generator keyed by the global seed; the
// 128-bit counter holds a 64-bit stream id in its upper half and the draw
// position in its lower half.  Substreams are derived by hashing, so the
// numbers a consumer sees depend only on (seed, stream path), never on the
// order in which streams are created or on which thread runs them.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace vim {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                 std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo32(M0, ctr[0], hi0, lo0);
        mulhilo32(M1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

}  // namespace detail

/// Identifies a stream: (seed, id).  Cheap to copy; derive children with sub().
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t id = 0;

    [[nodiscard]] StreamKey sub(std::uint64_t k) const {
        return {seed, detail::splitmix64(id ^ detail::splitmix64(k + 0x632BE59BD9B4E019ULL))};
    }
    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Philox stream satisfying UniformRandomBitGenerator (64-bit output).
class Stream {
public:
    using result_type = std::uint64_t;

    Stream() = default;
    explicit Stream(StreamKey key) : key_(key) {}
    Stream(std::uint64_t seed, std::uint64_t id) : key_{seed, id} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (used_ >= 2) refill();
        return block_[used_++];
    }

    /// Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return normal_(*this); }

    double exponential() { return -std::log(uniform()); }

    [[nodiscard]] const StreamKey& key() const { return key_; }
    [[nodiscard]] Stream substream(std::uint64_t k) const { return Stream(key_.sub(k)); }

private:
    void refill() {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
            static_cast<std::uint32_t>(key_.id), static_cast<std::uint32_t>(key_.id >> 32)};
        const std::array<std::uint32_t, 2> k = {static_cast<std::uint32_t>(key_.seed),
                                                static_cast<std::uint32_t>(key_.seed >> 32)};
        const auto out = detail::philox4x32_10(ctr, k);
        block_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        block_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        ++position_;
        used_ = 0;
    }

    StreamKey key_{};
    std::uint64_t position_ = 0;
    std::array<std::uint64_t, 2> block_{};
    int used_ = 2;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace vim
