#pragma once

// Counter-based randomness. Every draw is a pure function of a key tuple, so
// replicas, particles and tree vertices can be generated in any order (or in
// parallel) and still reproduce bit-for-bit.

#include <cstdint>

namespace brwlab {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Order-sensitive combination of two 64-bit words.
constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix64(splitmix64(a) ^ (b + 0x632BE59BD9B4E019ULL + (a << 6) + (a >> 2)));
}

constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a) noexcept {
    return hash_combine(seed, a);
}

constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    return hash_combine(hash_combine(seed, a), b);
}

constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                     std::uint64_t c) noexcept {
    return hash_combine(hash_combine(hash_combine(seed, a), b), c);
}

/// Maps 64 random bits to a double in [0, 1) using the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential view over a keyed counter stream: draw i is counter_hash(key, i).
class CounterStream {
public:
    constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

    constexpr std::uint64_t next_bits() noexcept { return counter_hash(key_, counter_++); }
    constexpr double uniform() noexcept { return to_unit(next_bits()); }
    constexpr std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace brwlab
