#pragma once

#include <cstdint>
#include <string_view>

namespace sdekit {

// Stable 64-bit FNV-1a; used for WL label hashing and seed derivation.
// Must never change across releases: serialized WL features and recorded
// seeds depend on it.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t fnv1a64(std::uint64_t value, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (8 * i)) & 0xffULL;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// One splitmix64 output step (Steele, Lea, Flood); bijective mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Labeled fan-out: every component derives its own stream from the single
// top-level seed via a path-like label ("discovery/iter3/calib").
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    return splitmix64(seed ^ fnv1a64(label));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ fnv1a64(index));
}

}  // namespace sdekit
