#pragma once
// Small shared utilities: deterministic RNG helpers, FNV hashing, atomic
// file writes. The RNG helpers avoid std::uniform_* distributions on purpose:
// their output is implementation-defined, and run artifacts must be
// byte-stable across toolchains.

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tessera {

using Rng = std::mt19937_64;

// Uniform index in [0, n). Modulo on a 64-bit generator; bias is negligible
// for the n used here and the result is identical on every platform.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    return static_cast<std::size_t>(rng() % n);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Portable Fisher-Yates shuffle.
template <typename T>
void seeded_shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = uniform_index(rng, i);
        std::swap(items[i - 1], items[j]);
    }
}

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value);

std::string read_text_file(const std::filesystem::path& path);

// Write via temp file + rename so concurrent readers never observe a
// partially written file.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace tessera
