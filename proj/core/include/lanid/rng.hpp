#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace lanid {

/// FNV-1a over a byte range. Stable across platforms, used for cache keys
/// and dataset fingerprints.
std::uint64_t hash_bytes(const void* data, std::size_t len,
                         std::uint64_t seed = 0xcbf29ce484222325ULL);

std::uint64_t hash_string(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

/// Derives a stable child seed from a master seed and a module tag. Every
/// module draws its seed through here so no component reads ambient
/// randomness.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index);

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Uniform index in [0, n). n must be positive.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

/// Uniform double in [0, 1) with 53 random bits.
double uniform_unit(std::mt19937_64& rng);

/// Standard normal draw (Box-Muller over uniform_unit).
double gaussian(std::mt19937_64& rng);

/// k distinct indices sampled uniformly from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n,
                                                    std::size_t k);

template <typename T>
void shuffle_in_place(std::mt19937_64& rng, std::vector<T>& items) {
  if (items.size() < 2) return;
  for (std::size_t i = items.size() - 1; i > 0; --i) {
    std::size_t j = uniform_index(rng, i + 1);
    std::swap(items[i], items[j]);
  }
}

}  // namespace lanid
