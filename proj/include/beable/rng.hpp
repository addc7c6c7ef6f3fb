// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_RNG_HPP
#define BEABLE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace beable {

/// SplitMix64 mixing step (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for the k-th independent stream derived from a master seed.
///
/// Stream scheme (stable across versions): the engine for run k is
/// mt19937_64 seeded with splitmix64(splitmix64(master) + GOLDEN * (k + 1)),
/// GOLDEN = 0x9E3779B97F4A7C15.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t k) {
  return splitmix64(splitmix64(master) + 0x9E3779B97F4A7C15ULL * (k + 1));
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t stream = 0) {
  return std::mt19937_64(stream_seed(master, stream));
}

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
/// Hand-rolled so that sequences are identical across standard libraries.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Exponential(1) variate.
inline double exponential1(std::mt19937_64& g) {
  return -std::log1p(-uniform01(g));
}

/// Standard normal, Box-Muller (no cached spare; two draws per value).
inline double standard_normal(std::mt19937_64& g) {
  double u1 = 1.0 - uniform01(g);  // (0, 1]
  double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace beable

#endif
