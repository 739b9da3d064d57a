#pragma once

#include <cstdint>
#include <random>

namespace fcm {

// Inverse standard normal CDF (Wichura's PPND16 rational approximation,
// accurate to ~1e-15 over (0,1)). Throws ValidationError outside (0,1).
double normal_quantile(double p);

namespace rng {

// SplitMix64 step; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic stream seed from (master seed, run index, salt).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

// Uniform in the open interval (0,1), 53-bit resolution. Built from raw
// engine words so results do not depend on the standard library's
// distribution implementations.
double uniform01(std::mt19937_64& g);

// Standard normal draw via inverse-CDF sampling.
double normal(std::mt19937_64& g);

// Unbiased uniform index in [0, n).
std::size_t uniform_index(std::mt19937_64& g, std::size_t n);

}  // namespace rng
}  // namespace fcm
