#pragma once

#include <cstdint>
#include <random>

namespace cpdsde {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent child seed for (seed, a, b); used to give every path, epoch
/// and dataset row its own stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(a + 0x51ed2701ULL)) ^ splitmix64(b + 0x2545f491ULL));
}

/// Standard-normal stream with its own engine and distribution state.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return dist_(engine_); }
  Engine& engine() { return engine_; }

 private:
  Engine engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace cpdsde
