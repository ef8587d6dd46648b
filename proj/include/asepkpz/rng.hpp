#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace asepkpz {

std::uint64_t splitmix64(std::uint64_t& state);

// Seed for replica `index` of stream `stream` under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  double uniform();  // [0, 1)
  double exponential(double rate);
  double normal();
  std::size_t index(std::size_t n);  // uniform on {0, ..., n-1}
  int spin(double rho);              // +1 with probability rho, else -1

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace asepkpz
