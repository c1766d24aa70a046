#ifndef BACL_RNG_H_
#define BACL_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace bacl {

// A single-owner random stream. Copying a stream forks its exact state, so a
// copy replays the same draws as the original.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double Normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  // Uniform integer in [0, n).
  std::size_t Index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Named sub-streams derived from one master seed. Draws consumed from one
// stream never shift another stream's sequence.
namespace streams {
inline constexpr std::string_view kData = "data";
inline constexpr std::string_view kInit = "init";
inline constexpr std::string_view kBatch = "batch";
inline constexpr std::string_view kBoxGen = "boxgen";
inline constexpr std::string_view kFhmSelect = "fhm-select";
inline constexpr std::string_view kFhmNoise = "fhm-noise";
}  // namespace streams

std::uint64_t DeriveSeed(std::uint64_t master, std::string_view name);

inline Rng MakeStream(std::uint64_t master, std::string_view name) {
  return Rng(DeriveSeed(master, name));
}

}  // namespace bacl

#endif  // BACL_RNG_H_
