#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ltlab {

// splitmix64 finalizer; used only to spread (seed, stream) pairs into
// well-separated engine seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL));
}

// Reproducible generator: mt19937_64 plus hand-rolled distribution transforms.
// The std:: distributions are implementation-defined, so every transform used
// anywhere in the library is spelled out here; a given (seed, stream) pair
// yields the same draws on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : eng_(stream_seed(seed, stream)) {}

  std::uint64_t bits() { return eng_(); }

  // Uniform on (0, 1]; never returns 0, so -log is always finite.
  double uniform01() { return static_cast<double>((bits() >> 11) + 1) * 0x1.0p-53; }

  double exponential() { return -std::log(uniform01()); }
  double exponential(double rate) { return -std::log(uniform01()) / rate; }

  // Unbiased integer in [0, n). Rejection sampling on the top of the 64-bit
  // word; for n a power of two no draw is ever rejected.
  std::uint64_t below(std::uint64_t n) {
    for (;;) {
      std::uint64_t x = bits();
      std::uint64_t r = x % n;
      if (x - r <= ~std::uint64_t{0} - (n - 1)) return r;
    }
  }

  bool coin() { return (bits() >> 63) != 0; }

  // Box-Muller with the sine value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ltlab
