#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

// Seeding and sampling helpers. Every stochastic quantity in the library is
// a pure function of (master seed, stream id, index), so results do not
// depend on evaluation order or thread schedule. The transforms below are
// written out explicitly instead of using std::*_distribution so that a
// given seed produces the same stream on every platform.

namespace warpband::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Collapse (seed, stream, index) into one well-mixed 64-bit value.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t index = 0) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= stream * 0xd6e8feb86659fd93ULL;
  std::uint64_t b = splitmix64(s);
  s ^= index * 0xa0761d6478bd642fULL;
  std::uint64_t c = splitmix64(s);
  return a ^ (b << 1) ^ c;
}

// Independent substreams of the master seed.
enum class Stream : std::uint64_t {
  kLhs = 1,
  kPosterior = 2,
  kMultiStart = 3,
  kSynthNoise = 4,
  kContourPick = 5,
};

inline std::mt19937_64 make_engine(std::uint64_t seed, Stream stream,
                                   std::uint64_t index = 0) {
  return std::mt19937_64(
      mix(seed, static_cast<std::uint64_t>(stream), index));
}

// Uniform in [0, 1), 53-bit resolution.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1]; safe as a log argument.
inline double uniform01_pos(std::mt19937_64& eng) {
  return static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;
}

// Unbiased integer in [0, n) via rejection.
inline std::uint64_t uniform_index(std::mt19937_64& eng, std::uint64_t n) {
  const std::uint64_t threshold = (0ULL - n) % n;
  for (;;) {
    const std::uint64_t r = eng();
    if (r >= threshold) return r % n;
  }
}

// Fisher-Yates with the bounded draw above.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_index(eng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// Standard normals via Box-Muller, pair-cached.
class NormalStream {
 public:
  explicit NormalStream(std::mt19937_64& eng) : eng_(eng) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01_pos(eng_);
    const double u2 = uniform01(eng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64& eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Gamma(shape=2, rate=1) as a sum of two unit exponentials.
inline double gamma2_rate1(std::mt19937_64& eng) {
  return -std::log(uniform01_pos(eng)) - std::log(uniform01_pos(eng));
}

}  // namespace warpband::rng
