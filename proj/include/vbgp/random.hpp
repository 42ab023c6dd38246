#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace vbgp {

namespace detail {

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Named sub-streams so that independent draws inside one replication never
/// share random numbers.
enum class Stream : std::uint64_t {
  Design = 1,
  Noise = 2,
  Lanczos = 3,
  Quadrature = 4,
  Test = 5,
};

/// Counter-based 64-bit generator. The i-th output is a pure function of
/// (key, i), and the key is derived from (seed, replication, stream), so any
/// replication can be regenerated independently of scheduling.
///
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr CounterRng(std::uint64_t seed, std::uint64_t replication,
                       Stream stream) noexcept
      : key_(derive_key(seed, replication, static_cast<std::uint64_t>(stream))) {}

  constexpr explicit CounterRng(std::uint64_t seed) noexcept
      : CounterRng(seed, 0, Stream::Test) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGoldenGamma);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; one output per pair of uniforms keeps
  /// the stream stateless apart from the counter.
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  [[nodiscard]] constexpr std::uint64_t counter() const noexcept {
    return counter_;
  }

 private:
  static constexpr std::uint64_t derive_key(std::uint64_t seed,
                                            std::uint64_t rep,
                                            std::uint64_t stream) noexcept {
    std::uint64_t k = detail::mix64(seed + detail::kGoldenGamma);
    k = detail::mix64(k ^ (rep * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
    return detail::mix64(k ^ (stream * 0xabc98388fb8fac03ULL));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace vbgp
