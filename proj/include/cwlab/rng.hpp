#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace cwlab {

/// SplitMix64 finalizer. Used to derive substream seeds from counters.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// A random stream owned by one sample. Never shared between threads.
class Stream {
 public:
  explicit Stream(std::uint64_t state_seed) : engine_(state_seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  bool coin() { return (engine_() >> 63) != 0; }

  Eigen::VectorXd normal_vector(Eigen::Index d) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Counter-based key: (seed, experiment path) names a family of streams and
/// `at(i)` yields the stream for sample i. Results depend only on the key and
/// the sample index, never on how samples are scheduled across threads.
class RngKey {
 public:
  constexpr explicit RngKey(std::uint64_t seed) : seed_(seed), path_(mix64(seed)) {}

  constexpr std::uint64_t seed() const { return seed_; }

  /// Derive an independent key for a sub-experiment (grid point, level, ...).
  constexpr RngKey child(std::uint64_t tag) const {
    RngKey k = *this;
    k.path_ = mix64(path_ ^ mix64(tag + 0x632be59bd9b4e019ULL));
    return k;
  }

  Stream at(std::uint64_t index) const {
    return Stream(mix64(path_ + mix64(index ^ 0xd1b54a32d192ed03ULL)));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t path_;
};

}  // namespace cwlab
