#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace pte {

/// Named random streams. Every draw in a run comes from a stream derived from
/// the single run seed, so reordering work inside one stream never perturbs
/// another.
enum class Stream : std::uint64_t {
  random_init = 1,
  initial_variation = 2,
  lookahead = 3,
  variation = 4,
  noise = 5,
  selection = 6,
  mock_private = 7,
  subsample = 8,
};

/// Seeded 64-bit Mersenne Twister with substream derivation.
class Rng {
 public:
  using engine_type = std::mt19937_64;
  using result_type = engine_type::result_type;

  explicit Rng(std::uint64_t seed) { reseed({seed}); }

  /// Independent stream for (seed, stream, index...). Deterministic.
  static Rng derive(std::uint64_t seed, Stream stream,
                    std::initializer_list<std::uint64_t> index = {}) {
    Rng r(0);
    std::vector<std::uint64_t> key{seed, static_cast<std::uint64_t>(stream)};
    key.insert(key.end(), index.begin(), index.end());
    r.reseed(key);
    return r;
  }

  static constexpr result_type min() { return engine_type::min(); }
  static constexpr result_type max() { return engine_type::max(); }
  result_type operator()() { return engine_(); }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

 private:
  template <typename Range>
  void reseed(const Range& key) {
    std::vector<std::uint32_t> words;
    for (std::uint64_t x : key) {
      words.push_back(static_cast<std::uint32_t>(x));
      words.push_back(static_cast<std::uint32_t>(x >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
  }
  void reseed(std::initializer_list<std::uint64_t> key) {
    reseed(std::vector<std::uint64_t>(key));
  }

  engine_type engine_;
};

}  // namespace pte
