#ifndef REVERSE_RNG_H_
#define REVERSE_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace reverse {

/// Derives an independent stream seed from a master seed and a stream name,
/// so e.g. curation draws and decoding draws never share a generator.
uint64_t derive_stream_seed(uint64_t master_seed, std::string_view stream_name);

/// Seeded generator with explicit draw routines. The standard <random>
/// distributions are implementation-defined, so every draw here is spelled
/// out to keep outputs byte-identical across platforms and compilers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  Rng(uint64_t master_seed, std::string_view stream_name)
      : engine_(derive_stream_seed(master_seed, stream_name)) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi], inclusive. Modulo reduction; the bias is
  /// far below anything observable at the ranges used here.
  int64_t uniform_int(int64_t lo, int64_t hi);

  /// Categorical draw from `probs` after applying temperature. temperature 1
  /// samples the distribution as-is, temperature 0 returns the argmax
  /// (first index on ties), other values sample proportionally to
  /// p_i^(1/temperature).
  size_t categorical(const std::vector<double>& probs, double temperature);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace reverse

#endif  // REVERSE_RNG_H_
