#include "reverse/rng.h"

#include <algorithm>
#include <cmath>

#include "reverse/error.h"

namespace reverse {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

uint64_t derive_stream_seed(uint64_t master_seed, std::string_view stream_name) {
  return splitmix64(splitmix64(master_seed) ^ fnv1a64(stream_name));
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  if (lo > hi) {
    throw Error(ErrorCode::kInvalidArgument, "uniform_int: empty range");
  }
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<int64_t>(next_u64() % span);
}

size_t Rng::categorical(const std::vector<double>& probs, double temperature) {
  if (probs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "categorical: empty distribution");
  }
  if (temperature < 0.0) {
    throw Error(ErrorCode::kTemperatureNonPositive, "categorical: negative temperature");
  }
  if (temperature == 0.0) {
    size_t best = 0;
    for (size_t i = 1; i < probs.size(); ++i) {
      if (probs[i] > probs[best]) best = i;
    }
    return best;
  }
  // p^(1/T), computed in log space so tiny probabilities survive the power.
  std::vector<double> weights(probs.size(), 0.0);
  double inv_t = 1.0 / temperature;
  double max_log = -HUGE_VAL;
  for (size_t i = 0; i < probs.size(); ++i) {
    double lg = probs[i] > 0.0 ? std::log(probs[i]) * inv_t : -HUGE_VAL;
    weights[i] = lg;
    max_log = std::max(max_log, lg);
  }
  double total = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    weights[i] = std::isinf(weights[i]) ? 0.0 : std::exp(weights[i] - max_log);
    total += weights[i];
  }
  double u = uniform() * total;
  double acc = 0.0;
  size_t last_positive = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace reverse
