#ifndef REVERSE_BACKEND_H_
#define REVERSE_BACKEND_H_

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reverse/model.h"
#include "reverse/vocab.h"

namespace reverse {

/// Next-token-distribution contract the decode engine runs against. Returned
/// distributions are indexed by the backend's vocabulary and always include
/// explicit probabilities for the three markers and the terminator (they are
/// vocabulary members by construction).
class DistributionBackend {
 public:
  virtual ~DistributionBackend() = default;

  virtual const Vocabulary& vocab() const = 0;
  virtual Distribution next_distribution(const std::vector<std::string>& context) = 0;
};

/// Deterministic replay table used to drive the decode state machine in
/// tests. Rules are keyed either by the context length ("step") or by a
/// fingerprint of the exact context token sequence, each paired with a visit
/// count so the k-th query of the same key can return a different
/// distribution (that is what scripts rejection-sampling outcomes).
///
/// Every query bumps both the step and the fingerprint visit counters for
/// its context. Fingerprint rules take priority over step rules; when
/// neither matches, the fallback is returned. Registering the same key twice
/// overwrites (last writer wins).
class ScriptedBackend : public DistributionBackend {
 public:
  explicit ScriptedBackend(Vocabulary vocab) : vocab_(std::move(vocab)) {}

  static uint64_t fingerprint(const std::vector<std::string>& context);

  void at_step(int step, int visit, Distribution dist);
  void at_context(const std::vector<std::string>& context, int visit, Distribution dist);
  void set_fallback(Distribution dist);

  /// Convenience: a distribution putting `mass` on `token` and the remainder
  /// uniformly on every other vocabulary entry.
  Distribution point_mass(const std::string& token, double mass = 1.0) const;

  const Vocabulary& vocab() const override { return vocab_; }
  Distribution next_distribution(const std::vector<std::string>& context) override;

 private:
  Vocabulary vocab_;
  std::map<std::pair<int, int>, Distribution> step_rules_;
  std::map<std::pair<uint64_t, int>, Distribution> context_rules_;
  std::unordered_map<int, int> step_visits_;
  std::unordered_map<uint64_t, int> context_visits_;
  Distribution fallback_;
  bool has_fallback_ = false;
};

/// Backend serving a trained toy model at temperature 1; the engine applies
/// its own sampling temperature. Unknown context tokens map to the pad index.
class ToyModelBackend : public DistributionBackend {
 public:
  explicit ToyModelBackend(ToyModel model) : model_(std::move(model)) {}

  const Vocabulary& vocab() const override { return model_.vocab; }
  Distribution next_distribution(const std::vector<std::string>& context) override;

  const ToyModel& model() const { return model_; }

 private:
  ToyModel model_;
};

}  // namespace reverse

#endif  // REVERSE_BACKEND_H_
