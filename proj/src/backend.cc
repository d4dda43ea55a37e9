#include "reverse/backend.h"

#include "reverse/error.h"

namespace reverse {

uint64_t ScriptedBackend::fingerprint(const std::vector<std::string>& context) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& tok : context) {
    for (unsigned char c : tok) mix(c);
    mix(0x1f);  // token separator
  }
  return h;
}

void ScriptedBackend::at_step(int step, int visit, Distribution dist) {
  dist.validate();
  step_rules_[{step, visit}] = std::move(dist);
}

void ScriptedBackend::at_context(const std::vector<std::string>& context, int visit,
                                 Distribution dist) {
  dist.validate();
  context_rules_[{fingerprint(context), visit}] = std::move(dist);
}

void ScriptedBackend::set_fallback(Distribution dist) {
  dist.validate();
  fallback_ = std::move(dist);
  has_fallback_ = true;
}

Distribution ScriptedBackend::point_mass(const std::string& token, double mass) const {
  int idx = vocab_.index(token);
  int v = vocab_.size();
  Distribution dist;
  dist.probs.assign(v, v > 1 ? (1.0 - mass) / (v - 1) : 0.0);
  dist.probs[idx] = mass;
  dist.validate();
  return dist;
}

Distribution ScriptedBackend::next_distribution(const std::vector<std::string>& context) {
  uint64_t fp = fingerprint(context);
  int step = static_cast<int>(context.size());
  int fp_visit = context_visits_[fp]++;
  int step_visit = step_visits_[step]++;

  if (auto it = context_rules_.find({fp, fp_visit}); it != context_rules_.end()) {
    return it->second;
  }
  if (auto it = step_rules_.find({step, step_visit}); it != step_rules_.end()) {
    return it->second;
  }
  if (has_fallback_) return fallback_;
  throw Error(ErrorCode::kNoRuleAndNoFallback,
              "no scripted rule for step " + std::to_string(step) + " (visit " +
                  std::to_string(step_visit) + ") and no fallback");
}

Distribution ToyModelBackend::next_distribution(const std::vector<std::string>& context) {
  std::vector<int> ids;
  ids.reserve(context.size());
  for (const auto& tok : context) ids.push_back(model_.vocab.index_or_pad(tok));
  return forward(model_, ids, 1.0);
}

}  // namespace reverse
