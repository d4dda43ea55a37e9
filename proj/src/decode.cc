#include "reverse/decode.h"

#include <algorithm>

#include "reverse/error.h"
#include "reverse/rng.h"

namespace reverse {

namespace {

const std::string kHintOpen = "(Hint:";
const std::string kHintClose = ")";

bool is_blank_text(const std::string& text) {
  return text.find_first_not_of(' ') == std::string::npos;
}

// Phrase for the placeholder list: content tokens of the last span in the
// discarded region, or all discarded content tokens when no span was open.
std::string harvest_phrase(const std::vector<std::string>& discarded) {
  int last_open = -1;
  for (int i = 0; i < static_cast<int>(discarded.size()); ++i) {
    if (discarded[i] == kSpanOpen) last_open = i;
  }
  std::vector<std::string> content;
  for (int i = last_open + 1; i < static_cast<int>(discarded.size()); ++i) {
    if (!is_marker(discarded[i]) && discarded[i] != kTerminator) content.push_back(discarded[i]);
  }
  return join_tokens(content);
}

}  // namespace

bool DecodeConfig::is_sentence_punctuation(const std::string& token) const {
  return std::find(sentence_punctuation.begin(), sentence_punctuation.end(), token) !=
         sentence_punctuation.end();
}

void DecodeConfig::validate() const {
  if (!(tau > 0.0) || tau > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "tau must be in (0, 1]");
  }
  if (max_total_corrections < 0 || max_local_attempts < 0) {
    throw Error(ErrorCode::kInvalidArgument, "correction budgets must be >= 0");
  }
  if (base_temperature < 0.0) {
    throw Error(ErrorCode::kTemperatureNonPositive, "base_temperature must be >= 0");
  }
  if (temperature_step < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "temperature_step must be >= 0");
  }
  if (max_length < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_length must be >= 1");
  }
}

void DecodeState::set_sequence(std::vector<std::string> tokens) {
  sequence = std::move(tokens);
  last_cn_index = -1;
  last_sentence_index = -1;
  for (int i = 0; i < static_cast<int>(sequence.size()); ++i) {
    if (sequence[i] == kConfidentClose) last_cn_index = i;
    if (sequence[i] == "." || sequence[i] == "!" || sequence[i] == "?") last_sentence_index = i;
  }
}

void DecodeState::append_token(const std::string& token) {
  sequence.push_back(token);
  int pos = static_cast<int>(sequence.size()) - 1;
  if (token == kConfidentClose) last_cn_index = pos;
  if (token == "." || token == "!" || token == "?") last_sentence_index = pos;
}

void DecodeState::truncate_to(int kept_last_index) {
  sequence.resize(static_cast<size_t>(std::max(kept_last_index + 1, 0)));
  set_sequence(std::move(sequence));
}

double un_probability(const Distribution& dist, const Vocabulary& vocab) {
  return dist.probs.at(vocab.unconfident_close_index());
}

bool detect(const Distribution& dist, const Vocabulary& vocab, double tau) {
  return un_probability(dist, vocab) >= tau;
}

std::vector<std::string> rewrite_query(const std::vector<std::string>& question,
                                       const std::vector<std::string>& placeholders) {
  // Strip a previous hint suffix so repeated rewrites never stack.
  std::vector<std::string> out = question;
  if (!out.empty() && out.back() == kHintClose) {
    for (int i = static_cast<int>(out.size()) - 1; i >= 0; --i) {
      if (out[i] == kHintOpen) {
        out.resize(i);
        break;
      }
    }
  }
  // Deduplicate, first-occurrence order.
  std::vector<std::string> unique;
  for (const auto& phrase : placeholders) {
    if (std::find(unique.begin(), unique.end(), phrase) == unique.end()) unique.push_back(phrase);
  }
  out.push_back(kHintOpen);
  out.push_back("potential");
  out.push_back("incorrect");
  out.push_back("phrases");
  out.push_back("→");
  for (size_t i = 0; i < unique.size(); ++i) {
    if (i) out.push_back(",");
    for (auto& tok : split_tokens(unique[i])) out.push_back(tok);
  }
  out.push_back(kHintClose);
  return out;
}

namespace {

// Backtrack target that discards the suspicious span entirely: checkpoints
// are searched strictly before the last open <SPAN> (or before the final
// token when no span is open), so a closer sampled at the detection position
// never becomes its own checkpoint.
int suspicious_region_start(const std::vector<std::string>& seq) {
  for (int i = static_cast<int>(seq.size()) - 1; i >= 0; --i) {
    if (seq[i] == kSpanOpen) return i;
  }
  return static_cast<int>(seq.size()) - 1;
}

int last_index_before(const std::vector<std::string>& seq, int limit,
                      const std::function<bool(const std::string&)>& pred) {
  for (int i = std::min(limit, static_cast<int>(seq.size())) - 1; i >= 0; --i) {
    if (pred(seq[i])) return i;
  }
  return -1;
}

}  // namespace

BacktrackInfo backtrack_local(DecodeState& state, const DecodeConfig& config) {
  BacktrackInfo info;
  int limit = suspicious_region_start(state.sequence);
  int target = last_index_before(state.sequence, limit,
                                 [](const std::string& t) { return t == kConfidentClose; });
  if (target < 0) {
    info.used_global = true;
    target = last_index_before(state.sequence, limit, [&](const std::string& t) {
      return config.is_sentence_punctuation(t);
    });
  }
  info.kept_until = target;
  std::vector<std::string> discarded(state.sequence.begin() + (target + 1),
                                     state.sequence.end());
  info.placeholder = harvest_phrase(discarded);
  if (!info.placeholder.empty()) state.placeholders.push_back(info.placeholder);
  state.truncate_to(target);
  return info;
}

int backtrack_global(DecodeState& state, const DecodeConfig& config) {
  int target = last_index_before(
      state.sequence, static_cast<int>(state.sequence.size()),
      [&](const std::string& t) { return config.is_sentence_punctuation(t); });
  state.truncate_to(target);
  state.k_local = 0;
  return target;
}

namespace {

class DecodeSession {
 public:
  DecodeSession(const std::vector<std::string>& question, DistributionBackend& backend,
                const DecodeConfig& config, const TraceSink& trace)
      : question_(question),
        backend_(backend),
        vocab_(backend.vocab()),
        config_(config),
        trace_(trace),
        rng_(config.seed, "decode") {
    state_.temperature = config.base_temperature;
  }

  DecodeOutcome run() {
    bool finished = false;
    while (!finished) {
      if (static_cast<int>(state_.sequence.size()) >= config_.max_length) {
        state_.flagged = true;
        break;
      }
      Distribution dist = backend_.next_distribution(context());
      std::string token = sample_and_append(dist);
      double p_un = un_probability(dist, vocab_);
      if (token == kTerminator) finished = true;
      if (p_un >= config_.tau) {
        emit({{"event", "detect"},
              {"pos", static_cast<int>(state_.sequence.size()) - 1},
              {"p_un", p_un},
              {"tau", config_.tau}});
        finished = false;  // the suspicious region owns any terminator in it
        if (state_.n_total >= config_.max_total_corrections) {
          state_.flagged = true;
          break;
        }
        if (!run_correction_loop()) {
          state_.flagged = true;
          break;
        }
        if (!state_.sequence.empty() && state_.sequence.back() == kTerminator) finished = true;
      }
    }
    return finalize();
  }

 private:
  std::vector<std::string> context() const {
    std::vector<std::string> ctx = state_.placeholders.empty()
                                       ? question_
                                       : rewrite_query(question_, state_.placeholders);
    ctx.insert(ctx.end(), state_.sequence.begin(), state_.sequence.end());
    return ctx;
  }

  std::string sample_and_append(const Distribution& dist) {
    size_t idx = rng_.categorical(dist.probs, state_.temperature);
    const std::string& token = vocab_.token(static_cast<int>(idx));
    ++tokens_generated_;
    state_.append_token(token);
    emit({{"event", "token"},
          {"pos", static_cast<int>(state_.sequence.size()) - 1},
          {"token", token},
          {"p_un", un_probability(dist, vocab_)},
          {"temp", state_.temperature}});
    return token;
  }

  bool run_correction_loop() {
    bool just_escalated = false;
    while (state_.n_total < config_.max_total_corrections) {
      // An escalation already moved the checkpoint and truncated; running the
      // local backtrack on top of it would walk past the sentence boundary.
      if (!just_escalated) {
        BacktrackInfo info = backtrack_local(state_, config_);
        if (info.used_global) {
          emit({{"event", "backtrack_global"}, {"to", info.kept_until}});
        } else {
          emit({{"event", "backtrack_local"},
                {"to", info.kept_until},
                {"placeholder", info.placeholder}});
        }
      }
      just_escalated = false;
      ++state_.attempts_since_accept;
      state_.temperature =
          std::min(config_.base_temperature +
                       config_.temperature_step * state_.attempts_since_accept,
                   config_.temperature_cap());
      ++state_.n_total;
      if (resample_attempt()) {
        emit({{"event", "resample_accept"},
              {"n", state_.n_total},
              {"len", accepted_length_},
              {"temp", state_.temperature}});
        state_.temperature = config_.base_temperature;
        state_.attempts_since_accept = 0;
        state_.k_local = 0;
        return true;
      }
      ++state_.k_local;
      emit({{"event", "resample_fail"},
            {"n", state_.n_total},
            {"k", state_.k_local},
            {"temp", state_.temperature}});
      if (state_.k_local >= config_.max_local_attempts &&
          state_.n_total < config_.max_total_corrections) {
        int to = backtrack_global(state_, config_);
        emit({{"event", "backtrack_global"}, {"to", to}});
        just_escalated = true;
      }
    }
    return false;
  }

  // Regenerates from the current truncation point until the span closes
  // confidently or generation leaves span context. Any position with
  // P(</UN>) >= tau, an unconfident close, or running out of room fails the
  // attempt; the partial tokens stay until the next backtrack discards them.
  bool resample_attempt() {
    bool in_span = false;
    int start_len = static_cast<int>(state_.sequence.size());
    while (true) {
      if (static_cast<int>(state_.sequence.size()) >= config_.max_length) return false;
      Distribution dist = backend_.next_distribution(context());
      std::string token = sample_and_append(dist);
      if (un_probability(dist, vocab_) >= config_.tau) return false;
      if (token == kUnconfidentClose) return false;
      if (token == kSpanOpen) {
        in_span = true;
      } else if (token == kConfidentClose) {
        accepted_length_ = static_cast<int>(state_.sequence.size()) - start_len;
        return true;
      } else if (token == kTerminator) {
        accepted_length_ = static_cast<int>(state_.sequence.size()) - start_len;
        return !in_span;
      } else if (!in_span && config_.is_sentence_punctuation(token)) {
        accepted_length_ = static_cast<int>(state_.sequence.size()) - start_len;
        return true;
      }
    }
  }

  DecodeOutcome finalize() {
    emit({{"event", "finalize"},
          {"flagged", state_.flagged},
          {"corrections", state_.n_total},
          {"generated", tokens_generated_},
          {"emitted", static_cast<int64_t>(state_.sequence.size())}});
    DecodeOutcome outcome;
    outcome.annotated_text = parse_spans_lenient(state_.sequence);
    std::vector<std::string> clean;
    for (const auto& tok : strip_marker_tokens(state_.sequence)) {
      if (tok != kTerminator) clean.push_back(tok);
    }
    outcome.clean_text = join_tokens(clean);
    outcome.corrections_applied = state_.n_total;
    outcome.flagged_uncorrected = state_.flagged;
    outcome.tokens_generated_total = tokens_generated_;
    outcome.tokens_emitted = static_cast<int64_t>(state_.sequence.size());
    return outcome;
  }

  void emit(nlohmann::ordered_json event) {
    if (trace_) trace_(event);
  }

  const std::vector<std::string>& question_;
  DistributionBackend& backend_;
  const Vocabulary& vocab_;
  const DecodeConfig& config_;
  const TraceSink& trace_;
  Rng rng_;
  DecodeState state_;
  int64_t tokens_generated_ = 0;
  int accepted_length_ = 0;
};

}  // namespace

DecodeOutcome decode(const std::vector<std::string>& question, DistributionBackend& backend,
                     const DecodeConfig& config, const TraceSink& trace) {
  config.validate();
  DecodeSession session(question, backend, config, trace);
  return session.run();
}

DecodeOutcome decode_open_ended(const std::vector<std::string>& question,
                                DistributionBackend& backend, const DecodeConfig& config,
                                const TraceSink& trace) {
  DecodeOutcome first = decode(question, backend, config, trace);
  if (!is_blank_text(first.clean_text)) return first;

  std::vector<std::string> retry_question = question;
  for (auto& tok : split_tokens(kUnanswerableClarification)) retry_question.push_back(tok);
  DecodeOutcome second = decode(retry_question, backend, config, trace);
  second.stage = 2;
  second.tokens_generated_total += first.tokens_generated_total;
  second.corrections_applied += first.corrections_applied;
  if (is_blank_text(second.clean_text)) second.flagged_uncorrected = true;
  return second;
}

nlohmann::ordered_json DecodeOutcome::to_json() const {
  nlohmann::ordered_json j;
  j["clean_text"] = clean_text;
  j["annotated"] = annotated_text.to_json();
  j["corrections_applied"] = corrections_applied;
  j["flagged_uncorrected"] = flagged_uncorrected;
  j["tokens_generated_total"] = tokens_generated_total;
  j["tokens_emitted"] = tokens_emitted;
  j["stage"] = stage;
  return j;
}

}  // namespace reverse
