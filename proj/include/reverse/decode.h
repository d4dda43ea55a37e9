#ifndef REVERSE_DECODE_H_
#define REVERSE_DECODE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "reverse/backend.h"
#include "reverse/tokens.h"
#include "reverse/vocab.h"

namespace reverse {

// Question suffix used by the second stage of open-ended decoding when the
// first stage comes back blank.
inline constexpr std::string_view kUnanswerableClarification =
    "For this question, please point out the false premises or note what information is "
    "missing, rather than answering it directly.";

struct DecodeConfig {
  double tau = 0.003;                // detection threshold on P(</UN>)
  int max_total_corrections = 50;    // N
  int max_local_attempts = 10;       // K
  double base_temperature = 1.0;     // T0; 0 means greedy main-loop sampling
  double temperature_step = 0.1;     // dT
  int max_length = 256;              // cap on emitted sequence length
  uint64_t seed = 0;
  std::vector<std::string> sentence_punctuation = {".", "!", "?"};

  double temperature_cap() const { return base_temperature + 0.5; }
  bool is_sentence_punctuation(const std::string& token) const;
  void validate() const;  // throws InvalidArgument
};

/// Live state of one generation session.
struct DecodeState {
  std::vector<std::string> sequence;    // emitted tokens, prompt excluded
  int last_cn_index = -1;               // last </CN> position, -1 if none
  int last_sentence_index = -1;         // last sentence punctuation, -1 if none
  int n_total = 0;                      // correction attempts spent
  int k_local = 0;                      // consecutive local failures
  int attempts_since_accept = 0;        // drives the temperature schedule
  double temperature = 1.0;
  std::vector<std::string> placeholders;  // suspected-incorrect phrases, discovery order
  bool flagged = false;

  /// Replaces the sequence and recomputes the checkpoint indices.
  void set_sequence(std::vector<std::string> tokens);
  void append_token(const std::string& token);
  void truncate_to(int kept_last_index);  // -1 empties the sequence
};

struct DecodeOutcome {
  std::string clean_text;       // markers and terminator stripped
  AnnotatedText annotated_text;  // final sequence, leniently parsed when flagged
  int corrections_applied = 0;
  bool flagged_uncorrected = false;
  int64_t tokens_generated_total = 0;  // every sampled token, discarded ones included
  int64_t tokens_emitted = 0;          // final sequence length
  int stage = 1;                       // which open-ended stage produced the text

  nlohmann::ordered_json to_json() const;
};

/// JSON-lines event stream for debugging and trace tests. Events, in the
/// field order emitted:
///   {"event":"token","pos":int,"token":str,"p_un":float,"temp":float}
///   {"event":"detect","pos":int,"p_un":float,"tau":float}
///   {"event":"backtrack_local","to":int,"placeholder":str}
///   {"event":"backtrack_global","to":int}
///   {"event":"resample_fail","n":int,"k":int,"temp":float}
///   {"event":"resample_accept","n":int,"len":int,"temp":float}
///   {"event":"finalize","flagged":bool,"corrections":int,"generated":int,"emitted":int}
/// `to` is the index of the last kept token (-1 when truncating to empty);
/// `k` counts this failure; `len` is the accepted segment length.
using TraceSink = std::function<void(const nlohmann::ordered_json&)>;

double un_probability(const Distribution& dist, const Vocabulary& vocab);
bool detect(const Distribution& dist, const Vocabulary& vocab, double tau);

/// Appends the hint suffix listing the placeholder phrases (deduplicated,
/// first-occurrence order) to the question. An existing hint suffix is
/// replaced, never stacked.
std::vector<std::string> rewrite_query(const std::vector<std::string>& question,
                                       const std::vector<std::string>& placeholders);

struct BacktrackInfo {
  bool used_global = false;  // no </CN> existed, fell through to a boundary
  int kept_until = -1;       // last kept index
  std::string placeholder;   // harvested phrase, empty if none
};

/// Truncates to the most recent confident close, harvesting the discarded
/// span content into the placeholder list. Falls through to the last
/// sentence boundary (or the empty sequence) when no </CN> exists.
BacktrackInfo backtrack_local(DecodeState& state, const DecodeConfig& config);

/// Truncates to the last sentence-punctuation token (or empty) and resets
/// the local failure counter.
int backtrack_global(DecodeState& state, const DecodeConfig& config);

struct ResampleResult {
  bool accepted = false;
  int length = 0;  // tokens appended by this attempt
};

/// One rejection-sampling attempt from the current truncation point, at the
/// state's current temperature and with the hint-rewritten question.
/// Accepted iff P(</UN>) stayed below tau at every generated position and
/// the segment closed confidently (</CN>) or left span context (sentence
/// punctuation or the terminator outside a span). A failed attempt leaves
/// its tokens in place; the next backtrack discards them. The caller owns
/// the temperature schedule and the attempt counters.
ResampleResult resample_span(DecodeState& state, const std::vector<std::string>& question,
                             DistributionBackend& backend, const DecodeConfig& config, Rng& rng,
                             int64_t& tokens_generated, const TraceSink& trace = nullptr);

/// Runs the full retrospective-resampling loop against the backend. Fully
/// deterministic for a fixed (prompt, backend script, config, seed).
DecodeOutcome decode(const std::vector<std::string>& question, DistributionBackend& backend,
                     const DecodeConfig& config, const TraceSink& trace = nullptr);

/// Two-stage variant: when the first decode yields a blank text, reruns once
/// with the unanswerable-question clarification appended. Token and
/// correction counters accumulate across stages.
DecodeOutcome decode_open_ended(const std::vector<std::string>& question,
                                DistributionBackend& backend, const DecodeConfig& config,
                                const TraceSink& trace = nullptr);

}  // namespace reverse

#endif  // REVERSE_DECODE_H_
