#ifndef REVERSE_METRICS_H_
#define REVERSE_METRICS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "reverse/decode.h"
#include "reverse/vendor_json.h"

namespace reverse {

/// Object sets for one caption: what the caption mentioned, the ground-truth
/// annotation and (optionally) the human-typical hallucination targets. All
/// strings are stored normalized (lowercased, dictionary-singularized).
struct CaptionRecord {
  std::string id;
  std::string caption;                          // raw text, may be empty when
                                                // `mentioned` is pre-extracted
  std::set<std::string> mentioned;             // R'_obj
  std::set<std::string> annotated;             // A_obj
  std::set<std::string> hallucinatory_targets;  // H_obj

  static CaptionRecord from_json(const nlohmann::json& j);
};

/// Maps surface forms to their normalized object name ("dogs" -> "dog").
/// No stemmer; a plain lookup keeps normalization deterministic.
class ObjectNormalizer {
 public:
  ObjectNormalizer() = default;
  explicit ObjectNormalizer(const std::map<std::string, std::string>& singular_map)
      : singular_map_(singular_map) {}

  std::string normalize(std::string_view surface) const;

 private:
  std::map<std::string, std::string> singular_map_;
};

/// Per-caption hallucination fraction: 1 - |R' ∩ A| / |R'|.
/// Throws EmptyMention when the caption mentioned nothing.
double chair(const std::set<std::string>& mentioned, const std::set<std::string>& annotated);

/// Ground-truth coverage: |R' ∩ A| / |A|. Throws EmptyAnnotation.
double cover(const std::set<std::string>& mentioned, const std::set<std::string>& annotated);

/// 1 iff the caption hallucinated at all; empty mentions count as 0.
int hal(const std::set<std::string>& mentioned, const std::set<std::string>& annotated);

/// Overlap with the hallucination target set: |R' ∩ H| / |R'|.
/// Throws EmptyMention.
double cog(const std::set<std::string>& mentioned, const std::set<std::string>& targets);

struct AggregateScores {
  double chair_i = 0.0;  // hallucinated instances over all mentioned instances
  double chair_s = 0.0;  // fraction of captions with any hallucination
};

/// Corpus aggregation. Captions with empty mentions contribute nothing to
/// chair_i and count as non-hallucinating for chair_s. Throws
/// AllEmptyMentions when no caption mentioned anything.
AggregateScores aggregate(const std::vector<CaptionRecord>& records);

/// Longest-match object extraction from a caption against a dictionary of
/// object names (multi-word entries allowed); results are normalized.
std::set<std::string> extract_objects(const std::string& caption,
                                      const std::vector<std::string>& dictionary,
                                      const ObjectNormalizer& normalizer = {});

struct BootstrapSummary {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Resample-with-replacement bootstrap: mean of round means, 95% CI from the
/// 2.5/97.5 percentiles of the round means. Deterministic per seed.
BootstrapSummary bootstrap(const std::vector<double>& values, int rounds, uint64_t seed);

/// Ratio of generated-token totals between an engine run and its baseline.
/// Throws LengthMismatch when the outcome lists differ in size.
double token_ratio(const std::vector<DecodeOutcome>& outcomes,
                   const std::vector<DecodeOutcome>& baseline_outcomes);

struct MetricReport {
  int64_t n_records = 0;
  int64_t n_scored_mentions = 0;  // records with non-empty mentions
  BootstrapSummary chair_summary;
  BootstrapSummary cover_summary;
  BootstrapSummary hal_summary;
  BootstrapSummary cog_summary;
  double chair_i = 0.0;
  double chair_s = 0.0;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;  // aligned-column text table
};

/// Per-caption metrics plus corpus aggregates and bootstrap CIs.
MetricReport evaluate_corpus(const std::vector<CaptionRecord>& records, int bootstrap_rounds,
                             uint64_t seed);

std::vector<CaptionRecord> load_caption_records(std::istream& in);

}  // namespace reverse

#endif  // REVERSE_METRICS_H_
