#ifndef REVERSE_CURATION_H_
#define REVERSE_CURATION_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reverse/rng.h"
#include "reverse/tokens.h"

namespace reverse {

enum class SamplePolarity { kPositive, kNegative };
enum class AnswerKind { kBinaryYesNo, kCounting, kGeneral };

/// One instruction-tuning turn. Negative samples carry at least one
/// unconfident span and obey the </UN>-terminal rule; positives carry none.
struct QASample {
  std::string id;
  std::optional<std::string> image_ref;
  std::vector<std::string> question;
  AnnotatedText answer;
  SamplePolarity polarity = SamplePolarity::kPositive;
  std::optional<std::vector<std::string>> hint;

  // Pipeline provenance; kept in memory only, never serialized.
  std::string source_id;
  std::string substituted_original;
  std::string substituted_alternative;

  nlohmann::ordered_json to_json() const;
  static QASample from_json(const nlohmann::json& j);
  void validate() const;  // throws InvalidSample
};

/// Phrases excluded from span tagging. Lookup is exact match on the
/// normalized (lowercased) phrase. Defaults to the built-in list of question
/// words, pronouns, articles and image/picture boilerplate.
class SkipList {
 public:
  SkipList();
  static SkipList from_entries(const std::vector<std::string>& entries);
  static SkipList load(const std::string& path);  // newline-delimited

  static std::string normalize(std::string_view phrase);
  bool contains(std::string_view phrase) const;
  size_t size() const { return entries_.size(); }

 private:
  std::set<std::string> entries_;
};

struct CurationConfig {
  double hint_rate = 0.2;
  uint64_t seed = 0;
  enum class NegativeHook { kRuleOnly, kExternal };
  NegativeHook negative_hook = NegativeHook::kRuleOnly;
  int number_perturb_radius = 3;

  void validate() const;
};

/// Noun phrases grouped by category; substitution alternatives come from the
/// same category.
class PhraseDictionary {
 public:
  void add(const std::string& category, const std::string& phrase);
  static PhraseDictionary from_json(const nlohmann::json& j);  // {"category": [phrases]}
  static PhraseDictionary load(const std::string& path);

  struct Match {
    int begin = 0;
    int length = 0;
    std::string category;
  };

  /// Longest dictionary phrase starting at `begin` (case-insensitive).
  std::optional<Match> longest_match_at(const std::vector<std::string>& tokens, int begin) const;

  /// Longest dictionary phrase that is a suffix of `content`; this is how a
  /// span's substitutable core is recovered (the prefix holds any article or
  /// preposition the tagger absorbed).
  std::optional<std::pair<std::string, std::string>> core_suffix_of(
      const std::vector<std::string>& content) const;  // (category, phrase)

  std::vector<std::string> alternatives(const std::string& category,
                                        const std::string& phrase) const;
  bool empty() const { return phrases_.empty(); }

 private:
  // (category, tokenized phrase), longest first within a category lookup
  std::vector<std::pair<std::string, std::vector<std::string>>> phrases_;
};

/// Marks phrase extents to wrap. `end` is exclusive.
class PhraseTagger {
 public:
  struct Tag {
    int begin = 0;
    int end = 0;
  };
  virtual ~PhraseTagger() = default;
  virtual std::vector<Tag> tag(const std::vector<std::string>& tokens) const = 0;
};

/// Default tagger: greedy longest match against the dictionary, extended
/// leftward over an immediately preceding article and preposition.
class DictionaryTagger : public PhraseTagger {
 public:
  explicit DictionaryTagger(const PhraseDictionary& dict) : dict_(dict) {}
  std::vector<Tag> tag(const std::vector<std::string>& tokens) const override;

 private:
  const PhraseDictionary& dict_;
};

/// BinaryYesNo when the normalized answer begins with yes/no, Counting when
/// the head token is a cardinal number, General otherwise.
AnswerKind classify_answer_type(const std::vector<std::string>& question,
                                const std::vector<std::string>& answer);

/// Cardinal parsing used by the counting rules: digit strings and the number
/// words zero..twenty.
std::optional<int64_t> parse_cardinal(const std::string& token);

/// Wraps every tagger-identified phrase not on the skip list in
/// <SPAN> ... </CN>.
AnnotatedText tag_spans(const std::vector<std::string>& answer, const SkipList& skiplist,
                        const PhraseTagger& tagger);

/// External negative provider: given (question, annotated answer) returns
/// (original phrase, alternative) or nullopt when it has no substitution.
using ExternalNegativeHook =
    std::function<std::optional<std::pair<std::string, std::string>>(
        const std::vector<std::string>&, const AnnotatedText&)>;

/// Derives the negative turn for a positive sample. Yes/No answers flip,
/// counting answers get a perturbed number, general answers get one tagged
/// phrase substituted with a same-category alternative. The substituted span
/// closes with </UN> and the answer is truncated after it.
QASample generate_negative(const QASample& sample, AnswerKind kind, const CurationConfig& config,
                           const PhraseDictionary& dict, Rng& rng,
                           const ExternalNegativeHook& hook = nullptr);

/// With probability hint_rate, suffixes the question with the rewrite hint
/// naming the substituted phrase.
QASample inject_rewrite_hint(const QASample& sample, const CurationConfig& config, Rng& rng);

struct DatasetStats {
  int64_t n_samples = 0;
  int64_t n_turns = 0;
  int64_t n_positive_turns = 0;
  int64_t n_negative_turns = 0;
  double avg_turns_per_sample = 0.0;

  nlohmann::ordered_json to_json() const;
};

/// Serializes samples as JSONL, one per line, in the given order.
void serialize_dataset(const std::vector<QASample>& samples, std::ostream& out);

/// Full emit step: validates, drops trivial negatives (substitutions that
/// differ from the original only by skip-list words), shuffles the turn
/// order per seed, writes JSONL and returns the composition stats.
DatasetStats emit_dataset(std::vector<QASample> samples, std::ostream& out,
                          const SkipList& skiplist, uint64_t seed);
DatasetStats emit_dataset(std::vector<QASample> samples, const std::string& path,
                          const SkipList& skiplist, uint64_t seed);

/// Parses a JSONL dataset; errors name the 1-based line number.
std::vector<QASample> load_dataset(std::istream& in);
std::vector<QASample> load_dataset_file(const std::string& path);

/// One uncurated positive record, the pipeline input.
struct RawSample {
  std::string id;
  std::optional<std::string> image_ref;
  std::vector<std::string> question;
  std::vector<std::string> answer;

  static RawSample from_json(const nlohmann::json& j);
};

struct CurationResult {
  std::vector<QASample> samples;
  int64_t negatives_skipped = 0;  // positives whose answers had no taggable span
};

/// Tags every positive, derives one negative per positive where possible and
/// applies hint injection. Deterministic for a fixed seed and input order.
CurationResult run_curation(const std::vector<RawSample>& raws, const PhraseDictionary& dict,
                            const SkipList& skiplist, const CurationConfig& config,
                            const ExternalNegativeHook& hook = nullptr);

}  // namespace reverse

#endif  // REVERSE_CURATION_H_
