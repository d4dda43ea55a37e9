#include "reverse/curation.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "reverse/decode.h"
#include "reverse/error.h"

namespace reverse {

namespace {

const std::vector<std::string>& default_skip_entries() {
  static const std::vector<std::string> entries = {
      "what", "where", "which", "who", "whom", "whose", "why", "how",
      "that", "this", "these", "those",
      "he", "she", "it", "we", "you", "they", "me", "him", "her", "us", "them", "i",
      "my", "your", "his", "its", "our", "their", "mine", "yours", "ours", "theirs",
      "a", "an", "the",
      "in the image", "the image", "in the picture", "the picture",
  };
  return entries;
}

const std::set<std::string>& article_set() {
  static const std::set<std::string> s = {"a", "an", "the"};
  return s;
}

const std::set<std::string>& preposition_set() {
  static const std::set<std::string> s = {
      "in", "on", "at", "of", "with", "under", "over", "near", "behind", "beside",
      "by", "inside", "outside", "from", "to", "above", "below", "across", "along",
      "around", "against", "between"};
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string strip_trailing_punct(std::string token) {
  while (!token.empty() && std::string(".,!?;:").find(token.back()) != std::string::npos) {
    token.pop_back();
  }
  return token;
}

bool starts_uppercase(const std::string& token) {
  return !token.empty() && std::isupper(static_cast<unsigned char>(token[0]));
}

const std::vector<std::string>& number_words() {
  static const std::vector<std::string> words = {
      "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
      "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen",
      "eighteen", "nineteen", "twenty"};
  return words;
}

// Multiset symmetric difference of two token lists (normalized).
std::vector<std::string> token_diff(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  std::map<std::string, int> counts;
  for (const auto& t : a) counts[SkipList::normalize(t)]++;
  for (const auto& t : b) counts[SkipList::normalize(t)]--;
  std::vector<std::string> diff;
  for (const auto& [tok, c] : counts) {
    for (int i = 0; i < std::abs(c); ++i) diff.push_back(tok);
  }
  return diff;
}

}  // namespace

// ---------------------------------------------------------------- SkipList

SkipList::SkipList() {
  for (const auto& e : default_skip_entries()) entries_.insert(normalize(e));
}

SkipList SkipList::from_entries(const std::vector<std::string>& entries) {
  SkipList list;
  list.entries_.clear();
  for (const auto& e : entries) {
    std::string n = normalize(e);
    if (!n.empty()) list.entries_.insert(n);
  }
  return list;
}

SkipList SkipList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read skip list " + path);
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    entries.push_back(line);
  }
  return from_entries(entries);
}

std::string SkipList::normalize(std::string_view phrase) {
  std::string out = lower(phrase);
  // collapse runs of spaces and trim
  std::string collapsed;
  bool in_space = true;
  for (char c : out) {
    if (c == ' ') {
      if (!in_space) collapsed += ' ';
      in_space = true;
    } else {
      collapsed += c;
      in_space = false;
    }
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

bool SkipList::contains(std::string_view phrase) const {
  return entries_.count(normalize(phrase)) > 0;
}

void CurationConfig::validate() const {
  if (hint_rate < 0.0 || hint_rate > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "hint_rate must be in [0, 1]");
  }
  if (number_perturb_radius < 1) {
    throw Error(ErrorCode::kInvalidArgument, "number_perturb_radius must be >= 1");
  }
}

// ------------------------------------------------------- PhraseDictionary

void PhraseDictionary::add(const std::string& category, const std::string& phrase) {
  auto tokens = split_tokens(lower(phrase));
  if (tokens.empty()) return;
  phrases_.emplace_back(category, std::move(tokens));
}

PhraseDictionary PhraseDictionary::from_json(const nlohmann::json& j) {
  PhraseDictionary dict;
  if (!j.is_object()) {
    throw Error(ErrorCode::kMalformedResponse, "phrase dictionary must be a JSON object");
  }
  for (const auto& [category, phrases] : j.items()) {
    for (const auto& p : phrases) dict.add(category, p.get<std::string>());
  }
  return dict;
}

PhraseDictionary PhraseDictionary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read phrase dictionary " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

std::optional<PhraseDictionary::Match> PhraseDictionary::longest_match_at(
    const std::vector<std::string>& tokens, int begin) const {
  std::optional<Match> best;
  for (const auto& [category, phrase] : phrases_) {
    int len = static_cast<int>(phrase.size());
    if (begin + len > static_cast<int>(tokens.size())) continue;
    if (best && len <= best->length) continue;
    bool ok = true;
    for (int k = 0; k < len; ++k) {
      if (lower(tokens[begin + k]) != phrase[k]) {
        ok = false;
        break;
      }
    }
    if (ok) best = Match{begin, len, category};
  }
  return best;
}

std::optional<std::pair<std::string, std::string>> PhraseDictionary::core_suffix_of(
    const std::vector<std::string>& content) const {
  std::optional<std::pair<std::string, std::string>> best;
  size_t best_len = 0;
  for (const auto& [category, phrase] : phrases_) {
    size_t len = phrase.size();
    if (len > content.size() || len <= best_len) continue;
    bool ok = true;
    for (size_t k = 0; k < len; ++k) {
      if (lower(content[content.size() - len + k]) != phrase[k]) {
        ok = false;
        break;
      }
    }
    if (ok) {
      best = std::make_pair(category, join_tokens(phrase));
      best_len = len;
    }
  }
  return best;
}

std::vector<std::string> PhraseDictionary::alternatives(const std::string& category,
                                                        const std::string& phrase) const {
  std::string norm = lower(phrase);
  std::vector<std::string> out;
  for (const auto& [cat, tokens] : phrases_) {
    if (cat != category) continue;
    std::string candidate = join_tokens(tokens);
    if (candidate != norm && std::find(out.begin(), out.end(), candidate) == out.end()) {
      out.push_back(candidate);
    }
  }
  return out;
}

// -------------------------------------------------------- DictionaryTagger

std::vector<PhraseTagger::Tag> DictionaryTagger::tag(
    const std::vector<std::string>& tokens) const {
  std::vector<Tag> tags;
  int floor = 0;  // never extend into a previous tag
  int i = 0;
  int n = static_cast<int>(tokens.size());
  while (i < n) {
    auto match = dict_.longest_match_at(tokens, i);
    if (!match) {
      ++i;
      continue;
    }
    int begin = match->begin;
    if (begin - 1 >= floor && article_set().count(lower(tokens[begin - 1]))) --begin;
    if (begin - 1 >= floor && preposition_set().count(lower(tokens[begin - 1]))) --begin;
    tags.push_back(Tag{begin, match->begin + match->length});
    floor = match->begin + match->length;
    i = floor;
  }
  return tags;
}

// ------------------------------------------------------------- operations

AnswerKind classify_answer_type(const std::vector<std::string>& question,
                                const std::vector<std::string>& answer) {
  (void)question;  // the rules only look at the answer head
  if (answer.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "classify_answer_type requires a non-empty answer");
  }
  std::string head = lower(strip_trailing_punct(answer.front()));
  if (head == "yes" || head == "no") return AnswerKind::kBinaryYesNo;
  if (parse_cardinal(head)) return AnswerKind::kCounting;
  return AnswerKind::kGeneral;
}

std::optional<int64_t> parse_cardinal(const std::string& token) {
  std::string t = lower(strip_trailing_punct(token));
  if (t.empty()) return std::nullopt;
  if (std::all_of(t.begin(), t.end(),
                  [](unsigned char c) { return std::isdigit(c); })) {
    try {
      return std::stoll(t);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  const auto& words = number_words();
  for (size_t i = 0; i < words.size(); ++i) {
    if (t == words[i]) return static_cast<int64_t>(i);
  }
  return std::nullopt;
}

AnnotatedText tag_spans(const std::vector<std::string>& answer, const SkipList& skiplist,
                        const PhraseTagger& tagger) {
  for (const auto& tok : answer) {
    if (is_marker(tok)) {
      throw Error(ErrorCode::kInvalidArgument, "tag_spans input already carries markers");
    }
  }
  auto tags = tagger.tag(answer);
  std::vector<std::string> out;
  out.reserve(answer.size() + 2 * tags.size());
  size_t next_tag = 0;
  int i = 0;
  while (i < static_cast<int>(answer.size())) {
    if (next_tag < tags.size() && tags[next_tag].begin == i) {
      const PhraseTagger::Tag t = tags[next_tag++];
      std::vector<std::string> surface(answer.begin() + t.begin, answer.begin() + t.end);
      bool skipped = skiplist.contains(join_tokens(surface));
      if (!skipped) out.emplace_back(kSpanOpen);
      for (int k = t.begin; k < t.end; ++k) out.push_back(answer[k]);
      if (!skipped) out.emplace_back(kConfidentClose);
      i = t.end;
    } else {
      out.push_back(answer[i]);
      ++i;
    }
  }
  return parse_spans(out);
}

namespace {

QASample negative_skeleton(const QASample& sample) {
  QASample neg = sample;
  neg.id = sample.id + "#neg";
  neg.polarity = SamplePolarity::kNegative;
  neg.hint.reset();
  neg.source_id = sample.id;
  return neg;
}

QASample flip_or_perturb_negative(const QASample& sample, const std::string& original,
                                  const std::string& replacement) {
  QASample neg = negative_skeleton(sample);
  neg.answer = parse_spans({std::string(kSpanOpen), replacement, std::string(kUnconfidentClose)});
  neg.substituted_original = original;
  neg.substituted_alternative = replacement;
  return neg;
}

// Replaces the chosen span's core with the alternative, closes it with </UN>
// and truncates the answer there. Spans before the chosen one survive.
QASample substitute_span_negative(const QASample& sample, const SpanRecord& span,
                                  int core_tokens, const std::string& original,
                                  const std::string& alternative) {
  QASample neg = negative_skeleton(sample);
  const auto& tokens = sample.answer.tokens;
  std::vector<std::string> out(tokens.begin(), tokens.begin() + span.open_index);
  out.emplace_back(kSpanOpen);
  for (int i = span.open_index + 1; i < span.close_index - core_tokens; ++i) {
    out.push_back(tokens[i]);  // absorbed article/preposition prefix
  }
  for (auto& tok : split_tokens(alternative)) out.push_back(tok);
  out.emplace_back(kUnconfidentClose);
  neg.answer = parse_spans(out);
  neg.substituted_original = original;
  neg.substituted_alternative = alternative;
  return neg;
}

}  // namespace

QASample generate_negative(const QASample& sample, AnswerKind kind, const CurationConfig& config,
                           const PhraseDictionary& dict, Rng& rng,
                           const ExternalNegativeHook& hook) {
  config.validate();
  if (sample.polarity != SamplePolarity::kPositive) {
    throw Error(ErrorCode::kInvalidArgument, "generate_negative requires a positive sample");
  }
  std::vector<std::string> content = strip_markers(sample.answer);
  if (content.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "generate_negative requires a non-empty answer");
  }

  if (kind == AnswerKind::kBinaryYesNo) {
    std::string head = strip_trailing_punct(content.front());
    std::string low = lower(head);
    if (low != "yes" && low != "no") {
      throw Error(ErrorCode::kInvalidSample, "yes/no sample does not start with yes or no");
    }
    std::string flipped = low == "yes" ? "no" : "yes";
    if (starts_uppercase(head)) flipped[0] = static_cast<char>(std::toupper(flipped[0]));
    return flip_or_perturb_negative(sample, head, flipped);
  }

  if (kind == AnswerKind::kCounting) {
    std::string head = strip_trailing_punct(content.front());
    auto n = parse_cardinal(head);
    if (!n) throw Error(ErrorCode::kInvalidSample, "counting sample head is not a cardinal");
    int64_t r = config.number_perturb_radius;
    std::vector<int64_t> domain;
    for (int64_t v = std::max<int64_t>(0, *n - r); v <= *n + r; ++v) {
      if (v != *n) domain.push_back(v);
    }
    int64_t drawn = domain[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int64_t>(domain.size()) - 1))];
    bool word_style = !std::isdigit(static_cast<unsigned char>(head[0]));
    std::string rendered = word_style && drawn <= 20
                               ? number_words()[static_cast<size_t>(drawn)]
                               : std::to_string(drawn);
    if (word_style && starts_uppercase(head) && drawn <= 20) {
      rendered[0] = static_cast<char>(std::toupper(rendered[0]));
    }
    return flip_or_perturb_negative(sample, head, rendered);
  }

  // General answers.
  if (config.negative_hook == CurationConfig::NegativeHook::kExternal) {
    if (!hook) {
      throw Error(ErrorCode::kExternalHookUnavailable, "external negative hook not provided");
    }
    auto result = hook(sample.question, sample.answer);
    if (!result) {
      throw Error(ErrorCode::kNoTaggableSpan, "external hook produced no substitution");
    }
    auto original_tokens = split_tokens(result->first);
    for (const auto& span : sample.answer.spans) {
      std::vector<std::string> span_content(
          sample.answer.tokens.begin() + span.open_index + 1,
          sample.answer.tokens.begin() + span.close_index);
      if (span_content.size() < original_tokens.size()) continue;
      bool suffix = true;
      for (size_t k = 0; k < original_tokens.size(); ++k) {
        if (lower(span_content[span_content.size() - original_tokens.size() + k]) !=
            lower(original_tokens[k])) {
          suffix = false;
          break;
        }
      }
      if (suffix) {
        return substitute_span_negative(sample, span,
                                        static_cast<int>(original_tokens.size()),
                                        result->first, result->second);
      }
    }
    throw Error(ErrorCode::kInvalidSample,
                "hook phrase '" + result->first + "' is not a tagged span suffix");
  }

  struct Candidate {
    SpanRecord span;
    int core_tokens;
    std::string category;
    std::string core;
  };
  std::vector<Candidate> candidates;
  for (const auto& span : sample.answer.spans) {
    std::vector<std::string> span_content(sample.answer.tokens.begin() + span.open_index + 1,
                                          sample.answer.tokens.begin() + span.close_index);
    auto core = dict.core_suffix_of(span_content);
    if (!core) continue;
    if (dict.alternatives(core->first, core->second).empty()) continue;
    candidates.push_back(Candidate{span, static_cast<int>(split_tokens(core->second).size()),
                                   core->first, core->second});
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::kNoTaggableSpan,
                "no tagged span with a substitutable dictionary phrase");
  }
  const Candidate& chosen = candidates[static_cast<size_t>(
      rng.uniform_int(0, static_cast<int64_t>(candidates.size()) - 1))];
  auto alts = dict.alternatives(chosen.category, chosen.core);
  const std::string& alt =
      alts[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(alts.size()) - 1))];
  return substitute_span_negative(sample, chosen.span, chosen.core_tokens, chosen.core, alt);
}

QASample inject_rewrite_hint(const QASample& sample, const CurationConfig& config, Rng& rng) {
  config.validate();
  if (sample.polarity != SamplePolarity::kNegative || sample.substituted_alternative.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "hint injection needs a negative sample with a recorded substitution");
  }
  double u = rng.uniform();
  if (u >= config.hint_rate) return sample;
  QASample out = sample;
  out.question = rewrite_query(sample.question, {sample.substituted_alternative});
  out.hint = std::vector<std::string>{sample.substituted_alternative};
  return out;
}

// ------------------------------------------------------------ QASample IO

nlohmann::ordered_json QASample::to_json() const {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["image"] = image_ref ? nlohmann::ordered_json(*image_ref) : nlohmann::ordered_json(nullptr);
  j["question"] = join_tokens(question);
  j["answer"] = answer.to_json();
  j["polarity"] = polarity == SamplePolarity::kPositive ? "pos" : "neg";
  j["hint"] = hint ? nlohmann::ordered_json(*hint) : nlohmann::ordered_json(nullptr);
  return j;
}

QASample QASample::from_json(const nlohmann::json& j) {
  QASample s;
  s.id = j.at("id").get<std::string>();
  if (j.contains("image") && !j.at("image").is_null()) {
    s.image_ref = j.at("image").get<std::string>();
  }
  s.question = split_tokens(j.at("question").get<std::string>());
  s.answer = AnnotatedText::from_json(j.at("answer"));
  std::string pol = j.at("polarity").get<std::string>();
  if (pol != "pos" && pol != "neg") {
    throw Error(ErrorCode::kInvalidSample, "polarity must be 'pos' or 'neg'");
  }
  s.polarity = pol == "pos" ? SamplePolarity::kPositive : SamplePolarity::kNegative;
  if (j.contains("hint") && !j.at("hint").is_null()) {
    s.hint = j.at("hint").get<std::vector<std::string>>();
  }
  s.validate();
  return s;
}

void QASample::validate() const {
  int un_spans = 0;
  for (const auto& span : answer.spans) {
    if (span.polarity == Polarity::kUnconfident) ++un_spans;
  }
  if (polarity == SamplePolarity::kNegative && un_spans == 0) {
    throw Error(ErrorCode::kInvalidSample, "negative sample '" + id + "' has no unconfident span");
  }
  if (polarity == SamplePolarity::kPositive && un_spans > 0) {
    throw Error(ErrorCode::kInvalidSample,
                "positive sample '" + id + "' carries an unconfident span");
  }
}

// ----------------------------------------------------------- emit / load

namespace {

std::string group_key(const QASample& s) {
  if (s.image_ref) return "img:" + *s.image_ref;
  return "id:" + (s.source_id.empty() ? s.id : s.source_id);
}

bool is_trivial_negative(const QASample& neg, const SkipList& skiplist) {
  if (neg.substituted_original.empty() && neg.substituted_alternative.empty()) return false;
  auto diff = token_diff(split_tokens(neg.substituted_original),
                         split_tokens(neg.substituted_alternative));
  for (const auto& tok : diff) {
    if (!skiplist.contains(tok)) return false;
  }
  return true;  // covers identical substitutions and pure skip-word swaps
}

}  // namespace

nlohmann::ordered_json DatasetStats::to_json() const {
  nlohmann::ordered_json j;
  j["n_samples"] = n_samples;
  j["n_turns"] = n_turns;
  j["n_positive_turns"] = n_positive_turns;
  j["n_negative_turns"] = n_negative_turns;
  j["avg_turns_per_sample"] = avg_turns_per_sample;
  return j;
}

void serialize_dataset(const std::vector<QASample>& samples, std::ostream& out) {
  for (const auto& s : samples) out << s.to_json().dump() << "\n";
}

DatasetStats emit_dataset(std::vector<QASample> samples, std::ostream& out,
                          const SkipList& skiplist, uint64_t seed) {
  std::vector<QASample> kept;
  kept.reserve(samples.size());
  for (auto& s : samples) {
    s.validate();
    if (s.polarity == SamplePolarity::kNegative && is_trivial_negative(s, skiplist)) continue;
    kept.push_back(std::move(s));
  }
  Rng rng(seed, "emit-shuffle");
  rng.shuffle(kept);

  DatasetStats stats;
  std::set<std::string> groups;
  for (const auto& s : kept) {
    groups.insert(group_key(s));
    ++stats.n_turns;
    if (s.polarity == SamplePolarity::kPositive) {
      ++stats.n_positive_turns;
    } else {
      ++stats.n_negative_turns;
    }
  }
  stats.n_samples = static_cast<int64_t>(groups.size());
  stats.avg_turns_per_sample =
      stats.n_samples ? static_cast<double>(stats.n_turns) / stats.n_samples : 0.0;

  serialize_dataset(kept, out);
  return stats;
}

DatasetStats emit_dataset(std::vector<QASample> samples, const std::string& path,
                          const SkipList& skiplist, uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write dataset " + path);
  return emit_dataset(std::move(samples), out, skiplist, seed);
}

std::vector<QASample> load_dataset(std::istream& in) {
  std::vector<QASample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      samples.push_back(QASample::from_json(nlohmann::json::parse(line)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidSample,
                  "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidSample,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

std::vector<QASample> load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read dataset " + path);
  return load_dataset(in);
}

RawSample RawSample::from_json(const nlohmann::json& j) {
  RawSample s;
  s.id = j.at("id").get<std::string>();
  if (j.contains("image") && !j.at("image").is_null()) {
    s.image_ref = j.at("image").get<std::string>();
  }
  s.question = split_tokens(j.at("question").get<std::string>());
  s.answer = split_tokens(j.at("answer").get<std::string>());
  if (s.answer.empty()) {
    throw Error(ErrorCode::kInvalidSample, "sample '" + s.id + "' has an empty answer");
  }
  return s;
}

CurationResult run_curation(const std::vector<RawSample>& raws, const PhraseDictionary& dict,
                            const SkipList& skiplist, const CurationConfig& config,
                            const ExternalNegativeHook& hook) {
  config.validate();
  DictionaryTagger tagger(dict);
  Rng neg_rng(config.seed, "curate-negatives");
  Rng hint_rng(config.seed, "curate-hints");

  CurationResult result;
  for (const auto& raw : raws) {
    QASample pos;
    pos.id = raw.id;
    pos.image_ref = raw.image_ref;
    pos.question = raw.question;
    pos.answer = tag_spans(raw.answer, skiplist, tagger);
    result.samples.push_back(pos);

    AnswerKind kind = classify_answer_type(raw.question, raw.answer);
    try {
      QASample neg = generate_negative(pos, kind, config, dict, neg_rng, hook);
      result.samples.push_back(inject_rewrite_hint(neg, config, hint_rng));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNoTaggableSpan) {
        ++result.negatives_skipped;
      } else {
        throw;
      }
    }
  }
  return result;
}

}  // namespace reverse
