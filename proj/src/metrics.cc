#include "reverse/metrics.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "reverse/error.h"
#include "reverse/rng.h"
#include "reverse/tokens.h"

namespace reverse {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
  size_t n = 0;
  for (const auto& x : a) n += b.count(x);
  return n;
}

double percentile(std::vector<double> sorted_values, double q) {
  // linear interpolation between closest ranks
  if (sorted_values.empty()) return 0.0;
  double rank = q * (static_cast<double>(sorted_values.size()) - 1.0);
  size_t lo = static_cast<size_t>(std::floor(rank));
  size_t hi = static_cast<size_t>(std::ceil(rank));
  double frac = rank - static_cast<double>(lo);
  return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

}  // namespace

std::string ObjectNormalizer::normalize(std::string_view surface) const {
  std::string low = lower(surface);
  auto it = singular_map_.find(low);
  return it == singular_map_.end() ? low : it->second;
}

double chair(const std::set<std::string>& mentioned, const std::set<std::string>& annotated) {
  if (mentioned.empty()) {
    throw Error(ErrorCode::kEmptyMention, "per-caption CHAIR is undefined with no mentions");
  }
  return 1.0 - static_cast<double>(intersection_size(mentioned, annotated)) /
                   static_cast<double>(mentioned.size());
}

double cover(const std::set<std::string>& mentioned, const std::set<std::string>& annotated) {
  if (annotated.empty()) {
    throw Error(ErrorCode::kEmptyAnnotation, "cover is undefined with an empty annotation set");
  }
  return static_cast<double>(intersection_size(mentioned, annotated)) /
         static_cast<double>(annotated.size());
}

int hal(const std::set<std::string>& mentioned, const std::set<std::string>& annotated) {
  if (mentioned.empty()) return 0;
  return chair(mentioned, annotated) != 0.0 ? 1 : 0;
}

double cog(const std::set<std::string>& mentioned, const std::set<std::string>& targets) {
  if (mentioned.empty()) {
    throw Error(ErrorCode::kEmptyMention, "cog is undefined with no mentions");
  }
  return static_cast<double>(intersection_size(mentioned, targets)) /
         static_cast<double>(mentioned.size());
}

AggregateScores aggregate(const std::vector<CaptionRecord>& records) {
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyInput, "aggregate requires at least one record");
  }
  int64_t hallucinated_instances = 0;
  int64_t mentioned_instances = 0;
  int64_t hallucinated_captions = 0;
  for (const auto& r : records) {
    mentioned_instances += static_cast<int64_t>(r.mentioned.size());
    hallucinated_instances += static_cast<int64_t>(r.mentioned.size()) -
                              static_cast<int64_t>(intersection_size(r.mentioned, r.annotated));
    hallucinated_captions += hal(r.mentioned, r.annotated);
  }
  if (mentioned_instances == 0) {
    throw Error(ErrorCode::kAllEmptyMentions, "no record mentioned any object");
  }
  AggregateScores scores;
  scores.chair_i =
      static_cast<double>(hallucinated_instances) / static_cast<double>(mentioned_instances);
  scores.chair_s =
      static_cast<double>(hallucinated_captions) / static_cast<double>(records.size());
  return scores;
}

std::set<std::string> extract_objects(const std::string& caption,
                                      const std::vector<std::string>& dictionary,
                                      const ObjectNormalizer& normalizer) {
  if (dictionary.empty()) {
    throw Error(ErrorCode::kEmptyInput, "extract_objects requires a non-empty dictionary");
  }
  std::vector<std::vector<std::string>> entries;
  entries.reserve(dictionary.size());
  for (const auto& e : dictionary) entries.push_back(split_tokens(lower(e)));

  auto tokens = split_tokens(caption);
  for (auto& t : tokens) t = lower(t);

  std::set<std::string> found;
  int i = 0;
  int n = static_cast<int>(tokens.size());
  while (i < n) {
    const std::vector<std::string>* best = nullptr;
    for (const auto& entry : entries) {
      int len = static_cast<int>(entry.size());
      if (len == 0 || i + len > n) continue;
      if (best && len <= static_cast<int>(best->size())) continue;
      if (std::equal(entry.begin(), entry.end(), tokens.begin() + i)) best = &entry;
    }
    if (best) {
      found.insert(normalizer.normalize(join_tokens(*best)));
      i += static_cast<int>(best->size());
    } else {
      ++i;
    }
  }
  return found;
}

BootstrapSummary bootstrap(const std::vector<double>& values, int rounds, uint64_t seed) {
  if (values.empty()) {
    throw Error(ErrorCode::kEmptyInput, "bootstrap requires non-empty values");
  }
  if (rounds < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bootstrap requires rounds >= 1");
  }
  Rng rng(seed, "bootstrap");
  std::vector<double> round_means;
  round_means.reserve(static_cast<size_t>(rounds));
  int64_t n = static_cast<int64_t>(values.size());
  for (int r = 0; r < rounds; ++r) {
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      sum += values[static_cast<size_t>(rng.uniform_int(0, n - 1))];
    }
    round_means.push_back(sum / static_cast<double>(n));
  }
  std::vector<double> sorted = round_means;
  std::sort(sorted.begin(), sorted.end());
  BootstrapSummary s;
  for (double m : round_means) s.mean += m;
  s.mean /= static_cast<double>(rounds);
  s.ci_low = percentile(sorted, 0.025);
  s.ci_high = percentile(sorted, 0.975);
  return s;
}

double token_ratio(const std::vector<DecodeOutcome>& outcomes,
                   const std::vector<DecodeOutcome>& baseline_outcomes) {
  if (outcomes.size() != baseline_outcomes.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "token_ratio requires matched-length outcome lists");
  }
  if (outcomes.empty()) {
    throw Error(ErrorCode::kEmptyInput, "token_ratio requires at least one outcome");
  }
  double engine = 0.0;
  double baseline = 0.0;
  for (size_t i = 0; i < outcomes.size(); ++i) {
    engine += static_cast<double>(outcomes[i].tokens_generated_total);
    baseline += static_cast<double>(baseline_outcomes[i].tokens_generated_total);
  }
  return engine / baseline;
}

MetricReport evaluate_corpus(const std::vector<CaptionRecord>& records, int bootstrap_rounds,
                             uint64_t seed) {
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyInput, "evaluate_corpus requires records");
  }
  std::vector<double> chair_values;
  std::vector<double> cover_values;
  std::vector<double> hal_values;
  std::vector<double> cog_values;
  for (const auto& r : records) {
    if (!r.mentioned.empty()) {
      chair_values.push_back(chair(r.mentioned, r.annotated));
      cog_values.push_back(cog(r.mentioned, r.hallucinatory_targets));
    }
    if (!r.annotated.empty()) cover_values.push_back(cover(r.mentioned, r.annotated));
    hal_values.push_back(static_cast<double>(hal(r.mentioned, r.annotated)));
  }

  MetricReport report;
  report.n_records = static_cast<int64_t>(records.size());
  report.n_scored_mentions = static_cast<int64_t>(chair_values.size());
  AggregateScores agg = aggregate(records);
  report.chair_i = agg.chair_i;
  report.chair_s = agg.chair_s;
  if (!chair_values.empty()) {
    report.chair_summary = bootstrap(chair_values, bootstrap_rounds, seed);
    report.cog_summary = bootstrap(cog_values, bootstrap_rounds, seed + 1);
  }
  if (!cover_values.empty()) {
    report.cover_summary = bootstrap(cover_values, bootstrap_rounds, seed + 2);
  }
  report.hal_summary = bootstrap(hal_values, bootstrap_rounds, seed + 3);
  return report;
}

CaptionRecord CaptionRecord::from_json(const nlohmann::json& j) {
  CaptionRecord r;
  r.id = j.at("id").get<std::string>();
  if (j.contains("caption")) r.caption = j.at("caption").get<std::string>();
  // Callers resolve `caption` into `mentioned` with extract_objects; records
  // with pre-extracted sets load directly.
  if (j.contains("mentioned")) {
    for (const auto& m : j.at("mentioned")) r.mentioned.insert(m.get<std::string>());
  }
  for (const auto& a : j.at("annotated_objects")) r.annotated.insert(a.get<std::string>());
  if (j.contains("hallucinatory_targets") && !j.at("hallucinatory_targets").is_null()) {
    for (const auto& h : j.at("hallucinatory_targets")) {
      r.hallucinatory_targets.insert(h.get<std::string>());
    }
  }
  return r;
}

nlohmann::ordered_json MetricReport::to_json() const {
  auto summary_json = [](const BootstrapSummary& s) {
    nlohmann::ordered_json j;
    j["mean"] = s.mean;
    j["ci_low"] = s.ci_low;
    j["ci_high"] = s.ci_high;
    return j;
  };
  nlohmann::ordered_json j;
  j["n_records"] = n_records;
  j["n_scored_mentions"] = n_scored_mentions;
  j["chair"] = summary_json(chair_summary);
  j["cover"] = summary_json(cover_summary);
  j["hal"] = summary_json(hal_summary);
  j["cog"] = summary_json(cog_summary);
  j["chair_i"] = chair_i;
  j["chair_s"] = chair_s;
  return j;
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(10) << "metric" << std::right << std::setw(10) << "mean"
      << std::setw(10) << "ci_low" << std::setw(10) << "ci_high" << "\n";
  auto row = [&out](const char* name, const BootstrapSummary& s) {
    out << std::left << std::setw(10) << name << std::right << std::setw(10) << s.mean
        << std::setw(10) << s.ci_low << std::setw(10) << s.ci_high << "\n";
  };
  row("chair", chair_summary);
  row("cover", cover_summary);
  row("hal", hal_summary);
  row("cog", cog_summary);
  out << std::left << std::setw(10) << "chair_i" << std::right << std::setw(10) << chair_i
      << "\n";
  out << std::left << std::setw(10) << "chair_s" << std::right << std::setw(10) << chair_s
      << "\n";
  return out.str();
}

std::vector<CaptionRecord> load_caption_records(std::istream& in) {
  std::vector<CaptionRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(CaptionRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidSample,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace reverse
