#include "reverse/pipeline.h"

#include <iomanip>
#include <sstream>

#include "reverse/error.h"
#include "reverse/rng.h"
#include "reverse/tokens.h"

namespace reverse {

PromptTask PromptTask::from_json(const nlohmann::json& j) {
  PromptTask t;
  t.id = j.at("id").get<std::string>();
  t.question = split_tokens(j.at("question").get<std::string>());
  if (j.contains("annotated_objects") && !j.at("annotated_objects").is_null()) {
    for (const auto& a : j.at("annotated_objects")) {
      t.annotated_objects.insert(a.get<std::string>());
    }
  }
  if (j.contains("hallucinatory_targets") && !j.at("hallucinatory_targets").is_null()) {
    for (const auto& h : j.at("hallucinatory_targets")) {
      t.hallucinatory_targets.insert(h.get<std::string>());
    }
  }
  return t;
}

std::vector<PromptTask> load_prompt_tasks(std::istream& in) {
  std::vector<PromptTask> tasks;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      tasks.push_back(PromptTask::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidSample,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return tasks;
}

std::vector<DecodeOutcome> run_decode(const std::vector<PromptTask>& tasks,
                                      DistributionBackend& backend, const DecodeConfig& base,
                                      uint64_t master_seed, bool open_ended,
                                      const TraceSink& trace) {
  std::vector<DecodeOutcome> outcomes;
  outcomes.reserve(tasks.size());
  for (size_t i = 0; i < tasks.size(); ++i) {
    DecodeConfig config = base;
    config.seed = derive_stream_seed(master_seed, "decode/" + std::to_string(i));
    outcomes.push_back(open_ended ? decode_open_ended(tasks[i].question, backend, config, trace)
                                  : decode(tasks[i].question, backend, config, trace));
  }
  return outcomes;
}

std::vector<CaptionRecord> records_from_outcomes(const std::vector<PromptTask>& tasks,
                                                 const std::vector<DecodeOutcome>& outcomes,
                                                 const std::vector<std::string>& object_dict,
                                                 const ObjectNormalizer& normalizer) {
  if (tasks.size() != outcomes.size()) {
    throw Error(ErrorCode::kLengthMismatch, "tasks and outcomes differ in length");
  }
  std::vector<CaptionRecord> records;
  records.reserve(tasks.size());
  for (size_t i = 0; i < tasks.size(); ++i) {
    CaptionRecord r;
    r.id = tasks[i].id;
    r.caption = outcomes[i].clean_text;
    r.mentioned = extract_objects(outcomes[i].clean_text, object_dict, normalizer);
    for (const auto& a : tasks[i].annotated_objects) r.annotated.insert(normalizer.normalize(a));
    for (const auto& h : tasks[i].hallucinatory_targets) {
      r.hallucinatory_targets.insert(normalizer.normalize(h));
    }
    records.push_back(std::move(r));
  }
  return records;
}

double mean_cover(const std::vector<CaptionRecord>& records) {
  double sum = 0.0;
  int64_t n = 0;
  for (const auto& r : records) {
    if (r.annotated.empty()) continue;
    sum += cover(r.mentioned, r.annotated);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyAnnotation, "no record carries annotations");
  return sum / static_cast<double>(n);
}

nlohmann::ordered_json SweepRow::to_json() const {
  nlohmann::ordered_json j;
  j["tau"] = tau;
  j["chair_i"] = chair_i;
  j["chair_s"] = chair_s;
  j["cover"] = cover;
  j["tokens_generated"] = tokens_generated;
  return j;
}

std::vector<SweepRow> sweep_thresholds(const std::vector<PromptTask>& tasks,
                                       DistributionBackend& backend, const DecodeConfig& base,
                                       const std::vector<double>& taus,
                                       const std::vector<std::string>& object_dict,
                                       uint64_t master_seed) {
  std::vector<SweepRow> rows;
  for (double tau : taus) {
    DecodeConfig config = base;
    config.tau = tau;
    auto outcomes = run_decode(tasks, backend, config, master_seed);
    auto records = records_from_outcomes(tasks, outcomes, object_dict);
    SweepRow row;
    row.tau = tau;
    try {
      AggregateScores agg = aggregate(records);
      row.chair_i = agg.chair_i;
      row.chair_s = agg.chair_s;
    } catch (const Error& e) {
      // A very low threshold can suppress every mention; that is zero
      // hallucination, not an error, at the sweep level.
      if (e.code() != ErrorCode::kAllEmptyMentions) throw;
    }
    row.cover = mean_cover(records);
    for (const auto& o : outcomes) row.tokens_generated += o.tokens_generated_total;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "tau" << std::right << std::setw(10) << "chair_i"
      << std::setw(10) << "chair_s" << std::setw(10) << "cover" << std::setw(12) << "tokens"
      << "\n";
  out << std::fixed;
  for (const auto& row : rows) {
    out << std::left << std::setw(10) << std::setprecision(4) << row.tau << std::right
        << std::setw(10) << row.chair_i << std::setw(10) << row.chair_s << std::setw(10)
        << row.cover << std::setw(12) << row.tokens_generated << "\n";
  }
  return out.str();
}

}  // namespace reverse
