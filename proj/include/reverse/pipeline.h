#ifndef REVERSE_PIPELINE_H_
#define REVERSE_PIPELINE_H_

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "reverse/backend.h"
#include "reverse/decode.h"
#include "reverse/metrics.h"

namespace reverse {

/// One decode task: the question plus (optionally) the ground truth needed
/// to score the result.
struct PromptTask {
  std::string id;
  std::vector<std::string> question;
  std::set<std::string> annotated_objects;
  std::set<std::string> hallucinatory_targets;

  static PromptTask from_json(const nlohmann::json& j);
};

std::vector<PromptTask> load_prompt_tasks(std::istream& in);

/// Decodes every task in input order. Each prompt draws from its own seed
/// stream ("decode/<index>" under `master_seed`), so results are independent
/// of batching and stable under parallel execution.
std::vector<DecodeOutcome> run_decode(const std::vector<PromptTask>& tasks,
                                      DistributionBackend& backend, const DecodeConfig& base,
                                      uint64_t master_seed, bool open_ended = false,
                                      const TraceSink& trace = nullptr);

/// Scores decode outcomes against the tasks' ground truth: mentions are
/// extracted from the clean text with the object dictionary.
std::vector<CaptionRecord> records_from_outcomes(const std::vector<PromptTask>& tasks,
                                                 const std::vector<DecodeOutcome>& outcomes,
                                                 const std::vector<std::string>& object_dict,
                                                 const ObjectNormalizer& normalizer = {});

/// Mean per-record coverage (records with an empty annotation set are
/// skipped).
double mean_cover(const std::vector<CaptionRecord>& records);

struct SweepRow {
  double tau = 0.0;
  double chair_i = 0.0;
  double chair_s = 0.0;
  double cover = 0.0;
  int64_t tokens_generated = 0;

  nlohmann::ordered_json to_json() const;
};

/// Decode + eval over a grid of detection thresholds. Rows come back in the
/// given tau order; every row reuses the same per-prompt seed streams so
/// differences between rows are purely threshold-driven.
std::vector<SweepRow> sweep_thresholds(const std::vector<PromptTask>& tasks,
                                       DistributionBackend& backend, const DecodeConfig& base,
                                       const std::vector<double>& taus,
                                       const std::vector<std::string>& object_dict,
                                       uint64_t master_seed);

std::string sweep_table(const std::vector<SweepRow>& rows);

}  // namespace reverse

#endif  // REVERSE_PIPELINE_H_
