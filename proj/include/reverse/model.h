#ifndef REVERSE_MODEL_H_
#define REVERSE_MODEL_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "reverse/tokens.h"
#include "reverse/vocab.h"

namespace reverse {

/// Fixed-window next-token model: the last `context_window` token embeddings
/// are concatenated and fed through a single linear layer + softmax. Small
/// enough that every gradient is hand-checkable against finite differences.
struct ModelParams {
  int context_window = 0;  // c
  int embed_dim = 0;       // d
  int vocab_size = 0;      // V

  std::vector<double> embedding;  // V x d, row-major
  std::vector<double> output;     // (c*d) x V, row-major
  std::vector<double> bias;       // V

  static ModelParams zeros(int context_window, int embed_dim, int vocab_size);

  double& embed_at(int token, int dim) { return embedding[token * embed_dim + dim]; }
  double embed_at(int token, int dim) const { return embedding[token * embed_dim + dim]; }
};

/// Model plus the vocabulary its indices refer to.
struct ToyModel {
  Vocabulary vocab;
  ModelParams params;

  nlohmann::ordered_json to_json() const;
  static ToyModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static ToyModel load(const std::string& path);
};

struct TrainConfig {
  double learning_rate = 0.5;
  int epochs = 200;
  uint64_t seed = 0;
  double init_scale = 0.1;
  int context_window = 6;
  int embed_dim = 6;
};

/// One (input, target) pair; the target keeps its markers so the loss mask
/// can be derived from it.
struct TrainingPair {
  std::vector<std::string> input;
  AnnotatedText target;
};

/// Builds a pair from question tokens and an annotated answer, appending the
/// terminator to the target when absent.
TrainingPair make_training_pair(const std::vector<std::string>& question,
                                const AnnotatedText& answer, bool append_terminator = true);

/// Index-level view of a training pair; the mask has one bit per target.
struct IndexSample {
  std::vector<int> input_ids;
  std::vector<int> target_ids;
  std::vector<uint8_t> mask;
};

/// Softmax of logits/temperature over the padded last-c context.
/// `context_ids` may be any length; only the trailing window is used.
Distribution forward(const ToyModel& model, const std::vector<int>& context_ids,
                     double temperature = 1.0);
Distribution forward_ids(const ModelParams& params, const std::vector<int>& context_ids,
                         int pad_index, double temperature);

/// Masked negative log-likelihood of the target sequence: positions whose
/// hallucination-mask bit is 0 contribute nothing. Masking applies to the
/// targets only; every target token still appears as input at later steps.
double masked_nll(const ToyModel& model, const TrainingPair& pair);
double masked_nll_ids(const ModelParams& params, const IndexSample& sample, int pad_index);

struct GradientResult {
  ModelParams grads;     // same shapes as the parameters
  double mean_loss = 0;  // mean per-sample masked NLL over the batch
};

/// Analytic gradient of the mean masked NLL over the batch.
GradientResult gradient(const ToyModel& model, const std::vector<TrainingPair>& batch);
GradientResult gradient_ids(const ModelParams& params, const std::vector<IndexSample>& batch,
                            int pad_index);

struct TrainResult {
  ToyModel model;
  std::vector<double> loss_trajectory;  // mean loss before each step
};

/// Full-batch gradient descent for config.epochs steps. Throws
/// DivergenceDetected if the loss stops being finite.
TrainResult train(const Vocabulary& vocab, const std::vector<TrainingPair>& corpus,
                  const TrainConfig& config);

}  // namespace reverse

#endif  // REVERSE_MODEL_H_
