#include "reverse/model.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "reverse/error.h"
#include "reverse/rng.h"

namespace reverse {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr std::string_view kModelMagic = "reverse-toy-model-v1";

// Trailing window of the context, left-padded with the pad index.
std::vector<int> window_of(const std::vector<int>& context_ids, int c, int pad_index) {
  std::vector<int> win(c, pad_index);
  int n = static_cast<int>(context_ids.size());
  for (int slot = 0; slot < c; ++slot) {
    int src = n - c + slot;
    if (src >= 0) win[slot] = context_ids[src];
  }
  return win;
}

std::vector<double> logits_of(const ModelParams& p, const std::vector<int>& window) {
  std::vector<double> logits(p.bias);
  for (int slot = 0; slot < p.context_window; ++slot) {
    int tok = window[slot];
    for (int k = 0; k < p.embed_dim; ++k) {
      double x = p.embedding[tok * p.embed_dim + k];
      if (x == 0.0) continue;
      const double* w_row = &p.output[(slot * p.embed_dim + k) * p.vocab_size];
      for (int v = 0; v < p.vocab_size; ++v) logits[v] += x * w_row[v];
    }
  }
  return logits;
}

std::vector<double> softmax(std::vector<double> logits, double temperature) {
  double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& l : logits) {
    l = std::exp((l - max_logit) / temperature);
    sum += l;
  }
  for (double& l : logits) l /= sum;
  return logits;
}

IndexSample prepare(const Vocabulary& vocab, const TrainingPair& pair) {
  IndexSample s;
  // Inputs tolerate out-of-vocabulary tokens (they become pad); targets are
  // strict, a target outside the vocabulary has no well-defined loss term.
  s.input_ids.reserve(pair.input.size());
  for (const auto& tok : pair.input) s.input_ids.push_back(vocab.index_or_pad(tok));
  s.target_ids = vocab.encode(pair.target.tokens);
  s.mask = hallucination_mask(pair.target);
  return s;
}

}  // namespace

ModelParams ModelParams::zeros(int context_window, int embed_dim, int vocab_size) {
  ModelParams p;
  p.context_window = context_window;
  p.embed_dim = embed_dim;
  p.vocab_size = vocab_size;
  p.embedding.assign(static_cast<size_t>(vocab_size) * embed_dim, 0.0);
  p.output.assign(static_cast<size_t>(context_window) * embed_dim * vocab_size, 0.0);
  p.bias.assign(vocab_size, 0.0);
  return p;
}

TrainingPair make_training_pair(const std::vector<std::string>& question,
                                const AnnotatedText& answer, bool append_terminator) {
  TrainingPair pair;
  pair.input = question;
  pair.target = answer;
  if (append_terminator &&
      (pair.target.tokens.empty() || pair.target.tokens.back() != kTerminator)) {
    pair.target.tokens.emplace_back(kTerminator);
  }
  return pair;
}

Distribution forward_ids(const ModelParams& params, const std::vector<int>& context_ids,
                         int pad_index, double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kTemperatureNonPositive,
                "forward requires temperature > 0, got " + std::to_string(temperature));
  }
  auto window = window_of(context_ids, params.context_window, pad_index);
  Distribution dist{softmax(logits_of(params, window), temperature)};
  dist.validate();
  return dist;
}

Distribution forward(const ToyModel& model, const std::vector<int>& context_ids,
                     double temperature) {
  return forward_ids(model.params, context_ids, model.vocab.pad_index(), temperature);
}

double masked_nll_ids(const ModelParams& params, const IndexSample& sample, int pad_index) {
  std::vector<int> context = sample.input_ids;
  double loss = 0.0;
  for (size_t i = 0; i < sample.target_ids.size(); ++i) {
    if (sample.mask[i]) {
      Distribution dist = forward_ids(params, context, pad_index, 1.0);
      loss -= std::log(std::max(dist.probs[sample.target_ids[i]], kProbFloor));
    }
    context.push_back(sample.target_ids[i]);
  }
  return loss;
}

double masked_nll(const ToyModel& model, const TrainingPair& pair) {
  return masked_nll_ids(model.params, prepare(model.vocab, pair), model.vocab.pad_index());
}

GradientResult gradient_ids(const ModelParams& p, const std::vector<IndexSample>& batch,
                            int pad_index) {
  if (batch.empty()) {
    throw Error(ErrorCode::kEmptyInput, "gradient requires a non-empty batch");
  }
  GradientResult result;
  result.grads = ModelParams::zeros(p.context_window, p.embed_dim, p.vocab_size);
  ModelParams& g = result.grads;

  for (const auto& s : batch) {
    std::vector<int> context = s.input_ids;
    for (size_t i = 0; i < s.target_ids.size(); ++i) {
      if (s.mask[i]) {
        auto window = window_of(context, p.context_window, pad_index);
        auto probs = softmax(logits_of(p, window), 1.0);
        result.mean_loss -= std::log(std::max(probs[s.target_ids[i]], kProbFloor));
        // dL/dlogit = p - onehot(target)
        std::vector<double>& dlogits = probs;
        dlogits[s.target_ids[i]] -= 1.0;
        for (int v = 0; v < p.vocab_size; ++v) g.bias[v] += dlogits[v];
        for (int slot = 0; slot < p.context_window; ++slot) {
          int tok = window[slot];
          for (int k = 0; k < p.embed_dim; ++k) {
            double x = p.embedding[tok * p.embed_dim + k];
            const double* w_row = &p.output[(slot * p.embed_dim + k) * p.vocab_size];
            double* gw_row = &g.output[(slot * p.embed_dim + k) * p.vocab_size];
            double dx = 0.0;
            for (int v = 0; v < p.vocab_size; ++v) {
              gw_row[v] += x * dlogits[v];
              dx += w_row[v] * dlogits[v];
            }
            g.embedding[tok * p.embed_dim + k] += dx;
          }
        }
      }
      context.push_back(s.target_ids[i]);
    }
  }

  double inv_n = 1.0 / static_cast<double>(batch.size());
  for (double& v : g.embedding) v *= inv_n;
  for (double& v : g.output) v *= inv_n;
  for (double& v : g.bias) v *= inv_n;
  result.mean_loss *= inv_n;
  return result;
}

GradientResult gradient(const ToyModel& model, const std::vector<TrainingPair>& batch) {
  std::vector<IndexSample> prepared;
  prepared.reserve(batch.size());
  for (const auto& pair : batch) prepared.push_back(prepare(model.vocab, pair));
  return gradient_ids(model.params, prepared, model.vocab.pad_index());
}

TrainResult train(const Vocabulary& vocab, const std::vector<TrainingPair>& corpus,
                  const TrainConfig& config) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyInput, "train requires a non-empty corpus");
  }
  if (!(config.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
  }
  if (config.epochs < 0) {
    throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 0");
  }

  // context_window 0 is a legal degenerate shape: a bias-only model, convex
  // in its parameters.
  if (config.context_window < 0 || config.embed_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "context_window must be >= 0, embed_dim >= 1");
  }

  TrainResult result{ToyModel{vocab, {}}, {}};
  ModelParams& p = result.model.params;
  p = ModelParams::zeros(config.context_window, config.embed_dim, vocab.size());

  Rng rng(config.seed, "model-init");
  auto init = [&](std::vector<double>& w) {
    for (double& v : w) v = (rng.uniform() * 2.0 - 1.0) * config.init_scale;
  };
  init(p.embedding);
  init(p.output);
  init(p.bias);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    GradientResult step = gradient(result.model, corpus);
    if (!std::isfinite(step.mean_loss)) {
      throw Error(ErrorCode::kDivergenceDetected,
                  "loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.loss_trajectory.push_back(step.mean_loss);
    for (size_t i = 0; i < p.embedding.size(); ++i)
      p.embedding[i] -= config.learning_rate * step.grads.embedding[i];
    for (size_t i = 0; i < p.output.size(); ++i)
      p.output[i] -= config.learning_rate * step.grads.output[i];
    for (size_t i = 0; i < p.bias.size(); ++i)
      p.bias[i] -= config.learning_rate * step.grads.bias[i];
  }
  return result;
}

nlohmann::ordered_json ToyModel::to_json() const {
  nlohmann::ordered_json j;
  j["magic"] = kModelMagic;
  j["context_window"] = params.context_window;
  j["embed_dim"] = params.embed_dim;
  j["vocab"] = vocab.tokens();
  j["embedding"] = params.embedding;
  j["output"] = params.output;
  j["bias"] = params.bias;
  return j;
}

ToyModel ToyModel::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("magic", "") != kModelMagic) {
    throw Error(ErrorCode::kMalformedResponse, "not a toy-model parameter file");
  }
  auto stored = j.at("vocab").get<std::vector<std::string>>();
  ToyModel model{Vocabulary(stored), {}};
  if (model.vocab.tokens() != stored) {
    throw Error(ErrorCode::kMalformedResponse, "vocab in file is not in canonical order");
  }
  ModelParams& p = model.params;
  p.context_window = j.at("context_window").get<int>();
  p.embed_dim = j.at("embed_dim").get<int>();
  p.vocab_size = model.vocab.size();
  p.embedding = j.at("embedding").get<std::vector<double>>();
  p.output = j.at("output").get<std::vector<double>>();
  p.bias = j.at("bias").get<std::vector<double>>();
  size_t cd = static_cast<size_t>(p.context_window) * p.embed_dim;
  if (p.embedding.size() != static_cast<size_t>(p.vocab_size) * p.embed_dim ||
      p.output.size() != cd * p.vocab_size || p.bias.size() != static_cast<size_t>(p.vocab_size)) {
    throw Error(ErrorCode::kMalformedResponse, "parameter shapes disagree with header");
  }
  return model;
}

void ToyModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << to_json().dump() << "\n";
}

ToyModel ToyModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, std::string("bad parameter file: ") + e.what());
  }
  return from_json(j);
}

}  // namespace reverse
