#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "reverse/error.h"
#include "reverse/model.h"
#include "reverse/rng.h"
#include "reverse/tokens.h"

using namespace reverse;

namespace {

ToyModel make_model(const std::vector<std::string>& content, int c, int d, uint64_t seed,
                    double scale) {
  Vocabulary vocab(content);
  ToyModel model{vocab, ModelParams::zeros(c, d, vocab.size())};
  if (scale > 0.0) {
    Rng rng(seed);
    for (double& v : model.params.embedding) v = (rng.uniform() * 2 - 1) * scale;
    for (double& v : model.params.output) v = (rng.uniform() * 2 - 1) * scale;
    for (double& v : model.params.bias) v = (rng.uniform() * 2 - 1) * scale;
  }
  return model;
}

double entropy(const Distribution& dist) {
  double h = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// Central finite differences over every parameter coordinate.
double fd_relative_error(ToyModel model, const std::vector<TrainingPair>& batch) {
  const double h = 1e-5;
  GradientResult analytic = gradient(model, batch);
  auto mean_loss = [&batch](const ToyModel& m) {
    double total = 0.0;
    for (const auto& pair : batch) total += masked_nll(m, pair);
    return total / static_cast<double>(batch.size());
  };
  double max_rel = 0.0;
  auto check_block = [&](std::vector<double>& values, const std::vector<double>& grads) {
    for (size_t i = 0; i < values.size(); ++i) {
      double saved = values[i];
      values[i] = saved + h;
      double up = mean_loss(model);
      values[i] = saved - h;
      double down = mean_loss(model);
      values[i] = saved;
      double fd = (up - down) / (2 * h);
      double denom = std::max({std::fabs(fd), std::fabs(grads[i]), 1e-8});
      max_rel = std::max(max_rel, std::fabs(fd - grads[i]) / denom);
    }
  };
  check_block(model.params.embedding, analytic.grads.embedding);
  check_block(model.params.output, analytic.grads.output);
  check_block(model.params.bias, analytic.grads.bias);
  return max_rel;
}

}  // namespace

TEST_CASE("zero-initialized model is uniform") {
  auto model = make_model({"a", "b"}, 2, 3, 0, 0.0);
  auto dist = forward(model, {}, 1.0);
  for (double p : dist.probs) CHECK(p == doctest::Approx(1.0 / model.vocab.size()).epsilon(1e-12));
}

TEST_CASE("large temperature flattens the distribution") {
  auto model = make_model({"a", "b", "c"}, 2, 3, 11, 0.5);
  std::vector<int> ctx = {model.vocab.index("a")};
  auto dist = forward(model, ctx, 1e4);
  double lo = 1.0, hi = 0.0;
  for (double p : dist.probs) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  CHECK(hi - lo < 1e-3);
}

TEST_CASE("temperature preserves the argmax and raises entropy") {
  auto model = make_model({"a", "b", "c", "d"}, 2, 3, 13, 0.8);
  std::vector<int> ctx = {model.vocab.index("b"), model.vocab.index("c")};
  auto t1 = forward(model, ctx, 1.0);
  auto t2 = forward(model, ctx, 2.0);
  auto argmax = [](const Distribution& d) {
    size_t best = 0;
    for (size_t i = 1; i < d.probs.size(); ++i) {
      if (d.probs[i] > d.probs[best]) best = i;
    }
    return best;
  };
  CHECK(argmax(t1) == argmax(t2));
  CHECK(entropy(t2) > entropy(t1));
}

TEST_CASE("forward rejects non-positive temperature") {
  auto model = make_model({"a"}, 1, 2, 0, 0.0);
  try {
    forward(model, {}, 0.0);
    FAIL("expected TemperatureNonPositive");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTemperatureNonPositive);
  }
}

TEST_CASE("masked loss equals unmasked loss on confident targets") {
  auto model = make_model({"a", "cat", "dog", "sits"}, 3, 3, 17, 0.3);
  TrainingPair pair = make_training_pair(split_tokens("a cat"),
                                         parse_spans(split_tokens("a <SPAN> dog </CN> sits .")),
                                         /*append_terminator=*/false);
  // independent unmasked NLL, summed term by term
  double expected = 0.0;
  std::vector<int> ctx = model.vocab.encode(pair.input);
  for (const auto& tok : pair.target.tokens) {
    auto dist = forward(model, ctx, 1.0);
    int idx = model.vocab.index(tok);
    expected -= std::log(dist.probs[static_cast<size_t>(idx)]);
    ctx.push_back(idx);
  }
  CHECK(masked_nll(model, pair) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("uniform model loss is 4 ln 10 on four unmasked tokens") {
  // V = 10: pad, three markers, terminator, three punctuation marks, two words
  auto model = make_model({"x", "y"}, 2, 3, 0, 0.0);
  REQUIRE(model.vocab.size() == 10);
  TrainingPair pair = make_training_pair(split_tokens("x"),
                                         parse_spans(split_tokens("x y x .")),
                                         /*append_terminator=*/false);
  CHECK(masked_nll(model, pair) == doctest::Approx(4.0 * std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("masked positions are skipped term by term") {
  auto model = make_model({"a", "x"}, 2, 3, 19, 0.4);
  TrainingPair pair = make_training_pair(split_tokens("a"),
                                         parse_spans(split_tokens("a <SPAN> x </UN>")),
                                         /*append_terminator=*/false);
  // hand evaluation against the mask [1,1,0,1]
  std::vector<int> ctx = model.vocab.encode(pair.input);
  double expected = 0.0;
  std::vector<uint8_t> mask = {1, 1, 0, 1};
  for (size_t i = 0; i < pair.target.tokens.size(); ++i) {
    int idx = model.vocab.index(pair.target.tokens[i]);
    if (mask[i]) {
      auto dist = forward(model, ctx, 1.0);
      expected -= std::log(dist.probs[static_cast<size_t>(idx)]);
    }
    ctx.push_back(idx);
  }
  CHECK(masked_nll(model, pair) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradient matches finite differences on random batches") {
  for (uint64_t seed : {7ULL, 8ULL, 9ULL}) {
    auto model = make_model({"cat", "dog", "sits"}, 2, 3, seed, 0.5);
    std::vector<TrainingPair> batch = {
        make_training_pair(split_tokens("cat"),
                           parse_spans(split_tokens("<SPAN> dog </UN>")), false),
        make_training_pair(split_tokens("dog sits"),
                           parse_spans(split_tokens("cat sits ."))),
    };
    CHECK(fd_relative_error(model, batch) < 1e-4);
  }
}

TEST_CASE("gradient agrees with finite differences when content is masked") {
  auto model = make_model({"cat", "dog"}, 2, 3, 23, 0.3);
  // every content target masked; only the markers carry weight
  std::vector<TrainingPair> batch = {make_training_pair(
      split_tokens("cat"), parse_spans(split_tokens("<SPAN> dog </UN>")), false)};
  CHECK(fd_relative_error(model, batch) < 1e-4);
}

TEST_CASE("duplicated sample leaves the mean gradient unchanged") {
  auto model = make_model({"cat", "dog"}, 2, 3, 29, 0.4);
  TrainingPair pair = make_training_pair(split_tokens("cat"),
                                         parse_spans(split_tokens("dog cat .")));
  auto single = gradient(model, {pair});
  auto doubled = gradient(model, {pair, pair});
  for (size_t i = 0; i < single.grads.output.size(); ++i) {
    CHECK(single.grads.output[i] == doctest::Approx(doubled.grads.output[i]).epsilon(1e-12));
  }
  CHECK(single.mean_loss == doctest::Approx(doubled.mean_loss).epsilon(1e-12));
}

TEST_CASE("training reduces the loss on a small corpus") {
  Rng rng(31);
  std::vector<std::string> objects = {"cat", "dog", "tree", "car", "bird"};
  Vocabulary vocab(objects);
  std::vector<TrainingPair> corpus;
  for (int i = 0; i < 50; ++i) {
    const auto& obj = objects[static_cast<size_t>(rng.uniform_int(0, 4))];
    corpus.push_back(make_training_pair(
        split_tokens("show " + obj),
        parse_spans(split_tokens("<SPAN> " + obj + " </CN> ."))));
  }
  // "show" is out of vocabulary on purpose: it maps to pad and the model
  // still trains on the remaining context.
  TrainConfig config;
  config.learning_rate = 0.5;
  config.epochs = 200;
  config.seed = 5;
  config.context_window = 3;
  config.embed_dim = 4;
  auto result = train(vocab, corpus, config);
  REQUIRE(result.loss_trajectory.size() == 200);
  CHECK(result.loss_trajectory.back() < result.loss_trajectory.front());
}

TEST_CASE("training teaches the unconfident close after a trap context") {
  // "the ghost" always precedes an unconfident close; unrelated contexts
  // never do.
  Vocabulary vocab({"the", "ghost", "cat", "sits", "look"});
  std::vector<TrainingPair> corpus;
  for (int i = 0; i < 8; ++i) {
    corpus.push_back(make_training_pair(
        split_tokens("look"), parse_spans(split_tokens("<SPAN> the ghost </UN>")), false));
    corpus.push_back(make_training_pair(
        split_tokens("look"), parse_spans(split_tokens("<SPAN> the cat </CN> sits ."))));
  }
  TrainConfig config;
  config.learning_rate = 0.8;
  config.epochs = 300;
  config.seed = 7;
  config.context_window = 3;
  config.embed_dim = 4;
  auto result = train(vocab, corpus, config);

  auto after_ghost = forward(result.model, vocab.encode(split_tokens("<SPAN> the ghost")), 1.0);
  double p_un_ghost = after_ghost.probs[static_cast<size_t>(vocab.unconfident_close_index())];

  // marginal P(</UN>) over all training positions
  double marginal = 0.0;
  int positions = 0;
  for (const auto& pair : corpus) {
    std::vector<int> ctx = vocab.encode(pair.input);
    for (const auto& tok : pair.target.tokens) {
      auto dist = forward(result.model, ctx, 1.0);
      marginal += dist.probs[static_cast<size_t>(vocab.unconfident_close_index())];
      ++positions;
      ctx.push_back(vocab.index(tok));
    }
  }
  marginal /= positions;
  CHECK(p_un_ghost > marginal);
  CHECK(p_un_ghost > 0.5);
}

TEST_CASE("bias-only training is non-increasing at a small learning rate") {
  // c = 0 makes the loss convex in the parameters (softmax regression on a
  // constant feature), so full-batch descent must never increase it.
  Vocabulary vocab({"cat", "dog", "tree"});
  std::vector<TrainingPair> corpus;
  for (int i = 0; i < 20; ++i) {
    corpus.push_back(make_training_pair(
        {}, parse_spans(split_tokens(i % 2 ? "cat ." : "dog tree ."))));
  }
  TrainConfig config;
  config.learning_rate = 0.2;
  config.epochs = 150;
  config.seed = 41;
  config.context_window = 0;
  config.embed_dim = 1;
  auto result = train(vocab, corpus, config);
  for (size_t i = 1; i < result.loss_trajectory.size(); ++i) {
    CHECK(result.loss_trajectory[i] <= result.loss_trajectory[i - 1] + 1e-12);
  }
}

TEST_CASE("zero epochs returns the initialization unchanged") {
  Vocabulary vocab({"a"});
  std::vector<TrainingPair> corpus = {
      make_training_pair(split_tokens("a"), parse_spans(split_tokens("a .")))};
  TrainConfig config;
  config.epochs = 0;
  config.seed = 3;
  auto result = train(vocab, corpus, config);
  CHECK(result.loss_trajectory.empty());

  // identical to a fresh initialization with the same seed
  auto again = train(vocab, corpus, config);
  CHECK(result.model.params.embedding == again.model.params.embedding);
  CHECK(result.model.params.output == again.model.params.output);
  CHECK(result.model.params.bias == again.model.params.bias);
}

TEST_CASE("model params survive a save/load round trip") {
  auto model = make_model({"cat", "dog"}, 2, 3, 37, 0.5);
  std::string path = "test_model_params.json";
  model.save(path);
  auto loaded = ToyModel::load(path);
  CHECK(loaded.params.embedding == model.params.embedding);
  CHECK(loaded.params.output == model.params.output);
  CHECK(loaded.params.bias == model.params.bias);
  CHECK(loaded.vocab.tokens() == model.vocab.tokens());
  std::remove(path.c_str());
}

TEST_CASE("loading a corrupt params file fails cleanly") {
  std::string path = "test_model_bad.json";
  {
    FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("{\"magic\":\"something-else\"}", f);
    std::fclose(f);
  }
  try {
    ToyModel::load(path);
    FAIL("expected MalformedResponse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedResponse);
  }
  std::remove(path.c_str());
}
