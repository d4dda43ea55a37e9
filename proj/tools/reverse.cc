// Command-line front end: curate -> train -> decode -> eval, plus the
// loopback reference server and the threshold sweep.
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "reverse/curation.h"
#include "reverse/decode.h"
#include "reverse/error.h"
#include "reverse/metrics.h"
#include "reverse/model.h"
#include "reverse/pipeline.h"
#include "reverse/remote.h"
#include "reverse/rng.h"
#include "reverse/server.h"
#include "reverse/tokens.h"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Flag values start unset so the merge can tell "flag given" from "default":
// flags > config file > built-in defaults.
struct CommonOptions {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<double> tau;
  std::optional<int> max_corrections;
  std::optional<int> local_attempts;
  std::optional<double> temp_base;
  std::optional<double> temp_step;
  std::optional<int> max_length;
  bool baseline = false;
  std::string trace_path;
  std::string endpoint;

  json file = json::object();  // parsed config file

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (env REVERSE_CONFIG as fallback)");
    cmd->add_option("--seed", seed, "master seed (mandatory, here or in the config file)");
    cmd->add_option("--tau", tau, "detection threshold on P(</UN>)");
    cmd->add_option("--max-corrections", max_corrections, "total correction budget N");
    cmd->add_option("--local-attempts", local_attempts, "consecutive local attempts K");
    cmd->add_option("--temp-base", temp_base, "base sampling temperature (0 = greedy)");
    cmd->add_option("--temp-step", temp_step, "temperature increment per attempt");
    cmd->add_option("--max-length", max_length, "generation length cap");
    cmd->add_flag("--baseline", baseline, "disable correction: N=0 and greedy sampling");
    cmd->add_option("--trace", trace_path, "write decode events as JSON lines");
    cmd->add_option("--endpoint", endpoint, "remote backend host:port instead of --params");
  }

  void load_file() {
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("REVERSE_CONFIG")) path = env;
    }
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw reverse::Error(reverse::ErrorCode::kIoError, "cannot read config " + path);
    in >> file;
  }

  template <typename T>
  T merged(const std::optional<T>& flag, const char* key, T fallback) const {
    if (flag) return *flag;
    if (file.contains(key)) return file.at(key).get<T>();
    return fallback;
  }

  uint64_t require_seed() const {
    if (seed) return *seed;
    if (file.contains("seed")) return file.at("seed").get<uint64_t>();
    throw reverse::Error(reverse::ErrorCode::kInvalidArgument,
                         "a seed is mandatory: pass --seed or set \"seed\" in the config file");
  }

  reverse::DecodeConfig decode_config() const {
    reverse::DecodeConfig config;
    config.tau = merged(tau, "tau", 0.003);
    config.max_total_corrections = merged(max_corrections, "max_corrections", 50);
    config.max_local_attempts = merged(local_attempts, "local_attempts", 10);
    config.base_temperature = merged(temp_base, "temp_base", 1.0);
    config.temperature_step = merged(temp_step, "temp_step", 0.1);
    config.max_length = merged(max_length, "max_length", 256);
    config.seed = require_seed();
    if (baseline) {
      config.max_total_corrections = 0;
      config.base_temperature = 0.0;
    }
    config.validate();
    return config;
  }

  ordered_json echo(const std::string& command, const reverse::DecodeConfig& d) const {
    ordered_json j;
    j["command"] = command;
    j["seed"] = require_seed();
    j["tau"] = d.tau;
    j["max_corrections"] = d.max_total_corrections;
    j["local_attempts"] = d.max_local_attempts;
    j["temp_base"] = d.base_temperature;
    j["temp_step"] = d.temperature_step;
    j["max_length"] = d.max_length;
    j["baseline"] = baseline;
    return j;
  }
};

void write_header(std::ostream& out, const ordered_json& config_echo) {
  ordered_json header;
  header["reverse_config"] = config_echo;
  out << header.dump() << "\n";
}

// JSONL readers tolerate (and skip) the config-echo header line.
std::string body_skipping_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw reverse::Error(reverse::ErrorCode::kIoError, "cannot read " + path);
  std::string out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (first) {
      first = false;
      try {
        auto j = json::parse(line);
        if (j.is_object() && j.contains("reverse_config")) continue;
      } catch (const json::exception&) {
      }
    }
    out += line;
    out += '\n';
  }
  return out;
}

std::vector<std::string> load_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw reverse::Error(reverse::ErrorCode::kIoError, "cannot read " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  return words;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw reverse::Error(reverse::ErrorCode::kIoError, "cannot write " + path);
  return out;
}

// ---------------------------------------------------------------- curate

int cmd_curate(CommonOptions& opts, const std::string& input, const std::string& output,
               const std::string& stats_path, const std::string& dict_path,
               const std::string& skiplist_path, std::optional<double> hint_rate,
               std::optional<int> radius) {
  reverse::CurationConfig config;
  config.seed = opts.require_seed();
  config.hint_rate = hint_rate ? *hint_rate : opts.file.value("hint_rate", 0.2);
  config.number_perturb_radius = radius ? *radius : opts.file.value("number_perturb_radius", 3);
  config.validate();

  reverse::PhraseDictionary dict = reverse::PhraseDictionary::load(dict_path);
  reverse::SkipList skiplist =
      skiplist_path.empty() ? reverse::SkipList() : reverse::SkipList::load(skiplist_path);

  std::ifstream in(input);
  if (!in) throw reverse::Error(reverse::ErrorCode::kIoError, "cannot read " + input);
  std::vector<reverse::RawSample> raws;
  int line_no = 0;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      if (first && j.is_object() && j.contains("reverse_config")) {
        first = false;
        continue;
      }
      first = false;
      raws.push_back(reverse::RawSample::from_json(j));
    } catch (const std::exception& e) {
      std::cerr << "curate: line " << line_no << ": " << e.what() << "\n";
      return 2;
    }
  }

  auto result = reverse::run_curation(raws, dict, skiplist, config);

  ordered_json echo;
  echo["command"] = "curate";
  echo["seed"] = config.seed;
  echo["hint_rate"] = config.hint_rate;
  echo["number_perturb_radius"] = config.number_perturb_radius;

  auto out = open_output(output);
  write_header(out, echo);
  auto stats = reverse::emit_dataset(result.samples, out, skiplist, config.seed);

  ordered_json stats_json;
  stats_json["reverse_config"] = echo;
  stats_json["stats"] = stats.to_json();
  stats_json["negatives_skipped"] = result.negatives_skipped;
  if (stats_path.empty()) {
    std::cout << stats_json.dump(2) << "\n";
  } else {
    open_output(stats_path) << stats_json.dump(2) << "\n";
  }
  return 0;
}

// ----------------------------------------------------------------- train

int cmd_train(CommonOptions& opts, const std::string& input, const std::string& params_path,
              std::optional<double> lr, std::optional<int> epochs, std::optional<int> window,
              std::optional<int> embed_dim, std::optional<double> init_scale,
              const std::string& trajectory_path) {
  reverse::TrainConfig config;
  config.seed = opts.require_seed();
  config.learning_rate = lr ? *lr : opts.file.value("learning_rate", 0.5);
  config.epochs = epochs ? *epochs : opts.file.value("epochs", 200);
  config.context_window = window ? *window : opts.file.value("context_window", 6);
  config.embed_dim = embed_dim ? *embed_dim : opts.file.value("embed_dim", 6);
  config.init_scale = init_scale ? *init_scale : opts.file.value("init_scale", 0.1);

  std::stringstream body(body_skipping_header(input));
  auto samples = reverse::load_dataset(body);

  // vocabulary = every token seen in questions and answers
  std::vector<std::string> content;
  for (const auto& s : samples) {
    for (const auto& tok : s.question) content.push_back(tok);
    for (const auto& tok : s.answer.tokens) content.push_back(tok);
  }
  reverse::Vocabulary vocab(content);

  std::vector<reverse::TrainingPair> corpus;
  corpus.reserve(samples.size());
  for (const auto& s : samples) {
    corpus.push_back(reverse::make_training_pair(s.question, s.answer));
  }

  auto result = reverse::train(vocab, corpus, config);
  result.model.save(params_path);

  ordered_json echo;
  echo["command"] = "train";
  echo["seed"] = config.seed;
  echo["learning_rate"] = config.learning_rate;
  echo["epochs"] = config.epochs;
  echo["context_window"] = config.context_window;
  echo["embed_dim"] = config.embed_dim;
  echo["init_scale"] = config.init_scale;

  ordered_json report;
  report["reverse_config"] = echo;
  report["samples"] = samples.size();
  report["vocab_size"] = vocab.size();
  if (!result.loss_trajectory.empty()) {
    report["initial_loss"] = result.loss_trajectory.front();
    report["final_loss"] = result.loss_trajectory.back();
  }
  if (trajectory_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    report["trajectory"] = result.loss_trajectory;
    open_output(trajectory_path) << report.dump(2) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- decode

std::unique_ptr<reverse::DistributionBackend> make_backend(const std::string& params_path,
                                                           const std::string& endpoint) {
  if (!endpoint.empty()) {
    reverse::RemoteConfig rconfig;
    std::string hostport = endpoint;
    if (hostport.rfind("http://", 0) == 0) hostport = hostport.substr(7);
    auto colon = hostport.rfind(':');
    if (colon == std::string::npos) {
      throw reverse::Error(reverse::ErrorCode::kInvalidArgument,
                           "endpoint must be host:port, got " + endpoint);
    }
    rconfig.host = hostport.substr(0, colon);
    rconfig.port = std::stoi(hostport.substr(colon + 1));
    return std::make_unique<reverse::RemoteBackend>(reverse::RemoteBackend::connect(rconfig));
  }
  if (params_path.empty()) {
    throw reverse::Error(reverse::ErrorCode::kInvalidArgument,
                         "decode needs --params or --endpoint");
  }
  return std::make_unique<reverse::ToyModelBackend>(reverse::ToyModel::load(params_path));
}

int cmd_decode(CommonOptions& opts, const std::string& prompts_path, const std::string& output,
               const std::string& params_path, bool open_ended) {
  reverse::DecodeConfig base = opts.decode_config();
  uint64_t master_seed = opts.require_seed();

  std::stringstream body(body_skipping_header(prompts_path));
  auto tasks = reverse::load_prompt_tasks(body);

  auto backend = make_backend(params_path, opts.endpoint);

  std::ofstream trace_file;
  reverse::TraceSink sink;
  if (!opts.trace_path.empty()) {
    trace_file = open_output(opts.trace_path);
    write_header(trace_file, opts.echo(open_ended ? "decode --open-ended" : "decode", base));
    sink = [&trace_file](const ordered_json& ev) { trace_file << ev.dump() << "\n"; };
  }

  auto out = open_output(output);
  write_header(out, opts.echo(open_ended ? "decode --open-ended" : "decode", base));

  int failures = 0;
  for (size_t i = 0; i < tasks.size(); ++i) {
    reverse::DecodeConfig config = base;
    config.seed = reverse::derive_stream_seed(master_seed, "decode/" + std::to_string(i));
    ordered_json line;
    line["id"] = tasks[i].id;
    try {
      reverse::DecodeOutcome outcome =
          open_ended ? reverse::decode_open_ended(tasks[i].question, *backend, config, sink)
                     : reverse::decode(tasks[i].question, *backend, config, sink);
      line["outcome"] = outcome.to_json();
    } catch (const reverse::Error& e) {
      line["error"] = e.what();
      ++failures;
    }
    out << line.dump() << "\n";
  }
  if (failures > 0) {
    std::cerr << "decode: " << failures << " prompt(s) failed\n";
    return 1;
  }
  return 0;
}

// ------------------------------------------------------------------ eval

int cmd_eval(CommonOptions& opts, const std::string& input, const std::string& objects_path,
             const std::string& report_path, const std::string& singular_path, int rounds) {
  uint64_t seed = opts.require_seed();

  std::stringstream body(body_skipping_header(input));
  auto records = reverse::load_caption_records(body);

  reverse::ObjectNormalizer normalizer;
  if (!singular_path.empty()) {
    std::ifstream sin(singular_path);
    if (!sin) throw reverse::Error(reverse::ErrorCode::kIoError, "cannot read " + singular_path);
    json j;
    sin >> j;
    normalizer = reverse::ObjectNormalizer(j.get<std::map<std::string, std::string>>());
  }

  if (!objects_path.empty()) {
    auto dictionary = load_word_list(objects_path);
    for (auto& r : records) {
      if (r.mentioned.empty() && !r.caption.empty()) {
        r.mentioned = reverse::extract_objects(r.caption, dictionary, normalizer);
      }
    }
  }
  for (auto& r : records) {
    std::set<std::string> annotated;
    for (const auto& a : r.annotated) annotated.insert(normalizer.normalize(a));
    r.annotated = std::move(annotated);
    std::set<std::string> targets;
    for (const auto& h : r.hallucinatory_targets) targets.insert(normalizer.normalize(h));
    r.hallucinatory_targets = std::move(targets);
  }

  auto report = reverse::evaluate_corpus(records, rounds, seed);
  ordered_json echo;
  echo["command"] = "eval";
  echo["seed"] = seed;
  echo["bootstrap_rounds"] = rounds;
  ordered_json out_json;
  out_json["reverse_config"] = echo;
  out_json["report"] = report.to_json();
  if (report_path.empty()) {
    std::cout << out_json.dump(2) << "\n";
  } else {
    open_output(report_path) << out_json.dump(2) << "\n";
  }
  std::cout << report.to_table();
  return 0;
}

// ----------------------------------------------------------------- serve

int cmd_serve(const std::string& params_path, int port) {
  reverse::ReferenceServer server(reverse::ToyModel::load(params_path));
  int bound = server.start(port);
  std::cout << "serving /v1/distribution on 127.0.0.1:" << bound << "\n" << std::flush;
  while (true) std::this_thread::sleep_for(std::chrono::seconds(1));
  return 0;
}

// ----------------------------------------------------------------- sweep

int cmd_sweep(CommonOptions& opts, const std::string& prompts_path,
              const std::string& params_path, const std::string& objects_path,
              std::vector<double> taus, const std::string& output) {
  reverse::DecodeConfig base = opts.decode_config();
  uint64_t master_seed = opts.require_seed();

  std::stringstream body(body_skipping_header(prompts_path));
  auto tasks = reverse::load_prompt_tasks(body);

  auto backend = make_backend(params_path, opts.endpoint);
  auto dictionary = load_word_list(objects_path);

  auto rows = reverse::sweep_thresholds(tasks, *backend, base, taus, dictionary, master_seed);

  ordered_json out_json;
  out_json["reverse_config"] = opts.echo("sweep", base);
  auto rows_json = ordered_json::array();
  for (const auto& row : rows) rows_json.push_back(row.to_json());
  out_json["rows"] = rows_json;
  if (output.empty()) {
    std::cout << out_json.dump(2) << "\n";
  } else {
    open_output(output) << out_json.dump(2) << "\n";
  }
  std::cout << reverse::sweep_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hallucination-aware training and retrospective-resampling decoding"};
  app.require_subcommand(1);

  CommonOptions opts;

  auto* curate = app.add_subcommand("curate", "build the annotated dataset from raw QA pairs");
  std::string cur_input, cur_output, cur_stats, cur_dict, cur_skiplist;
  std::optional<double> cur_hint_rate;
  std::optional<int> cur_radius;
  curate->add_option("--input", cur_input, "raw positive samples (JSONL)")->required();
  curate->add_option("--output", cur_output, "curated dataset (JSONL)")->required();
  curate->add_option("--stats", cur_stats, "composition stats (JSON, default stdout)");
  curate->add_option("--phrase-dict", cur_dict, "noun-phrase dictionary (JSON)")->required();
  curate->add_option("--skip-list", cur_skiplist, "newline-delimited skip list (default built-in)");
  curate->add_option("--hint-rate", cur_hint_rate, "hint injection probability (default 0.2)");
  curate->add_option("--number-radius", cur_radius, "counting perturbation radius (default 3)");
  opts.add_flags(curate);

  auto* train_cmd = app.add_subcommand("train", "fit the toy model with the masked loss");
  std::string tr_input, tr_params, tr_trajectory;
  std::optional<double> tr_lr, tr_init;
  std::optional<int> tr_epochs, tr_window, tr_dim;
  train_cmd->add_option("--input", tr_input, "curated dataset (JSONL)")->required();
  train_cmd->add_option("--params", tr_params, "output parameter file")->required();
  train_cmd->add_option("--lr", tr_lr, "learning rate (default 0.5)");
  train_cmd->add_option("--epochs", tr_epochs, "full-batch steps (default 200)");
  train_cmd->add_option("--context-window", tr_window, "context window c (default 6)");
  train_cmd->add_option("--embed-dim", tr_dim, "embedding width d (default 6)");
  train_cmd->add_option("--init-scale", tr_init, "uniform init scale (default 0.1)");
  train_cmd->add_option("--trajectory", tr_trajectory, "write the loss trajectory (JSON)");
  opts.add_flags(train_cmd);

  auto* decode_cmd = app.add_subcommand("decode", "retrospective-resampling generation");
  std::string de_prompts, de_output, de_params;
  bool de_open_ended = false;
  decode_cmd->add_option("--prompts", de_prompts, "prompt tasks (JSONL)")->required();
  decode_cmd->add_option("--output", de_output, "decode outcomes (JSONL)")->required();
  decode_cmd->add_option("--params", de_params, "toy model parameter file");
  decode_cmd->add_flag("--open-ended", de_open_ended,
                       "two-stage handling of unanswerable questions");
  opts.add_flags(decode_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "hallucination metrics over captions");
  std::string ev_input, ev_objects, ev_report, ev_singular;
  int ev_rounds = 100;
  eval_cmd->add_option("--input", ev_input, "caption records (JSONL)")->required();
  eval_cmd->add_option("--objects", ev_objects, "object dictionary (newline-delimited)");
  eval_cmd->add_option("--report", ev_report, "metric report (JSON, default stdout)");
  eval_cmd->add_option("--singular", ev_singular, "plural->singular map (JSON)");
  eval_cmd->add_option("--rounds", ev_rounds, "bootstrap rounds (default 100)");
  opts.add_flags(eval_cmd);

  auto* serve_cmd = app.add_subcommand("serve", "loopback /v1/distribution server");
  std::string sv_params;
  int sv_port = 0;
  serve_cmd->add_option("--params", sv_params, "toy model parameter file")->required();
  serve_cmd->add_option("--port", sv_port, "port (0 picks an ephemeral one)");

  auto* sweep_cmd = app.add_subcommand("sweep", "decode+eval over a tau grid");
  std::string sw_prompts, sw_params, sw_objects, sw_output;
  std::vector<double> sw_taus;
  sweep_cmd->add_option("--prompts", sw_prompts, "prompt tasks with ground truth (JSONL)")
      ->required();
  sweep_cmd->add_option("--params", sw_params, "toy model parameter file");
  sweep_cmd->add_option("--objects", sw_objects, "object dictionary")->required();
  sweep_cmd->add_option("--taus", sw_taus, "thresholds to sweep")->required()->delimiter(',');
  sweep_cmd->add_option("--output", sw_output, "sweep rows (JSON, default stdout)");
  opts.add_flags(sweep_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    opts.load_file();
    if (curate->parsed()) {
      return cmd_curate(opts, cur_input, cur_output, cur_stats, cur_dict, cur_skiplist,
                        cur_hint_rate, cur_radius);
    }
    if (train_cmd->parsed()) {
      return cmd_train(opts, tr_input, tr_params, tr_lr, tr_epochs, tr_window, tr_dim, tr_init,
                       tr_trajectory);
    }
    if (decode_cmd->parsed()) {
      return cmd_decode(opts, de_prompts, de_output, de_params, de_open_ended);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(opts, ev_input, ev_objects, ev_report, ev_singular, ev_rounds);
    }
    if (serve_cmd->parsed()) {
      return cmd_serve(sv_params, sv_port);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(opts, sw_prompts, sw_params, sw_objects, sw_taus, sw_output);
    }
  } catch (const reverse::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == reverse::ErrorCode::kInvalidSample ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
