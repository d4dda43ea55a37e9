#include "reverse/remote.h"

#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "reverse/error.h"

namespace reverse {

struct RemoteBackend::Impl {
  httplib::Client client;

  Impl(const std::string& host, int port, int timeout_ms) : client(host, port) {
    client.set_connection_timeout(0, timeout_ms * 1000);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  }
};

RemoteBackend::RemoteBackend(Vocabulary vocab, RemoteConfig config)
    : vocab_(std::move(vocab)),
      config_(std::move(config)),
      impl_(std::make_unique<Impl>(config_.host, config_.port, config_.timeout_ms)) {}

RemoteBackend::RemoteBackend(RemoteBackend&&) noexcept = default;
RemoteBackend::~RemoteBackend() = default;

namespace {

nlohmann::json request_with_retries(httplib::Client& client, const RemoteConfig& config,
                                    const std::string& body) {
  int attempts = config.retries + 1;
  httplib::Error last_error = httplib::Error::Success;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config.backoff_base_ms * (1 << (attempt - 1))));
    }
    auto res = client.Post("/v1/distribution", body, "application/json");
    if (!res) {
      last_error = res.error();
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kMalformedResponse,
                  "server returned status " + std::to_string(res->status));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedResponse, std::string("bad response body: ") + e.what());
    }
  }
  if (last_error == httplib::Error::ConnectionTimeout || last_error == httplib::Error::Read ||
      last_error == httplib::Error::Write) {
    throw Error(ErrorCode::kTimeout, "distribution request timed out");
  }
  throw Error(ErrorCode::kBackendFailure,
              "distribution request failed: " + httplib::to_string(last_error));
}

}  // namespace

Distribution RemoteBackend::distribution_from_probs(const Vocabulary& vocab,
                                                    const nlohmann::json& probs) {
  if (!probs.is_object()) {
    throw Error(ErrorCode::kMalformedResponse, "'probs' must be an object");
  }
  for (std::string_view required :
       {kSpanOpen, kConfidentClose, kUnconfidentClose, kTerminator}) {
    if (!probs.contains(std::string(required))) {
      throw Error(ErrorCode::kMissingSpecialTokenProbs,
                  "response omits P(" + std::string(required) + ")");
    }
  }
  Distribution dist;
  dist.probs.assign(static_cast<size_t>(vocab.size()), -1.0);
  double named_mass = 0.0;
  int named = 0;
  for (const auto& [token, value] : probs.items()) {
    if (!vocab.contains(token)) continue;  // unknown tokens carry no index here
    double p = value.get<double>();
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::kMalformedResponse, "negative or non-finite probability");
    }
    int idx = vocab.index(token);
    if (dist.probs[static_cast<size_t>(idx)] < 0.0) ++named;
    dist.probs[static_cast<size_t>(idx)] = p;
    named_mass += p;
  }
  int unnamed = vocab.size() - named;
  double leftover = 1.0 - named_mass;
  if (leftover < -1e-9) {
    throw Error(ErrorCode::kMalformedResponse, "named probabilities exceed 1");
  }
  if (unnamed == 0) {
    if (std::fabs(leftover) > 1e-9) {
      throw Error(ErrorCode::kMalformedResponse, "full response does not sum to 1");
    }
    for (double& p : dist.probs) {
      if (p < 0.0) p = 0.0;
    }
  } else {
    double fill = std::max(leftover, 0.0) / static_cast<double>(unnamed);
    for (double& p : dist.probs) {
      if (p < 0.0) p = fill;
    }
  }
  dist.validate();
  return dist;
}

Distribution RemoteBackend::next_distribution(const std::vector<std::string>& context) {
  nlohmann::ordered_json request;
  request["context"] = context;
  request["need"] = nlohmann::ordered_json::array({config_.need});
  request["k"] = config_.top_k;
  nlohmann::json response = request_with_retries(impl_->client, config_, request.dump());
  if (!response.is_object() || !response.contains("probs")) {
    throw Error(ErrorCode::kMalformedResponse, "response lacks 'probs'");
  }
  return distribution_from_probs(vocab_, response.at("probs"));
}

RemoteBackend RemoteBackend::connect(const RemoteConfig& config) {
  httplib::Client client(config.host, config.port);
  client.set_connection_timeout(0, config.timeout_ms * 1000);
  auto res = client.Get("/v1/vocab");
  if (!res) {
    throw Error(ErrorCode::kBackendFailure,
                "cannot fetch vocabulary: " + httplib::to_string(res.error()));
  }
  try {
    auto j = nlohmann::json::parse(res->body);
    auto tokens = j.at("tokens").get<std::vector<std::string>>();
    Vocabulary vocab(tokens);
    if (vocab.tokens() != tokens) {
      throw Error(ErrorCode::kMalformedResponse, "served vocabulary is not in canonical order");
    }
    return RemoteBackend(std::move(vocab), config);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, std::string("bad vocab response: ") + e.what());
  }
}

}  // namespace reverse
