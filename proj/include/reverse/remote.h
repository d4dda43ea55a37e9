#ifndef REVERSE_REMOTE_H_
#define REVERSE_REMOTE_H_

#include <memory>
#include <string>

#include "reverse/backend.h"

namespace reverse {

struct RemoteConfig {
  std::string host = "127.0.0.1";
  int port = 0;
  int timeout_ms = 2000;
  int retries = 2;          // exponential backoff between attempts
  int backoff_base_ms = 50;
  std::string need = "full";  // or "special+topk"
  int top_k = 10;             // only sent for special+topk
};

/// Client for the /v1/distribution wire protocol. Each call POSTs
/// {"context": [tokens], "need": [<need>], "k": int} and rebuilds a full
/// vocabulary-indexed distribution from the returned {"probs": {token: p}}
/// map: named tokens keep their probabilities and any missing mass is spread
/// uniformly over the unnamed vocabulary entries. Responses lacking any of
/// the three markers or the terminator are rejected outright — detection is
/// impossible without P(</UN>).
class RemoteBackend : public DistributionBackend {
 public:
  RemoteBackend(Vocabulary vocab, RemoteConfig config);
  RemoteBackend(RemoteBackend&&) noexcept;
  ~RemoteBackend() override;

  /// Fetches the vocabulary from GET /v1/vocab, then constructs the client.
  static RemoteBackend connect(const RemoteConfig& config);

  const Vocabulary& vocab() const override { return vocab_; }
  Distribution next_distribution(const std::vector<std::string>& context) override;

  /// Builds the vocabulary-indexed distribution from a response `probs` map.
  /// Exposed for tests of the renormalization rule.
  static Distribution distribution_from_probs(const Vocabulary& vocab,
                                              const nlohmann::json& probs);

 private:
  Vocabulary vocab_;
  RemoteConfig config_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace reverse

#endif  // REVERSE_REMOTE_H_
