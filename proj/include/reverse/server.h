#ifndef REVERSE_SERVER_H_
#define REVERSE_SERVER_H_

#include <memory>
#include <string>

#include "reverse/model.h"

namespace reverse {

/// Loopback reference server binding a toy model to the /v1/distribution
/// protocol, so the remote client is testable end to end in-process.
///
///   POST /v1/distribution  {"context": [tokens], "need": ["full"|"special+topk"], "k": int}
///     -> {"probs": {token: float, ...}}
///   GET  /v1/vocab         -> {"tokens": [token, ...]}
class ReferenceServer {
 public:
  explicit ReferenceServer(ToyModel model);
  ~ReferenceServer();

  ReferenceServer(const ReferenceServer&) = delete;
  ReferenceServer& operator=(const ReferenceServer&) = delete;

  /// Binds 127.0.0.1 (an ephemeral port when `port` is 0) and serves on a
  /// background thread. Returns the bound port.
  int start(int port = 0);
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace reverse

#endif  // REVERSE_SERVER_H_
