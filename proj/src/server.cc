#include "reverse/server.h"

#include <algorithm>
#include <thread>

#include "httplib.h"
#include "reverse/error.h"

namespace reverse {

struct ReferenceServer::Impl {
  ToyModel model;
  httplib::Server server;
  std::thread worker;

  explicit Impl(ToyModel m) : model(std::move(m)) {}
};

namespace {

nlohmann::ordered_json probs_payload(const ToyModel& model, const Distribution& dist,
                                     const std::string& need, int top_k) {
  const Vocabulary& vocab = model.vocab;
  nlohmann::ordered_json probs;
  if (need == "special+topk") {
    std::vector<int> special = {vocab.span_open_index(), vocab.confident_close_index(),
                                vocab.unconfident_close_index(), vocab.terminator_index()};
    for (int idx : special) probs[vocab.token(idx)] = dist.probs[static_cast<size_t>(idx)];
    std::vector<int> order;
    for (int i = 0; i < vocab.size(); ++i) {
      if (std::find(special.begin(), special.end(), i) == special.end()) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return dist.probs[static_cast<size_t>(a)] > dist.probs[static_cast<size_t>(b)];
    });
    int take = std::min<int>(top_k, static_cast<int>(order.size()));
    for (int i = 0; i < take; ++i) {
      probs[vocab.token(order[i])] = dist.probs[static_cast<size_t>(order[i])];
    }
  } else {
    for (int i = 0; i < vocab.size(); ++i) probs[vocab.token(i)] = dist.probs[static_cast<size_t>(i)];
  }
  nlohmann::ordered_json payload;
  payload["probs"] = probs;
  return payload;
}

}  // namespace

ReferenceServer::ReferenceServer(ToyModel model) : impl_(std::make_unique<Impl>(std::move(model))) {
  impl_->server.Get("/v1/vocab", [this](const httplib::Request&, httplib::Response& res) {
    nlohmann::ordered_json j;
    j["tokens"] = impl_->model.vocab.tokens();
    res.set_content(j.dump(), "application/json");
  });

  impl_->server.Post("/v1/distribution",
                     [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.set_content(R"({"error":"invalid json"})", "application/json");
      return;
    }
    try {
      auto context = body.at("context").get<std::vector<std::string>>();
      std::string need = "full";
      if (body.contains("need")) {
        const auto& n = body.at("need");
        need = n.is_array() ? n.at(0).get<std::string>() : n.get<std::string>();
      }
      int top_k = body.value("k", 10);
      std::vector<int> ids;
      ids.reserve(context.size());
      for (const auto& tok : context) ids.push_back(impl_->model.vocab.index_or_pad(tok));
      Distribution dist = forward(impl_->model, ids, 1.0);
      res.set_content(probs_payload(impl_->model, dist, need, top_k).dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      nlohmann::ordered_json err;
      err["error"] = e.what();
      res.set_content(err.dump(), "application/json");
    }
  });
}

ReferenceServer::~ReferenceServer() { stop(); }

int ReferenceServer::start(int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) {
      throw Error(ErrorCode::kIoError, "cannot bind 127.0.0.1:" + std::to_string(port));
    }
    port_ = port;
  }
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void ReferenceServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
  if (impl_ && impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace reverse
