#include "reverse/vocab.h"

#include <cmath>

#include "reverse/error.h"

namespace reverse {

Vocabulary::Vocabulary(const std::vector<std::string>& content_tokens) {
  add(std::string(kPadToken));
  add(std::string(kSpanOpen));
  add(std::string(kConfidentClose));
  add(std::string(kUnconfidentClose));
  add(std::string(kTerminator));
  add(".");
  add("!");
  add("?");
  for (const auto& tok : content_tokens) add(tok);
  pad_index_ = index_.at(std::string(kPadToken));
  span_open_index_ = index_.at(std::string(kSpanOpen));
  confident_close_index_ = index_.at(std::string(kConfidentClose));
  unconfident_close_index_ = index_.at(std::string(kUnconfidentClose));
  terminator_index_ = index_.at(std::string(kTerminator));
}

void Vocabulary::add(const std::string& token) {
  if (index_.count(token)) return;
  index_[token] = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
}

int Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "token not in vocabulary: '" + token + "'");
  }
  return it->second;
}

int Vocabulary::index_or_pad(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? pad_index_ : it->second;
}

bool Vocabulary::is_sentence_punctuation(int index) const {
  const std::string& tok = tokens_.at(index);
  return tok == "." || tok == "!" || tok == "?";
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) ids.push_back(index(tok));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(token(id));
  return out;
}

void Distribution::validate() const {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::kInvalidArgument, "distribution entry negative or non-finite");
    }
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument,
                "distribution sums to " + std::to_string(sum) + ", expected 1");
  }
}

}  // namespace reverse
