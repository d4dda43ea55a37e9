#ifndef REVERSE_VOCAB_H_
#define REVERSE_VOCAB_H_

#include <string>
#include <unordered_map>
#include <vector>

#include "reverse/tokens.h"

namespace reverse {

inline constexpr std::string_view kPadToken = "<PAD>";

/// Ordered token table. Always contains the pad token, the three markers,
/// the terminator and the sentence punctuation {".", "!", "?"}; indices are
/// stable for the lifetime of the object.
class Vocabulary {
 public:
  /// Builds a vocabulary from the required specials plus `content_tokens`
  /// (duplicates and tokens already present are ignored).
  explicit Vocabulary(const std::vector<std::string>& content_tokens = {});

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  int index(const std::string& token) const;
  /// Lookup that maps unknown tokens to the pad index instead of throwing.
  int index_or_pad(const std::string& token) const;

  int pad_index() const { return pad_index_; }
  int span_open_index() const { return span_open_index_; }
  int confident_close_index() const { return confident_close_index_; }
  int unconfident_close_index() const { return unconfident_close_index_; }
  int terminator_index() const { return terminator_index_; }
  bool is_sentence_punctuation(int index) const;

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int pad_index_ = -1;
  int span_open_index_ = -1;
  int confident_close_index_ = -1;
  int unconfident_close_index_ = -1;
  int terminator_index_ = -1;
};

/// Probability vector over a vocabulary. Entries are non-negative and sum to
/// one within 1e-9 (validated where distributions enter the system).
struct Distribution {
  std::vector<double> probs;

  void validate() const;  // throws InvalidArgument on violation
};

}  // namespace reverse

#endif  // REVERSE_VOCAB_H_
