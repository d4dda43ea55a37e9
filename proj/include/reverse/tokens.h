#ifndef REVERSE_TOKENS_H_
#define REVERSE_TOKENS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vendor_json.h"

namespace reverse {

// The three confidence markers plus the sequence terminator. Markers are
// atomic vocabulary tokens; no tokenizer in this project ever splits them.
inline constexpr std::string_view kSpanOpen = "<SPAN>";
inline constexpr std::string_view kConfidentClose = "</CN>";
inline constexpr std::string_view kUnconfidentClose = "</UN>";
inline constexpr std::string_view kTerminator = "</s>";

enum class Polarity { kConfident, kUnconfident };

bool is_marker(std::string_view token);

/// One marked phrase: tokens strictly between open_index and close_index are
/// its content. Spans never nest or overlap.
struct SpanRecord {
  int open_index = 0;
  int close_index = 0;
  Polarity polarity = Polarity::kConfident;

  bool operator==(const SpanRecord&) const = default;
};

/// A token sequence carrying confidence markers, plus the parsed span list.
///
/// Invariants (enforced by parse_spans):
///  - every <SPAN> is closed by exactly one </CN> or </UN>, in order;
///  - spans never nest;
///  - after an </UN> only terminator tokens may follow (an unconfident close
///    ends the text).
struct AnnotatedText {
  std::vector<std::string> tokens;
  std::vector<SpanRecord> spans;

  bool operator==(const AnnotatedText&) const = default;

  nlohmann::ordered_json to_json() const;
  static AnnotatedText from_json(const nlohmann::json& j);

  std::string to_string() const;  // space-joined tokens
};

/// Scans a marker-bearing token sequence and produces a validated
/// AnnotatedText. Throws UnbalancedMarkers, NestedSpan or
/// TrailingContentAfterUN.
AnnotatedText parse_spans(const std::vector<std::string>& tokens);

/// Like parse_spans, but tolerates a trailing unclosed span: the dangling
/// <SPAN> stays in the token list without a span record. Used when a decode
/// is finalized mid-span (budget exhausted or length-capped).
AnnotatedText parse_spans_lenient(const std::vector<std::string>& tokens);

/// Removes all marker tokens, preserving the content token order.
std::vector<std::string> strip_markers(const AnnotatedText& annotated);

/// Marker removal over a raw token sequence, no validity requirement.
std::vector<std::string> strip_marker_tokens(const std::vector<std::string>& tokens);

/// Per-token loss weights: 0 exactly for content tokens strictly inside an
/// unconfident span, 1 everywhere else. The markers themselves always get
/// weight 1 — the closers are the supervision signal for the verifier.
std::vector<uint8_t> hallucination_mask(const AnnotatedText& annotated);

std::vector<std::string> split_tokens(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace reverse

#endif  // REVERSE_TOKENS_H_
