#include "reverse/tokens.h"

#include <sstream>

#include "reverse/error.h"

namespace reverse {

bool is_marker(std::string_view token) {
  return token == kSpanOpen || token == kConfidentClose || token == kUnconfidentClose;
}

AnnotatedText parse_spans(const std::vector<std::string>& tokens) {
  AnnotatedText out;
  out.tokens = tokens;
  int open_index = -1;
  int un_close_index = -1;
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    const std::string& tok = tokens[i];
    if (un_close_index >= 0 && tok != kTerminator) {
      throw Error(ErrorCode::kTrailingContentAfterUN,
                  "token '" + tok + "' at position " + std::to_string(i) +
                      " after an unconfident close");
    }
    if (tok == kSpanOpen) {
      if (open_index >= 0) {
        throw Error(ErrorCode::kNestedSpan,
                    "<SPAN> at position " + std::to_string(i) + " inside an open span");
      }
      open_index = i;
    } else if (tok == kConfidentClose || tok == kUnconfidentClose) {
      if (open_index < 0) {
        throw Error(ErrorCode::kUnbalancedMarkers,
                    "closer at position " + std::to_string(i) + " without an open span");
      }
      SpanRecord span;
      span.open_index = open_index;
      span.close_index = i;
      span.polarity = tok == kConfidentClose ? Polarity::kConfident : Polarity::kUnconfident;
      out.spans.push_back(span);
      if (span.polarity == Polarity::kUnconfident) un_close_index = i;
      open_index = -1;
    }
  }
  if (open_index >= 0) {
    throw Error(ErrorCode::kUnbalancedMarkers,
                "<SPAN> at position " + std::to_string(open_index) + " never closed");
  }
  return out;
}

AnnotatedText parse_spans_lenient(const std::vector<std::string>& tokens) {
  // Best-effort pairing for sequences a flagged decode may leave behind:
  // stray closers are ignored, a re-opened span abandons the previous open,
  // trailing content after </UN> is allowed. Only well-formed pairs become
  // span records.
  AnnotatedText out;
  out.tokens = tokens;
  int open_index = -1;
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    const std::string& tok = tokens[i];
    if (tok == kSpanOpen) {
      open_index = i;
    } else if (tok == kConfidentClose || tok == kUnconfidentClose) {
      if (open_index >= 0) {
        SpanRecord span;
        span.open_index = open_index;
        span.close_index = i;
        span.polarity = tok == kConfidentClose ? Polarity::kConfident : Polarity::kUnconfident;
        out.spans.push_back(span);
      }
      open_index = -1;
    }
  }
  return out;
}

std::vector<std::string> strip_markers(const AnnotatedText& annotated) {
  return strip_marker_tokens(annotated.tokens);
}

std::vector<std::string> strip_marker_tokens(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (!is_marker(tok)) out.push_back(tok);
  }
  return out;
}

std::vector<uint8_t> hallucination_mask(const AnnotatedText& annotated) {
  std::vector<uint8_t> mask(annotated.tokens.size(), 1);
  for (const auto& span : annotated.spans) {
    if (span.polarity != Polarity::kUnconfident) continue;
    for (int i = span.open_index + 1; i < span.close_index; ++i) {
      mask[i] = 0;
    }
  }
  return mask;
}

nlohmann::ordered_json AnnotatedText::to_json() const {
  nlohmann::ordered_json j;
  j["tokens"] = tokens;
  auto spans_json = nlohmann::ordered_json::array();
  for (const auto& span : spans) {
    nlohmann::ordered_json s;
    s["open"] = span.open_index;
    s["close"] = span.close_index;
    s["polarity"] = span.polarity == Polarity::kConfident ? "CN" : "UN";
    spans_json.push_back(s);
  }
  j["spans"] = spans_json;
  return j;
}

AnnotatedText AnnotatedText::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tokens") || !j.contains("spans")) {
    throw Error(ErrorCode::kMalformedResponse, "annotated text needs 'tokens' and 'spans'");
  }
  AnnotatedText out;
  out.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (const auto& s : j.at("spans")) {
    SpanRecord span;
    span.open_index = s.at("open").get<int>();
    span.close_index = s.at("close").get<int>();
    std::string pol = s.at("polarity").get<std::string>();
    if (pol != "CN" && pol != "UN") {
      throw Error(ErrorCode::kMalformedResponse, "span polarity must be CN or UN");
    }
    span.polarity = pol == "CN" ? Polarity::kConfident : Polarity::kUnconfident;
    out.spans.push_back(span);
  }
  // Re-parse to enforce the structural invariants on loaded data.
  AnnotatedText checked = parse_spans(out.tokens);
  if (checked.spans != out.spans) {
    throw Error(ErrorCode::kUnbalancedMarkers, "span records disagree with marker positions");
  }
  return checked;
}

std::string AnnotatedText::to_string() const { return join_tokens(tokens); }

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace reverse
