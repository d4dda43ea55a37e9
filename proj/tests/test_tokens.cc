#include <string>
#include <vector>

#include "doctest.h"
#include "reverse/error.h"
#include "reverse/rng.h"
#include "reverse/tokens.h"

using namespace reverse;

namespace {

std::vector<std::string> toks(const char* text) { return split_tokens(text); }

// Test-side marker removal: character-level erase over the joined string,
// independent of the span machinery.
std::string regex_style_strip(const std::vector<std::string>& tokens) {
  std::string joined = join_tokens(tokens);
  for (const std::string marker : {"<SPAN> ", "</CN> ", "</UN> ", "<SPAN>", "</CN>", "</UN>"}) {
    size_t pos;
    while ((pos = joined.find(marker)) != std::string::npos) joined.erase(pos, marker.size());
  }
  while (!joined.empty() && joined.back() == ' ') joined.pop_back();
  return joined;
}

// Random valid annotated text: alternating plain runs and spans; at most one
// unconfident span, which terminates the text.
AnnotatedText random_annotated(Rng& rng) {
  std::vector<std::string> words = {"a", "red", "cup", "on", "table", "dog", "cat", "sits"};
  std::vector<std::string> out;
  int blocks = static_cast<int>(rng.uniform_int(0, 4));
  for (int b = 0; b < blocks; ++b) {
    int plain = static_cast<int>(rng.uniform_int(0, 2));
    for (int i = 0; i < plain; ++i) {
      out.push_back(words[static_cast<size_t>(rng.uniform_int(0, 7))]);
    }
    out.emplace_back(kSpanOpen);
    int content = static_cast<int>(rng.uniform_int(0, 3));
    for (int i = 0; i < content; ++i) {
      out.push_back(words[static_cast<size_t>(rng.uniform_int(0, 7))]);
    }
    bool unconfident = b + 1 == blocks && rng.uniform() < 0.4;
    out.emplace_back(unconfident ? kUnconfidentClose : kConfidentClose);
    if (unconfident) {
      if (rng.uniform() < 0.5) out.emplace_back(kTerminator);
      return parse_spans(out);
    }
  }
  int tail = static_cast<int>(rng.uniform_int(0, 2));
  for (int i = 0; i < tail; ++i) {
    out.push_back(words[static_cast<size_t>(rng.uniform_int(0, 7))]);
  }
  return parse_spans(out);
}

}  // namespace

TEST_CASE("parse_spans recognizes a confident span") {
  auto text = parse_spans(toks("a <SPAN> red cup </CN> on a table"));
  REQUIRE(text.spans.size() == 1);
  CHECK(text.spans[0].open_index == 1);
  CHECK(text.spans[0].close_index == 4);
  CHECK(text.spans[0].polarity == Polarity::kConfident);
}

TEST_CASE("parse_spans accepts an unconfident terminal span") {
  auto text = parse_spans(toks("a <SPAN> green bottle </UN>"));
  REQUIRE(text.spans.size() == 1);
  CHECK(text.spans[0].polarity == Polarity::kUnconfident);
  CHECK(text.spans[0].open_index == 1);
  CHECK(text.spans[0].close_index == 4);

  // a trailing terminator is still fine
  CHECK_NOTHROW(parse_spans(toks("a <SPAN> green bottle </UN> </s>")));
}

TEST_CASE("parse_spans rejects content after an unconfident close") {
  try {
    parse_spans(toks("a <SPAN> green bottle </UN> nearby"));
    FAIL("expected TrailingContentAfterUN");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTrailingContentAfterUN);
  }
}

TEST_CASE("parse_spans rejects unbalanced and nested markers") {
  try {
    parse_spans(toks("red cup </CN>"));
    FAIL("expected UnbalancedMarkers");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnbalancedMarkers);
  }
  try {
    parse_spans(toks("<SPAN> red cup"));
    FAIL("expected UnbalancedMarkers");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnbalancedMarkers);
  }
  try {
    parse_spans(toks("<SPAN> red <SPAN> cup </CN> </CN>"));
    FAIL("expected NestedSpan");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNestedSpan);
  }
}

TEST_CASE("parse_spans_lenient tolerates a dangling open span") {
  auto text = parse_spans_lenient(toks("a <SPAN> ghost"));
  CHECK(text.tokens.size() == 3);
  CHECK(text.spans.empty());
}

TEST_CASE("strip_markers removes exactly the marker tokens") {
  auto text = parse_spans(toks("a <SPAN> red cup </CN> ."));
  CHECK(join_tokens(strip_markers(text)) == "a red cup .");

  auto no_spans = parse_spans(toks("a plain sentence ."));
  CHECK(strip_markers(no_spans) == no_spans.tokens);

  auto two = parse_spans(toks("<SPAN> a cat </CN> and <SPAN> a dog </CN> sit ."));
  CHECK(join_tokens(strip_markers(two)) == regex_style_strip(two.tokens));
  CHECK(join_tokens(strip_markers(two)) == "a cat and a dog sit .");
}

TEST_CASE("hallucination_mask zeroes only unconfident span interiors") {
  auto text = parse_spans(toks("a <SPAN> green bottle </UN>"));
  CHECK(hallucination_mask(text) == std::vector<uint8_t>{1, 1, 0, 0, 1});

  auto confident = parse_spans(toks("a <SPAN> red cup </CN> on a table"));
  CHECK(hallucination_mask(confident) == std::vector<uint8_t>(confident.tokens.size(), 1));

  auto empty = parse_spans({});
  CHECK(hallucination_mask(empty).empty());
}

TEST_CASE("annotated text properties over generated spans") {
  Rng rng(20240817);
  for (int iter = 0; iter < 500; ++iter) {
    AnnotatedText text = random_annotated(rng);

    // parse-serialize round trip
    auto j = text.to_json();
    CHECK(AnnotatedText::from_json(nlohmann::json::parse(j.dump())) == text);
    CHECK(parse_spans(text.tokens) == text);

    // stripping removes exactly the opener and closer of every span
    CHECK(strip_markers(text).size() == text.tokens.size() - 2 * text.spans.size());

    // mask zero count equals the unconfident interiors
    auto mask = hallucination_mask(text);
    size_t zeros = 0;
    for (uint8_t m : mask) zeros += m == 0;
    size_t expected = 0;
    for (const auto& span : text.spans) {
      if (span.polarity == Polarity::kUnconfident) {
        expected += static_cast<size_t>(span.close_index - span.open_index - 1);
      }
    }
    CHECK(zeros == expected);
  }
}

TEST_CASE("annotated json matches the documented schema") {
  auto text = parse_spans(toks("a <SPAN> red cup </CN> ."));
  CHECK(text.to_json().dump() ==
        R"({"tokens":["a","<SPAN>","red","cup","</CN>","."],)"
        R"("spans":[{"open":1,"close":4,"polarity":"CN"}]})");
}
