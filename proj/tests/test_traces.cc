#include <string>

#include "doctest.h"
#include "reverse/decode.h"
#include "trace_scenarios.h"

using namespace reverse;
using reverse::testing::trace_scenarios;

TEST_CASE("scripted scenarios reproduce their expected traces byte for byte") {
  for (const auto& scenario : trace_scenarios()) {
    CAPTURE(scenario.name);
    auto backend = scenario.make_backend();
    std::string trace;
    TraceSink sink = [&trace](const nlohmann::ordered_json& ev) {
      trace += ev.dump();
      trace += '\n';
    };
    DecodeOutcome outcome =
        scenario.open_ended ? decode_open_ended(scenario.prompt, *backend, scenario.config, sink)
                            : decode(scenario.prompt, *backend, scenario.config, sink);
    CHECK(trace == scenario.expected_trace);
    CHECK(outcome.clean_text == scenario.clean_text);
    CHECK(outcome.corrections_applied == scenario.corrections);
    CHECK(outcome.flagged_uncorrected == scenario.flagged);
    CHECK(outcome.tokens_generated_total == scenario.generated);
    CHECK(outcome.tokens_emitted == scenario.emitted);
    CHECK(outcome.stage == scenario.stage);
    CHECK(outcome.tokens_generated_total >= outcome.tokens_emitted);
  }
}

TEST_CASE("scenario replays are deterministic") {
  for (const auto& scenario : trace_scenarios()) {
    CAPTURE(scenario.name);
    auto first_backend = scenario.make_backend();
    auto second_backend = scenario.make_backend();
    auto run = [&](DistributionBackend& b) {
      return (scenario.open_ended ? decode_open_ended(scenario.prompt, b, scenario.config)
                                  : decode(scenario.prompt, b, scenario.config))
          .to_json()
          .dump();
    };
    CHECK(run(*first_backend) == run(*second_backend));
  }
}
