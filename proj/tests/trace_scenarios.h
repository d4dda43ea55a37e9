// Scripted decode scenarios with hand-written expected event traces. Every
// scripted distribution is a point mass, so sampling is deterministic at any
// temperature and P(</UN>) is exactly 0 or 1 — the traces below were derived
// on paper from the state-machine rules before the engine ran them.
#ifndef REVERSE_TESTS_TRACE_SCENARIOS_H_
#define REVERSE_TESTS_TRACE_SCENARIOS_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "reverse/backend.h"
#include "reverse/decode.h"
#include "reverse/tokens.h"

namespace reverse::testing {

struct TraceScenario {
  std::string name;
  std::vector<std::string> prompt;
  DecodeConfig config;
  bool open_ended = false;
  std::function<std::unique_ptr<ScriptedBackend>()> make_backend;
  std::string expected_trace;  // exact JSONL the engine must emit

  // expected outcome fields
  std::string clean_text;
  int corrections = 0;
  bool flagged = false;
  long long generated = 0;
  long long emitted = 0;
  int stage = 1;
};

inline Vocabulary scenario_vocab() {
  return Vocabulary({"a", "cat", "dog", "ghost", "and", "sits", "here"});
}

inline DecodeConfig scenario_config() {
  DecodeConfig config;
  config.tau = 0.5;
  config.seed = 1;
  config.max_length = 32;
  return config;
}

inline std::vector<TraceScenario> trace_scenarios() {
  std::vector<TraceScenario> scenarios;
  const std::vector<std::string> prompt = {"a"};

  {  // 1. clean generation, detector never fires
    TraceScenario s;
    s.name = "no_trigger";
    s.prompt = prompt;
    s.config = scenario_config();
    s.make_backend = [] {
      auto b = std::make_unique<ScriptedBackend>(scenario_vocab());
      int step = 1;
      for (const char* tok : {"cat", "sits", ".", "</s>"}) {
        b->at_step(step++, 0, b->point_mass(tok));
      }
      return b;
    };
    s.expected_trace =
        R"({"event":"token","pos":0,"token":"cat","p_un":0.0,"temp":1.0}
{"event":"token","pos":1,"token":"sits","p_un":0.0,"temp":1.0}
{"event":"token","pos":2,"token":".","p_un":0.0,"temp":1.0}
{"event":"token","pos":3,"token":"</s>","p_un":0.0,"temp":1.0}
{"event":"finalize","flagged":false,"corrections":0,"generated":4,"emitted":4}
)";
    s.clean_text = "cat sits .";
    s.corrections = 0;
    s.generated = 4;
    s.emitted = 4;
    scenarios.push_back(std::move(s));
  }

  {  // 2. one detection, fixed by the first resample
    TraceScenario s;
    s.name = "single_local_fix";
    s.prompt = prompt;
    s.config = scenario_config();
    s.make_backend = [prompt] {
      auto b = std::make_unique<ScriptedBackend>(scenario_vocab());
      int step = 1;
      for (const char* tok : {"<SPAN>", "cat", "</CN>", "and", "<SPAN>", "ghost", "</UN>"}) {
        b->at_step(step++, 0, b->point_mass(tok));
      }
      auto ctx = rewrite_query(prompt, {"ghost"});
      for (const char* tok : {"<SPAN>", "cat", "</CN>"}) ctx.emplace_back(tok);
      for (const char* tok : {"and", "<SPAN>", "dog", "</CN>", ".", "</s>"}) {
        b->at_context(ctx, 0, b->point_mass(tok));
        ctx.emplace_back(tok);
      }
      return b;
    };
    s.expected_trace =
        R"({"event":"token","pos":0,"token":"<SPAN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":1,"token":"cat","p_un":0.0,"temp":1.0}
{"event":"token","pos":2,"token":"</CN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":3,"token":"and","p_un":0.0,"temp":1.0}
{"event":"token","pos":4,"token":"<SPAN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":5,"token":"ghost","p_un":0.0,"temp":1.0}
{"event":"token","pos":6,"token":"</UN>","p_un":1.0,"temp":1.0}
{"event":"detect","pos":6,"p_un":1.0,"tau":0.5}
{"event":"backtrack_local","to":2,"placeholder":"ghost"}
{"event":"token","pos":3,"token":"and","p_un":0.0,"temp":1.1}
{"event":"token","pos":4,"token":"<SPAN>","p_un":0.0,"temp":1.1}
{"event":"token","pos":5,"token":"dog","p_un":0.0,"temp":1.1}
{"event":"token","pos":6,"token":"</CN>","p_un":0.0,"temp":1.1}
{"event":"resample_accept","n":1,"len":4,"temp":1.1}
{"event":"token","pos":7,"token":".","p_un":0.0,"temp":1.0}
{"event":"token","pos":8,"token":"</s>","p_un":0.0,"temp":1.0}
{"event":"finalize","flagged":false,"corrections":1,"generated":13,"emitted":9}
)";
    s.clean_text = "cat and dog .";
    s.corrections = 1;
    s.generated = 13;
    s.emitted = 9;
    scenarios.push_back(std::move(s));
  }

  {  // 3. K consecutive failures escalate to the sentence boundary
    TraceScenario s;
    s.name = "k_exhaustion_global_backtrack";
    s.prompt = prompt;
    s.config = scenario_config();
    s.config.max_local_attempts = 2;
    s.make_backend = [prompt] {
      auto b = std::make_unique<ScriptedBackend>(scenario_vocab());
      int step = 1;
      for (const char* tok : {"cat", ".", "<SPAN>", "ghost", "</UN>"}) {
        b->at_step(step++, 0, b->point_mass(tok));
      }
      auto ctx = rewrite_query(prompt, {"ghost"});
      ctx.emplace_back("cat");
      ctx.emplace_back(".");
      b->at_context(ctx, 0, b->point_mass("</UN>"));
      b->at_context(ctx, 1, b->point_mass("</UN>"));
      b->at_context(ctx, 2, b->point_mass("<SPAN>"));
      // the third resample continues: <SPAN> dog </CN>, then the main loop ends
      ctx.emplace_back("<SPAN>");
      b->at_context(ctx, 0, b->point_mass("dog"));
      ctx.emplace_back("dog");
      b->at_context(ctx, 0, b->point_mass("</CN>"));
      ctx.emplace_back("</CN>");
      b->at_context(ctx, 0, b->point_mass("</s>"));
      return b;
    };
    s.expected_trace =
        R"({"event":"token","pos":0,"token":"cat","p_un":0.0,"temp":1.0}
{"event":"token","pos":1,"token":".","p_un":0.0,"temp":1.0}
{"event":"token","pos":2,"token":"<SPAN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":3,"token":"ghost","p_un":0.0,"temp":1.0}
{"event":"token","pos":4,"token":"</UN>","p_un":1.0,"temp":1.0}
{"event":"detect","pos":4,"p_un":1.0,"tau":0.5}
{"event":"backtrack_global","to":1}
{"event":"token","pos":2,"token":"</UN>","p_un":1.0,"temp":1.1}
{"event":"resample_fail","n":1,"k":1,"temp":1.1}
{"event":"backtrack_global","to":1}
{"event":"token","pos":2,"token":"</UN>","p_un":1.0,"temp":1.2}
{"event":"resample_fail","n":2,"k":2,"temp":1.2}
{"event":"backtrack_global","to":1}
{"event":"token","pos":2,"token":"<SPAN>","p_un":0.0,"temp":1.3}
{"event":"token","pos":3,"token":"dog","p_un":0.0,"temp":1.3}
{"event":"token","pos":4,"token":"</CN>","p_un":0.0,"temp":1.3}
{"event":"resample_accept","n":3,"len":3,"temp":1.3}
{"event":"token","pos":5,"token":"</s>","p_un":0.0,"temp":1.0}
{"event":"finalize","flagged":false,"corrections":3,"generated":11,"emitted":6}
)";
    s.clean_text = "cat . dog";
    s.corrections = 3;
    s.generated = 11;
    s.emitted = 6;
    scenarios.push_back(std::move(s));
  }

  {  // 4. budget exhausted, output finalized flagged
    TraceScenario s;
    s.name = "n_exhaustion_flagged_finalize";
    s.prompt = prompt;
    s.config = scenario_config();
    s.config.max_total_corrections = 2;
    s.make_backend = [prompt] {
      auto b = std::make_unique<ScriptedBackend>(scenario_vocab());
      int step = 1;
      for (const char* tok : {"<SPAN>", "ghost", "</UN>"}) {
        b->at_step(step++, 0, b->point_mass(tok));
      }
      auto ctx = rewrite_query(prompt, {"ghost"});
      b->at_context(ctx, 0, b->point_mass("</UN>"));
      b->at_context(ctx, 1, b->point_mass("</UN>"));
      return b;
    };
    s.expected_trace =
        R"({"event":"token","pos":0,"token":"<SPAN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":1,"token":"ghost","p_un":0.0,"temp":1.0}
{"event":"token","pos":2,"token":"</UN>","p_un":1.0,"temp":1.0}
{"event":"detect","pos":2,"p_un":1.0,"tau":0.5}
{"event":"backtrack_global","to":-1}
{"event":"token","pos":0,"token":"</UN>","p_un":1.0,"temp":1.1}
{"event":"resample_fail","n":1,"k":1,"temp":1.1}
{"event":"backtrack_global","to":-1}
{"event":"token","pos":0,"token":"</UN>","p_un":1.0,"temp":1.2}
{"event":"resample_fail","n":2,"k":2,"temp":1.2}
{"event":"finalize","flagged":true,"corrections":2,"generated":5,"emitted":1}
)";
    s.clean_text = "";
    s.corrections = 2;
    s.flagged = true;
    s.generated = 5;
    s.emitted = 1;
    scenarios.push_back(std::move(s));
  }

  {  // 5. no </CN> anywhere: local backtrack falls through to the boundary
    TraceScenario s;
    s.name = "degenerate_no_cn_checkpoint";
    s.prompt = prompt;
    s.config = scenario_config();
    s.make_backend = [prompt] {
      auto b = std::make_unique<ScriptedBackend>(scenario_vocab());
      int step = 1;
      for (const char* tok : {"cat", ".", "<SPAN>", "ghost", "</UN>"}) {
        b->at_step(step++, 0, b->point_mass(tok));
      }
      auto ctx = rewrite_query(prompt, {"ghost"});
      ctx.insert(ctx.end(), {"cat", "."});
      for (const char* tok : {"<SPAN>", "here", "</CN>", "</s>"}) {
        b->at_context(ctx, 0, b->point_mass(tok));
        ctx.emplace_back(tok);
      }
      return b;
    };
    s.expected_trace =
        R"({"event":"token","pos":0,"token":"cat","p_un":0.0,"temp":1.0}
{"event":"token","pos":1,"token":".","p_un":0.0,"temp":1.0}
{"event":"token","pos":2,"token":"<SPAN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":3,"token":"ghost","p_un":0.0,"temp":1.0}
{"event":"token","pos":4,"token":"</UN>","p_un":1.0,"temp":1.0}
{"event":"detect","pos":4,"p_un":1.0,"tau":0.5}
{"event":"backtrack_global","to":1}
{"event":"token","pos":2,"token":"<SPAN>","p_un":0.0,"temp":1.1}
{"event":"token","pos":3,"token":"here","p_un":0.0,"temp":1.1}
{"event":"token","pos":4,"token":"</CN>","p_un":0.0,"temp":1.1}
{"event":"resample_accept","n":1,"len":3,"temp":1.1}
{"event":"token","pos":5,"token":"</s>","p_un":0.0,"temp":1.0}
{"event":"finalize","flagged":false,"corrections":1,"generated":9,"emitted":6}
)";
    s.clean_text = "cat . here";
    s.corrections = 1;
    s.generated = 9;
    s.emitted = 6;
    scenarios.push_back(std::move(s));
  }

  {  // 6. the temperature schedule saturates at T0 + 0.5
    TraceScenario s;
    s.name = "temperature_cap_reached";
    s.prompt = prompt;
    s.config = scenario_config();
    s.config.temperature_step = 0.3;
    s.make_backend = [prompt] {
      auto b = std::make_unique<ScriptedBackend>(scenario_vocab());
      int step = 1;
      for (const char* tok : {"<SPAN>", "ghost", "</UN>"}) {
        b->at_step(step++, 0, b->point_mass(tok));
      }
      auto ctx = rewrite_query(prompt, {"ghost"});
      b->at_context(ctx, 0, b->point_mass("</UN>"));
      b->at_context(ctx, 1, b->point_mass("</UN>"));
      b->at_context(ctx, 2, b->point_mass("cat"));
      auto c1 = ctx;
      c1.emplace_back("cat");
      b->at_context(c1, 0, b->point_mass("</s>"));
      return b;
    };
    s.expected_trace =
        R"({"event":"token","pos":0,"token":"<SPAN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":1,"token":"ghost","p_un":0.0,"temp":1.0}
{"event":"token","pos":2,"token":"</UN>","p_un":1.0,"temp":1.0}
{"event":"detect","pos":2,"p_un":1.0,"tau":0.5}
{"event":"backtrack_global","to":-1}
{"event":"token","pos":0,"token":"</UN>","p_un":1.0,"temp":1.3}
{"event":"resample_fail","n":1,"k":1,"temp":1.3}
{"event":"backtrack_global","to":-1}
{"event":"token","pos":0,"token":"</UN>","p_un":1.0,"temp":1.5}
{"event":"resample_fail","n":2,"k":2,"temp":1.5}
{"event":"backtrack_global","to":-1}
{"event":"token","pos":0,"token":"cat","p_un":0.0,"temp":1.5}
{"event":"token","pos":1,"token":"</s>","p_un":0.0,"temp":1.5}
{"event":"resample_accept","n":3,"len":2,"temp":1.5}
{"event":"finalize","flagged":false,"corrections":3,"generated":7,"emitted":2}
)";
    s.clean_text = "cat";
    s.corrections = 3;
    s.generated = 7;
    s.emitted = 2;
    scenarios.push_back(std::move(s));
  }

  {  // 7. two detection episodes accumulate distinct hint placeholders
    TraceScenario s;
    s.name = "hint_accumulation";
    s.prompt = prompt;
    s.config = scenario_config();
    s.make_backend = [prompt] {
      auto b = std::make_unique<ScriptedBackend>(scenario_vocab());
      int step = 1;
      for (const char* tok : {"<SPAN>", "cat", "</CN>", "and", "<SPAN>", "ghost", "</UN>"}) {
        b->at_step(step++, 0, b->point_mass(tok));
      }
      auto q1 = rewrite_query(prompt, {"ghost"});
      auto c = q1;
      c.insert(c.end(), {"<SPAN>", "cat", "</CN>"});
      for (const char* tok : {"<SPAN>", "dog", "</CN>", "and", "<SPAN>", "here", "</UN>"}) {
        b->at_context(c, 0, b->point_mass(tok));
        c.emplace_back(tok);
      }
      auto q2 = rewrite_query(prompt, {"ghost", "here"});
      auto c2 = q2;
      c2.insert(c2.end(), {"<SPAN>", "cat", "</CN>", "<SPAN>", "dog", "</CN>"});
      for (const char* tok : {"sits", "</s>"}) {
        b->at_context(c2, 0, b->point_mass(tok));
        c2.emplace_back(tok);
      }
      return b;
    };
    s.expected_trace =
        R"({"event":"token","pos":0,"token":"<SPAN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":1,"token":"cat","p_un":0.0,"temp":1.0}
{"event":"token","pos":2,"token":"</CN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":3,"token":"and","p_un":0.0,"temp":1.0}
{"event":"token","pos":4,"token":"<SPAN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":5,"token":"ghost","p_un":0.0,"temp":1.0}
{"event":"token","pos":6,"token":"</UN>","p_un":1.0,"temp":1.0}
{"event":"detect","pos":6,"p_un":1.0,"tau":0.5}
{"event":"backtrack_local","to":2,"placeholder":"ghost"}
{"event":"token","pos":3,"token":"<SPAN>","p_un":0.0,"temp":1.1}
{"event":"token","pos":4,"token":"dog","p_un":0.0,"temp":1.1}
{"event":"token","pos":5,"token":"</CN>","p_un":0.0,"temp":1.1}
{"event":"resample_accept","n":1,"len":3,"temp":1.1}
{"event":"token","pos":6,"token":"and","p_un":0.0,"temp":1.0}
{"event":"token","pos":7,"token":"<SPAN>","p_un":0.0,"temp":1.0}
{"event":"token","pos":8,"token":"here","p_un":0.0,"temp":1.0}
{"event":"token","pos":9,"token":"</UN>","p_un":1.0,"temp":1.0}
{"event":"detect","pos":9,"p_un":1.0,"tau":0.5}
{"event":"backtrack_local","to":5,"placeholder":"here"}
{"event":"token","pos":6,"token":"sits","p_un":0.0,"temp":1.1}
{"event":"token","pos":7,"token":"</s>","p_un":0.0,"temp":1.1}
{"event":"resample_accept","n":2,"len":2,"temp":1.1}
{"event":"finalize","flagged":false,"corrections":2,"generated":16,"emitted":8}
)";
    s.clean_text = "cat dog sits";
    s.corrections = 2;
    s.generated = 16;
    s.emitted = 8;
    scenarios.push_back(std::move(s));
  }

  {  // 8. open-ended: blank first stage, clarified second stage answers
    TraceScenario s;
    s.name = "open_ended_two_stage";
    s.prompt = prompt;
    s.config = scenario_config();
    s.open_ended = true;
    s.make_backend = [prompt] {
      auto b = std::make_unique<ScriptedBackend>(scenario_vocab());
      b->at_step(1, 0, b->point_mass("</s>"));
      int clarified_len =
          static_cast<int>(prompt.size() + split_tokens(kUnanswerableClarification).size());
      b->at_step(clarified_len, 0, b->point_mass("cat"));
      b->at_step(clarified_len + 1, 0, b->point_mass("</s>"));
      return b;
    };
    s.expected_trace =
        R"({"event":"token","pos":0,"token":"</s>","p_un":0.0,"temp":1.0}
{"event":"finalize","flagged":false,"corrections":0,"generated":1,"emitted":1}
{"event":"token","pos":0,"token":"cat","p_un":0.0,"temp":1.0}
{"event":"token","pos":1,"token":"</s>","p_un":0.0,"temp":1.0}
{"event":"finalize","flagged":false,"corrections":0,"generated":2,"emitted":2}
)";
    s.clean_text = "cat";
    s.corrections = 0;
    s.generated = 3;  // stage totals accumulate
    s.emitted = 2;
    s.stage = 2;
    scenarios.push_back(std::move(s));
  }

  return scenarios;
}

}  // namespace reverse::testing

#endif  // REVERSE_TESTS_TRACE_SCENARIOS_H_
