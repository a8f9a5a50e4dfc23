#include <doctest.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "emotod/generation.hpp"
#include "synthetic.hpp"

using namespace emotod;

namespace {

const std::filesystem::path kSample(EMOTOD_SAMPLE_DIR);

struct Sample {
  Normalizer norm = load_normalizer(kSample / "corpus");
  DialogueCorpus test = load_corpus(kSample / "corpus", Split::test, norm);
  KnowledgeBase kb = load_knowledge_base(kSample / "kb", norm);
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Gold continuation for the turn, with the emotion segment swapped.
std::string continuation_with_emotion(const Dialogue& d, std::size_t turn, Variant v,
                                      Emotion predicted) {
  std::vector<Emotion> prior;
  for (std::size_t i = 0; i < turn; ++i) prior.push_back(d.turns[i].user_emotion);
  const auto seq = build_training_sequence(d, turn, v);
  std::string cont = seq.text.substr(build_inference_prompt(gold_history(d, turn), prior, v).size());
  const std::string gold = "<|emotion|> " + std::string(canonical_name(d.turns[turn].user_emotion));
  cont.replace(cont.find(gold), gold.size(), "<|emotion|> " + std::string(canonical_name(predicted)));
  return cont;
}

class NoNgramBackend : public GenerationBackend {
 public:
  std::string complete(std::string_view, const GenParams&) override {
    return " <|endofbelief|> <|action|> <|endofaction|> <|response|> ok <|endofresponse|>";
  }
  bool supports(Capability c) const override { return c != Capability::no_repeat_ngram; }
  bool deterministic() const override { return true; }
  std::string identity() const override { return "no-ngram"; }
};

}  // namespace

TEST_CASE("stop sequences cut at the earliest match, keeping the stop") {
  CHECK(truncate_at_stop("a <|endofresponse|> b <|x|>", {"<|x|>", "<|endofresponse|>"}) ==
        "a <|endofresponse|>");
  CHECK(truncate_at_stop("abc", {"zz", ""}) == "abc");
  CHECK(truncate_at_stop("abc", {}) == "abc");
}

TEST_CASE("generate strips an echoed prompt") {
  ScriptedBackend echo([](std::string_view p, const GenParams&) {
    return std::string(p) + " tail <|endofresponse|> extra";
  });
  CHECK(generate(echo, "prompt", GenParams::pipeline()) == " tail <|endofresponse|>");
  ScriptedBackend plain([](std::string_view, const GenParams&) { return std::string("x"); });
  CHECK(generate(plain, "prompt", GenParams::pipeline()) == "x");
  CHECK_THROWS_AS(generate(plain, "", GenParams::pipeline()), InvalidArgument);
}

TEST_CASE("decoding presets") {
  const auto p = GenParams::pipeline();
  CHECK(p.mode == DecodeMode::greedy);
  CHECK(p.no_repeat_ngram == 10);
  CHECK(p.stop_sequences == std::vector<std::string>{"<|endofresponse|>"});
  const auto r = GenParams::refinement();
  CHECK(r.mode == DecodeMode::sample);
  CHECK(r.temperature == doctest::Approx(0.9));
}

TEST_CASE("replay backends") {
  ReplayBackend replay;
  replay.add("hello", "world");
  CHECK(replay.complete("hello", {}) == "world");
  CHECK_THROWS_AS(replay.complete("other", {}), BackendRejected);
  CHECK(replay.calls() == 2);
  const auto dir = testing::scratch_dir("replay");
  replay.save(dir / "r.json");
  auto loaded = ReplayBackend::from_file(dir / "r.json");
  CHECK(loaded.complete("hello", {}) == "world");
  std::ofstream(dir / "bad.json") << "[1]";
  CHECK_THROWS_AS(ReplayBackend::from_file(dir / "bad.json"), SchemaError);
  CHECK(prompt_key("a") == prompt_key("a"));
  CHECK(prompt_key("a") != prompt_key("b"));
}

TEST_CASE("gold replay reproduces the gold annotations") {
  Sample s;
  for (Variant v : {Variant::simple, Variant::emo, Variant::prev}) {
    auto backend = make_gold_replay(s.test, v);
    RunConfig cfg;
    cfg.variant = v;
    const auto set = run_corpus(backend, s.test, s.kb, cfg);
    REQUIRE(set.turns.size() == s.test.user_turn_count());
    std::size_t i = 0;
    for (const auto& d : s.test.dialogues()) {
      for (const auto& t : d.turns) {
        const auto& p = set.turns[i++];
        CHECK(p.dialogue_id == d.id);
        CHECK(p.turn_index == t.index);
        CHECK(p.parsed.well_formed());
        CHECK(p.parsed.belief == t.belief);
        CHECK(p.parsed.acts == t.acts);
        CHECK(p.parsed.response_delex == t.system_response_delex);
        if (v != Variant::simple) CHECK(p.parsed.emotion == t.user_emotion);
      }
    }
  }
}

TEST_CASE("lexicalization uses the first matching entity and the booking reference") {
  Sample s;
  auto backend = make_gold_replay(s.test, Variant::emo);
  RunConfig cfg;
  cfg.variant = Variant::emo;
  const auto set = run_corpus(backend, s.test, s.kb, cfg);
  const auto& booked = set.turns[1];  // SMP0006 turn 1
  REQUIRE(booked.dialogue_id == "SMP0006");
  CHECK(booked.response_lex == "I have booked a table at Curry Prince. Your reference number is " +
                                   booking_reference("SMP0006", 1) + ".");
}

TEST_CASE("PREV prompts carry predicted, not gold, emotions") {
  Sample s;
  const Dialogue& d = *s.test.find("SMP0008");  // turn 0 neutral, turn 1 dissatisfied
  REQUIRE(d.turns[0].user_emotion == Emotion::neutral);
  ScriptedBackend mock([&](std::string_view prompt, const GenParams&) {
    const std::size_t users = [&] {
      std::size_t n = 0;
      for (std::size_t p = prompt.find("<|user|>"); p != std::string_view::npos;
           p = prompt.find("<|user|>", p + 1)) {
        ++n;
      }
      return n;
    }();
    const std::size_t turn = users - 1;
    return continuation_with_emotion(d, turn, Variant::prev,
                                     turn == 0 ? Emotion::excited : d.turns[turn].user_emotion);
  });
  RunConfig cfg;
  cfg.variant = Variant::prev;
  const auto preds = run_dialogue(mock, d, s.kb, cfg);
  const auto prompts = mock.prompts();
  REQUIRE(prompts.size() == 3);
  CHECK(prompts[1].find("<|feel|> excited <|endoffeel|>") != std::string::npos);
  CHECK(prompts[1].find("<|feel|> neutral <|endoffeel|>") == std::string::npos);
  CHECK(preds[1].prior_emotions == std::vector<Emotion>{Emotion::excited});
  CHECK(preds[2].prior_emotions == std::vector<Emotion>{Emotion::excited, Emotion::dissatisfied});
  CHECK(preds[1].prompt == prompts[1]);

  // EMO prompts carry no emotion annotations at all.
  ScriptedBackend emo_mock([&](std::string_view, const GenParams&) { return std::string(); });
  cfg.variant = Variant::emo;
  run_dialogue(emo_mock, d, s.kb, cfg);
  for (const auto& p : emo_mock.prompts()) CHECK(p.find("<|feel|>") == std::string::npos);
}

TEST_CASE("predicted context threads generated responses into later prompts") {
  Sample s;
  const Dialogue& d = *s.test.find("SMP0006");
  ScriptedBackend mock([](std::string_view, const GenParams&) {
    return std::string(" <|endofbelief|> <|emotion|> neutral <|endofemotion|> <|action|> "
                       "<|endofaction|> <|response|> made up reply <|endofresponse|>");
  });
  RunConfig cfg;
  cfg.variant = Variant::emo;
  cfg.context_mode = ContextMode::predicted;
  const auto preds = run_dialogue(mock, d, s.kb, cfg);
  CHECK(preds[1].context[1].text == "made up reply");
  CHECK(mock.prompts()[1].find("<|system|> made up reply <|user|>") != std::string::npos);
  cfg.context_mode = ContextMode::gold;
  const auto gold = run_dialogue(mock, d, s.kb, cfg);
  CHECK(gold[1].context[1].text == d.turns[0].system_response_lex);
}

TEST_CASE("parallel runs produce byte-identical prediction files") {
  const auto synth = testing::make_synthetic({.emotion_counts = {400, 10, 10, 10, 10, 10, 100}});
  const auto corpus = synth.split(Split::train);
  auto backend = make_gold_replay(corpus, Variant::prev);
  const auto dir = testing::scratch_dir("parallel");
  RunConfig cfg;
  cfg.variant = Variant::prev;
  cfg.context_mode = ContextMode::predicted;
  ScriptedBackend skewed([&](std::string_view prompt, const GenParams& p) {
    try {
      return backend.complete(prompt, p);
    } catch (const BackendRejected&) {
      return std::string(" <|endofbelief|> <|emotion|> fearful <|endofemotion|> <|action|> "
                         "<|endofaction|> <|response|> fallback <|endofresponse|>");
    }
  });
  cfg.parallelism = 1;
  write_predictions(dir / "p1.jsonl", run_corpus(skewed, corpus, synth.kb, cfg));
  cfg.parallelism = 8;
  write_predictions(dir / "p8.jsonl", run_corpus(skewed, corpus, synth.kb, cfg));
  const std::string a = slurp(dir / "p1.jsonl");
  CHECK(!a.empty());
  CHECK(a == slurp(dir / "p8.jsonl"));
}

TEST_CASE("retryable errors are retried, others fail the dialogue") {
  Sample s;
  const Dialogue& d = *s.test.find("SMP0007");
  auto gold = make_gold_replay(s.test, Variant::emo);
  std::atomic<int> calls{0};
  ScriptedBackend flaky([&](std::string_view prompt, const GenParams& p) -> std::string {
    if (calls++ == 0) throw BackendUnavailable("warming up");
    return gold.complete(prompt, p);
  });
  RunConfig cfg;
  cfg.variant = Variant::emo;
  cfg.max_retries = 1;
  CHECK(run_dialogue(flaky, d, s.kb, cfg).size() == 2);

  ScriptedBackend rejecting([](std::string_view, const GenParams&) -> std::string {
    throw BackendRejected("bad request");
  });
  try {
    run_dialogue(rejecting, d, s.kb, cfg);
    FAIL("expected DialogueRunError");
  } catch (const DialogueRunError& e) {
    CHECK(e.dialogue_id() == "SMP0007");
    CHECK(e.turn() == 0);
  }
  CHECK(rejecting.calls() == 1);
}

TEST_CASE("failure rate threshold") {
  Sample s;
  auto gold = make_gold_replay(s.test, Variant::emo);
  ScriptedBackend partly([&](std::string_view prompt, const GenParams& p) -> std::string {
    if (prompt.find("robbed") != std::string_view::npos) throw BackendRejected("no");
    return gold.complete(prompt, p);
  });
  RunConfig cfg;
  cfg.variant = Variant::emo;
  CHECK_THROWS_AS(run_corpus(partly, s.test, s.kb, cfg), RunFailed);
  cfg.max_failure_rate = 0.25;
  const auto set = run_corpus(partly, s.test, s.kb, cfg);
  REQUIRE(set.failures.size() == 1);
  CHECK(set.failures[0].dialogue_id == "SMP0007");
  CHECK(set.turns.size() == s.test.user_turn_count() - 2);
}

TEST_CASE("backend concurrency caps are respected") {
  const auto synth = testing::make_synthetic({.emotion_counts = {200, 2, 2, 2, 2, 2, 50}});
  const auto corpus = synth.split(Split::train);
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  ScriptedBackend capped(
      [&](std::string_view, const GenParams&) {
        const int now = ++in_flight;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::microseconds(200));
        --in_flight;
        return std::string();
      },
      "capped", 2);
  RunConfig cfg;
  cfg.variant = Variant::emo;
  cfg.parallelism = 8;
  run_corpus(capped, corpus, synth.kb, cfg);
  CHECK(peak.load() <= 2);
}

TEST_CASE("unsupported no_repeat_ngram is reported as a warning") {
  Sample s;
  NoNgramBackend b;
  RunConfig cfg;
  cfg.variant = Variant::simple;
  const auto set = run_corpus(b, s.test, s.kb, cfg);
  REQUIRE(set.warnings.size() == 1);
  CHECK(set.warnings[0].find("no_repeat_ngram") != std::string::npos);
  CHECK(run_manifest_json(set).find("no_repeat_ngram; constraint not applied") != std::string::npos);
}

TEST_CASE("prediction records round trip") {
  Sample s;
  auto backend = make_gold_replay(s.test, Variant::prev);
  RunConfig cfg;
  cfg.variant = Variant::prev;
  cfg.seed_tag = "s7";
  auto set = run_corpus(backend, s.test, s.kb, cfg);
  set.turns[0].parsed.diagnostics.push_back(
      {ParseIssueKind::truncated_output, SegmentTag::response, "cut"});
  for (const auto& p : set.turns) {
    const std::string line = prediction_to_json(p);
    CHECK(prediction_to_json(prediction_from_json(line)) == line);
  }
  const auto dir = testing::scratch_dir("pred_rt");
  write_predictions(dir / "p.jsonl", set);
  const auto back = read_predictions(dir / "p.jsonl");
  REQUIRE(back.size() == set.turns.size());
  CHECK(back[0].seed_tag == "s7");
  CHECK(back[0].parsed.diagnostics.size() == 1);
  const auto manifest = nlohmann::json::parse(run_manifest_json(set));
  CHECK(manifest.at("corpus_checksum") == s.test.checksum());
  CHECK(manifest.dump().find("gold-replay:prev") != std::string::npos);
}

TEST_CASE("active domain prefers act domains known to the knowledge base") {
  Sample s;
  ParsedTurn p;
  p.acts = {{"general", "reqmore", "none"}, {"hotel", "inform", "name"}};
  p.belief.set("restaurant", "area", "centre");
  CHECK(active_domain(p, s.kb) == "hotel");
  p.acts = {{"general", "bye", "none"}};
  CHECK(active_domain(p, s.kb) == "restaurant");
  p.belief = {};
  CHECK_FALSE(active_domain(p, s.kb).has_value());
}

TEST_CASE("context mode names") {
  CHECK(context_mode_from_name("predicted") == ContextMode::predicted);
  CHECK(context_mode_name(ContextMode::gold) == "gold");
  CHECK_THROWS_AS(context_mode_from_name("oracle"), InvalidArgument);
}

TEST_CASE("wire backend speaks the completions protocol") {
  httplib::Server server;
  std::mutex mu;
  std::vector<nlohmann::json> bodies;
  server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    {
      std::lock_guard<std::mutex> lock(mu);
      bodies.push_back(body);
    }
    const std::string prompt = body["prompt"];
    if (prompt == "overload") {
      res.status = 503;
      return;
    }
    if (prompt == "reject") {
      res.status = 400;
      res.set_content("bad", "text/plain");
      return;
    }
    if (prompt == "garbage") {
      res.set_content("{\"choices\": []}", "application/json");
      return;
    }
    res.set_content(nlohmann::json{{"choices", {{{"text", prompt + " -> ok <|endofresponse|> x"}}}}}.dump(),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  WireBackendOptions opts;
  opts.base_url = "http://127.0.0.1:" + std::to_string(port);
  opts.model = "m1";
  opts.timeout = std::chrono::seconds(5);
  WireBackend wire(opts);
  CHECK(generate(wire, "hi", GenParams::pipeline()) == " -> ok <|endofresponse|>");
  {
    std::lock_guard<std::mutex> lock(mu);
    REQUIRE(bodies.size() == 1);
    CHECK(bodies[0]["model"] == "m1");
    CHECK(bodies[0]["temperature"] == 0.0);
    CHECK(bodies[0]["max_tokens"] == 256);
    CHECK(bodies[0]["stop"] == nlohmann::json::array({"<|endofresponse|>"}));
    CHECK_FALSE(bodies[0].contains("no_repeat_ngram_size"));
  }
  CHECK_FALSE(wire.supports(Capability::no_repeat_ngram));
  CHECK_THROWS_AS(wire.complete("overload", {}), BackendUnavailable);
  CHECK_THROWS_AS(wire.complete("reject", {}), BackendRejected);
  CHECK_THROWS_AS(wire.complete("garbage", {}), BackendRejected);

  opts.supports_no_repeat_ngram = true;
  WireBackend capable(opts);
  const auto body = nlohmann::json::parse(capable.request_body("p", GenParams::pipeline()));
  CHECK(body["no_repeat_ngram_size"] == 10);
  const auto sampled = nlohmann::json::parse(capable.request_body("p", GenParams::refinement()));
  CHECK(sampled["temperature"] == doctest::Approx(0.9));
  CHECK(sampled["max_tokens"] == 64);

  server.stop();
  th.join();
  CHECK_THROWS_AS(wire.complete("hi", {}), BackendUnavailable);
}

TEST_CASE("replay tables count conflicting duplicates") {
  ReplayBackend r;
  r.add("p", "one");
  r.add("p", "one");
  CHECK(r.conflicts() == 0);
  r.add("p", "two");
  CHECK(r.conflicts() == 1);
  CHECK(r.size() == 1);
  CHECK(r.complete("p", GenParams::pipeline()) == "two");
}
