#include "emotod/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace emotod {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw SchemaError("config: " + where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw SchemaError("config: unknown key '" + key + "' in " + where);
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.empty() || path.is_absolute() || base.empty()) return path;
  return base / path;
}

BackendConfig parse_backend(const json& j, const std::filesystem::path& base) {
  check_keys(j,
             {"kind", "url", "path", "model", "replay_file", "text", "supports_no_repeat_ngram",
              "timeout_seconds", "max_concurrency"},
             "backend");
  BackendConfig b;
  b.kind = j.value("kind", b.kind);
  static const std::set<std::string> kinds{"wire", "gold-replay", "replay", "fixed"};
  if (!kinds.count(b.kind)) throw SchemaError("config: unknown backend kind '" + b.kind + "'");
  b.url = j.value("url", b.url);
  b.path = j.value("path", b.path);
  b.model = j.value("model", b.model);
  if (j.contains("replay_file")) b.replay_file = resolve(base, j["replay_file"].get<std::string>());
  b.text = j.value("text", b.text);
  b.supports_no_repeat_ngram = j.value("supports_no_repeat_ngram", b.supports_no_repeat_ngram);
  b.timeout_seconds = j.value("timeout_seconds", b.timeout_seconds);
  if (j.contains("max_concurrency") && !j["max_concurrency"].is_null()) {
    b.max_concurrency = j["max_concurrency"].get<std::size_t>();
  }
  return b;
}

void parse_decoding(const json& j, GenParams& p) {
  check_keys(j, {"mode", "temperature", "max_new_tokens", "no_repeat_ngram", "stop"}, "decoding");
  if (j.contains("mode")) {
    const auto mode = j["mode"].get<std::string>();
    if (mode == "greedy") {
      p.mode = DecodeMode::greedy;
    } else if (mode == "sample") {
      p.mode = DecodeMode::sample;
    } else {
      throw SchemaError("config: decoding mode must be greedy or sample");
    }
  }
  p.temperature = j.value("temperature", p.temperature);
  p.max_new_tokens = j.value("max_new_tokens", p.max_new_tokens);
  if (j.contains("no_repeat_ngram")) {
    if (j["no_repeat_ngram"].is_null()) {
      p.no_repeat_ngram.reset();
    } else {
      p.no_repeat_ngram = j["no_repeat_ngram"].get<std::size_t>();
    }
  }
  if (j.contains("stop")) p.stop_sequences = j["stop"].get<std::vector<std::string>>();
}

json backend_json(const BackendConfig& b) {
  return {{"kind", b.kind},
          {"url", b.url},
          {"path", b.path},
          {"model", b.model},
          {"replay_file", b.replay_file.string()},
          {"text", b.text},
          {"supports_no_repeat_ngram", b.supports_no_repeat_ngram},
          {"timeout_seconds", b.timeout_seconds},
          {"max_concurrency", b.max_concurrency ? json(*b.max_concurrency) : json(nullptr)}};
}

json decoding_json(const GenParams& p) {
  return {{"mode", p.mode == DecodeMode::greedy ? "greedy" : "sample"},
          {"temperature", p.temperature},
          {"max_new_tokens", p.max_new_tokens},
          {"no_repeat_ngram", p.no_repeat_ngram ? json(*p.no_repeat_ngram) : json(nullptr)},
          {"stop", p.stop_sequences}};
}

}  // namespace

std::filesystem::path Config::kb_path() const {
  if (!kb_dir.empty()) return kb_dir;
  return corpus_dir.parent_path() / "kb";
}

std::filesystem::path Config::store_path() const {
  return store.empty() ? output_dir / "rankings.jsonl" : store;
}

std::filesystem::path Config::examples_path() const {
  return examples.empty() ? output_dir / "eval_examples.json" : examples;
}

Config parse_config(const std::string& json_text, const std::filesystem::path& base) {
  Config c;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
  try {
    check_keys(j,
               {"corpus_dir", "kb_dir", "output_dir", "variant", "variants", "context_mode", "split",
                "seed_tags", "parallelism", "max_retries", "max_failure_rate", "group", "backend",
                "decoding", "refine", "human_eval", "service"},
               "config");
    if (j.contains("corpus_dir")) c.corpus_dir = resolve(base, j["corpus_dir"].get<std::string>());
    if (j.contains("kb_dir")) c.kb_dir = resolve(base, j["kb_dir"].get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(base, j["output_dir"].get<std::string>());
    if (j.contains("variant")) c.variants = {variant_from_name(j["variant"].get<std::string>())};
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j["variants"]) c.variants.push_back(variant_from_name(v.get<std::string>()));
    }
    if (j.contains("context_mode")) {
      c.context_mode = context_mode_from_name(j["context_mode"].get<std::string>());
    }
    if (j.contains("split")) c.split = split_from_name(j["split"].get<std::string>());
    if (j.contains("seed_tags")) c.seed_tags = j["seed_tags"].get<std::vector<std::string>>();
    c.parallelism = j.value("parallelism", c.parallelism);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_failure_rate = j.value("max_failure_rate", c.max_failure_rate);
    c.group = j.value("group", c.group);
    if (j.contains("backend")) c.backend = parse_backend(j["backend"], base);
    if (j.contains("decoding")) parse_decoding(j["decoding"], c.decoding);
    if (j.contains("refine")) {
      const auto& r = j["refine"];
      check_keys(r, {"backend", "decoding", "exemplars", "variant", "seed_tag"}, "refine");
      if (r.contains("backend")) c.refine_backend = parse_backend(r["backend"], base);
      if (r.contains("decoding")) parse_decoding(r["decoding"], c.refine_decoding);
      if (r.contains("exemplars")) c.exemplars = resolve(base, r["exemplars"].get<std::string>());
      if (r.contains("variant")) c.refine_variant = variant_from_name(r["variant"].get<std::string>());
      c.refine_seed_tag = r.value("seed_tag", c.refine_seed_tag);
    }
    if (j.contains("human_eval")) {
      const auto& h = j["human_eval"];
      check_keys(h, {"systems", "sample_size", "seed"}, "human_eval");
      if (h.contains("systems")) {
        for (const auto& s : h["systems"]) {
          check_keys(s, {"name", "predictions"}, "human_eval.systems");
          c.systems.push_back({s.at("name").get<std::string>(),
                               resolve(base, s.at("predictions").get<std::string>())});
        }
      }
      c.sample_size = h.value("sample_size", c.sample_size);
      c.sample_seed = h.value("seed", c.sample_seed);
    }
    if (j.contains("service")) {
      const auto& s = j["service"];
      check_keys(s, {"host", "port", "store", "examples", "ui_dir"}, "service");
      c.host = s.value("host", c.host);
      c.port = s.value("port", c.port);
      if (s.contains("store")) c.store = resolve(base, s["store"].get<std::string>());
      if (s.contains("examples")) c.examples = resolve(base, s["examples"].get<std::string>());
      if (s.contains("ui_dir")) c.ui_dir = resolve(base, s["ui_dir"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
  if (c.seed_tags.empty()) throw SchemaError("config: seed_tags must not be empty");
  if (c.variants.empty()) throw SchemaError("config: no variant configured");
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string config_to_json(const Config& c) {
  json j;
  j["corpus_dir"] = c.corpus_dir.string();
  j["kb_dir"] = c.kb_path().string();
  j["output_dir"] = c.output_dir.string();
  j["variants"] = json::array();
  for (Variant v : c.variants) j["variants"].push_back(variant_name(v));
  j["context_mode"] = context_mode_name(c.context_mode);
  j["split"] = split_name(c.split);
  j["seed_tags"] = c.seed_tags;
  j["parallelism"] = c.parallelism;
  j["max_retries"] = c.max_retries;
  j["max_failure_rate"] = c.max_failure_rate;
  j["group"] = c.group;
  j["backend"] = backend_json(c.backend);
  j["decoding"] = decoding_json(c.decoding);
  j["refine"] = {{"backend", backend_json(c.refine_backend)},
                 {"decoding", decoding_json(c.refine_decoding)},
                 {"exemplars", c.exemplars.string()},
                 {"variant", variant_name(c.refine_variant)},
                 {"seed_tag", c.refine_seed_tag}};
  json systems = json::array();
  for (const auto& s : c.systems) systems.push_back({{"name", s.name}, {"predictions", s.predictions.string()}});
  j["human_eval"] = {{"systems", systems}, {"sample_size", c.sample_size}, {"seed", c.sample_seed}};
  j["service"] = {{"host", c.host},
                  {"port", c.port},
                  {"store", c.store_path().string()},
                  {"examples", c.examples_path().string()},
                  {"ui_dir", c.ui_dir.string()}};
  return j.dump(2);
}

namespace {

class FixedBackend : public GenerationBackend {
 public:
  explicit FixedBackend(std::string text) : text_(std::move(text)) {}
  std::string complete(std::string_view, const GenParams&) override { return text_; }
  bool supports(Capability) const override { return true; }
  bool deterministic() const override { return true; }
  std::string identity() const override { return "fixed"; }

 private:
  std::string text_;
};

}  // namespace

std::unique_ptr<GenerationBackend> make_backend(const BackendConfig& b, const DialogueCorpus& corpus,
                                                Variant variant) {
  if (b.kind == "gold-replay") {
    return std::make_unique<ReplayBackend>(make_gold_replay(corpus, variant));
  }
  if (b.kind == "replay") {
    if (b.replay_file.empty()) throw SchemaError("config: replay backend needs replay_file");
    return std::make_unique<ReplayBackend>(ReplayBackend::from_file(b.replay_file));
  }
  if (b.kind == "fixed") return std::make_unique<FixedBackend>(b.text);
  WireBackendOptions o;
  o.base_url = b.url;
  o.path = b.path;
  o.model = b.model;
  o.timeout = std::chrono::seconds(b.timeout_seconds);
  o.supports_no_repeat_ngram = b.supports_no_repeat_ngram;
  o.max_concurrency = b.max_concurrency;
  return std::make_unique<WireBackend>(o);
}

}  // namespace emotod
