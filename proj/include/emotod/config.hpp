#pragma once

#include <cstddef>
#include <filesystem>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emotod/corpus.hpp"
#include "emotod/generation.hpp"
#include "emotod/sequencer.hpp"

namespace emotod {

/// Where generations come from.
///   wire         completions endpoint at url
///   gold-replay  gold continuation for every gold-context prompt of the split
///   replay       {prompt_key: continuation} table in replay_file
///   fixed        always answers `text`
struct BackendConfig {
  std::string kind = "wire";
  std::string url = "http://127.0.0.1:8000";
  std::string path = "/v1/completions";
  std::string model = "default";
  std::filesystem::path replay_file;
  std::string text;
  bool supports_no_repeat_ngram = false;
  std::size_t timeout_seconds = 120;
  std::optional<std::size_t> max_concurrency;
};

struct SystemSource {
  std::string name;
  std::filesystem::path predictions;  // prediction or refined-prediction file
};

struct Config {
  std::filesystem::path corpus_dir;
  std::filesystem::path kb_dir;  // defaults to corpus_dir/../kb when empty
  std::filesystem::path output_dir = "emotod_out";

  std::vector<Variant> variants{Variant::prev};
  ContextMode context_mode = ContextMode::gold;
  Split split = Split::test;
  std::vector<std::string> seed_tags{"seed0"};
  std::size_t parallelism = 1;
  std::size_t max_retries = 2;
  double max_failure_rate = 0.0;
  std::string group = "";  // table group label, e.g. the model family

  BackendConfig backend;
  GenParams decoding = GenParams::pipeline();

  BackendConfig refine_backend;
  GenParams refine_decoding = GenParams::refinement();
  std::filesystem::path exemplars;  // empty: built-in fixture
  Variant refine_variant = Variant::prev;
  std::string refine_seed_tag;      // empty: first seed tag

  std::vector<SystemSource> systems;  // human evaluation, in fixed order
  std::size_t sample_size = 60;
  std::uint64_t sample_seed = 13;

  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path store;     // defaults to output_dir/rankings.jsonl
  std::filesystem::path examples;  // defaults to output_dir/eval_examples.json
  std::filesystem::path ui_dir;

  std::filesystem::path kb_path() const;
  std::filesystem::path store_path() const;
  std::filesystem::path examples_path() const;
};

/// Single JSON document; unknown keys are rejected. Relative paths resolve
/// against the file's directory.
Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});

/// Echo of every setting, for run manifests.
std::string config_to_json(const Config& config);

std::unique_ptr<GenerationBackend> make_backend(const BackendConfig& backend,
                                                const DialogueCorpus& corpus, Variant variant);

}  // namespace emotod
