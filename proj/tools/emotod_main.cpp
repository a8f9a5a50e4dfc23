#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emotod/workbench.hpp"

namespace {

struct Overrides {
  std::string config;
  std::vector<std::string> variants;
  std::string context_mode;
  std::string backend_url;
  std::vector<std::string> seed_tags;
  std::optional<std::size_t> parallelism;
  std::string corpus;
  std::string kb;
  std::string out;
};

emotod::Config resolve(const Overrides& o) {
  emotod::Config c = o.config.empty() ? emotod::Config{} : emotod::load_config(o.config);
  if (!o.corpus.empty()) c.corpus_dir = o.corpus;
  if (!o.kb.empty()) c.kb_dir = o.kb;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.variants.empty()) {
    c.variants.clear();
    for (const auto& v : o.variants) c.variants.push_back(emotod::variant_from_name(v));
    c.refine_variant = c.variants.front();
  }
  if (!o.context_mode.empty()) c.context_mode = emotod::context_mode_from_name(o.context_mode);
  if (!o.backend_url.empty()) {
    c.backend.kind = "wire";
    c.backend.url = o.backend_url;
    c.refine_backend.kind = "wire";
    c.refine_backend.url = o.backend_url;
  }
  if (!o.seed_tags.empty()) {
    c.seed_tags = o.seed_tags;
    c.refine_seed_tag = o.seed_tags.front();
  }
  if (o.parallelism) c.parallelism = *o.parallelism;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion-aware task-oriented dialogue workbench"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  std::size_t parallelism = 0;
  app.add_option("--config", o.config, "JSON configuration file");
  app.add_option("--variant", o.variants, "simple, emo or prev (repeatable)")
      ->check(CLI::IsMember({"simple", "emo", "prev"}, CLI::ignore_case));
  app.add_option("--context-mode", o.context_mode, "gold or predicted")
      ->check(CLI::IsMember({"gold", "predicted"}, CLI::ignore_case));
  app.add_option("--backend-url", o.backend_url, "completions endpoint base URL");
  app.add_option("--seed-tag", o.seed_tags, "seed tag (repeatable)");
  auto* par = app.add_option("--parallelism", parallelism, "concurrent dialogues")->check(CLI::PositiveNumber);
  app.add_option("--corpus", o.corpus, "corpus directory");
  app.add_option("--kb", o.kb, "knowledge base directory");
  app.add_option("--out", o.out, "output directory");

  auto* prepare = app.add_subcommand("prepare", "write training sequences");
  std::string split;
  prepare->add_option("--split", split, "train, validation or test (default: all)");

  app.add_subcommand("evaluate", "run the pipeline and score it");
  app.add_subcommand("refine", "prepend emotion-aware snippets to predictions");

  auto* report = app.add_subcommand("report", "render available tables");
  std::string reference;
  report->add_option("--reference", reference, "reference table file");

  app.add_subcommand("sample-eval", "draw human evaluation examples");

  auto* serve = app.add_subcommand("serve-eval", "serve the ranking endpoints");
  std::string host;
  int port = -1;
  std::string ui_dir;
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port");
  serve->add_option("--ui-dir", ui_dir, "static files mounted at /");

  CLI11_PARSE(app, argc, argv);
  if (*par) o.parallelism = parallelism;

  try {
    emotod::Config config = resolve(o);
    if (*prepare) {
      std::optional<emotod::Split> s;
      if (!split.empty()) s = emotod::split_from_name(split);
      emotod::cmd_prepare(config, s, std::cout);
    } else if (app.got_subcommand("evaluate")) {
      emotod::cmd_evaluate(config, std::cout);
    } else if (app.got_subcommand("refine")) {
      emotod::cmd_refine(config, std::cout);
    } else if (*report) {
      std::optional<std::filesystem::path> ref;
      if (!reference.empty()) ref = reference;
      emotod::cmd_report(config, ref, std::cout);
    } else if (app.got_subcommand("sample-eval")) {
      emotod::cmd_sample_eval(config, std::cout);
    } else if (*serve) {
      if (!host.empty()) config.host = host;
      if (port >= 0) config.port = port;
      if (!ui_dir.empty()) config.ui_dir = ui_dir;
      return emotod::cmd_serve_eval(config, std::cout);
    }
  } catch (const emotod::SchemaError& e) {
    std::cerr << "SchemaError: " << e.what() << '\n';
    return 2;
  } catch (const emotod::InvalidArgument& e) {
    std::cerr << "InvalidArgument: " << e.what() << '\n';
    return 2;
  } catch (const emotod::RunFailed& e) {
    std::cerr << "RunFailed: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
