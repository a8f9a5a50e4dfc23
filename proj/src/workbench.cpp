#include "emotod/workbench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "emotod/service.hpp"
#include "emotod/text.hpp"

namespace emotod {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path.string());
  out << content;
  if (content.empty() || content.back() != '\n') out << '\n';
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json task_json(const TaskScores& s) {
  return {{"inform", optional_json(s.inform)},
          {"success", optional_json(s.success)},
          {"jga", optional_json(s.jga)},
          {"bleu", optional_json(s.bleu)},
          {"cbe", s.cbe},
          {"unique_trigrams", s.unique_trigrams}};
}

json emotion_report_json(const EmotionReport& r) {
  json per_class = json::object();
  for (Emotion e : kAllEmotions) {
    const int i = emotion_id(e);
    per_class[std::string(canonical_name(e))] = {{"precision", r.precision[i]},
                                                 {"recall", r.recall[i]},
                                                 {"f1", r.f1[i]},
                                                 {"support", r.support[i]}};
  }
  return {{"per_class", per_class},
          {"macro_f1_excl_neutral", r.macro_f1_excl_neutral},
          {"weighted_f1_excl_neutral", r.weighted_f1_excl_neutral}};
}

json conventions() {
  return {{"bleu", "corpus BLEU-4, uniform weights, no smoothing, lowercased whitespace tokens, "
                   "delexicalized responses against gold delexicalized responses"},
          {"cbe", "conditional bigram entropy in bits, lowercased whitespace tokens, delexicalized responses"},
          {"unique_trigrams", "distinct trigrams pooled over delexicalized responses"},
          {"emotion_macro", "mean over the six non-neutral classes"},
          {"emotion_weighted", "non-neutral classes weighted by gold support"},
          {"significance",
           "two-sided paired t-test over seeds at p < 0.05; best vs second best, else second vs third"}};
}

fs::path predictions_path(const Config& c, Variant v, const std::string& seed) {
  return c.output_dir / "predictions" / std::string(variant_name(v)) / (seed + ".jsonl");
}

fs::path refined_path(const Config& c, Variant v, const std::string& seed) {
  return c.output_dir / "refined" / std::string(variant_name(v)) / (seed + ".jsonl");
}

DialogueCorpus load_split(const Config& c) {
  return load_corpus(c.corpus_dir, c.split, load_normalizer(c.corpus_dir));
}

KnowledgeBase load_kb(const Config& c) {
  return load_knowledge_base(c.kb_path(), load_normalizer(c.corpus_dir));
}

}  // namespace

// ---------------------------------------------------------------- scoring

GoldIndex::GoldIndex(const DialogueCorpus& corpus) : corpus_(corpus) {}

const Turn& GoldIndex::at(const std::string& dialogue_id, std::size_t turn) const {
  const Dialogue* d = corpus_.find(dialogue_id);
  if (!d) throw SchemaError("prediction for unknown dialogue " + dialogue_id);
  if (turn >= d->turns.size()) {
    throw SchemaError("prediction for unknown turn " + dialogue_id + "#" + std::to_string(turn));
  }
  return d->turns[turn];
}

std::map<std::string, Goal> GoldIndex::goals() const {
  std::map<std::string, Goal> out;
  for (const auto& d : corpus_.dialogues()) out.emplace(d.id, d.goal);
  return out;
}

EmotionReport score_emotions(const std::vector<TurnPrediction>& predictions, const GoldIndex& gold) {
  std::vector<Emotion> preds;
  std::vector<Emotion> golds;
  for (const auto& p : predictions) {
    preds.push_back(p.parsed.emotion);
    golds.push_back(gold.at(p.dialogue_id, p.turn_index).user_emotion);
  }
  return emotion_f1(preds, golds);
}

TaskScores score_task(const std::vector<TurnPrediction>& predictions, const GoldIndex& gold,
                      const KnowledgeBase& kb) {
  std::vector<BeliefState> pred_beliefs;
  std::vector<BeliefState> gold_beliefs;
  std::vector<std::string> hyps;
  std::vector<std::string> refs;
  for (const auto& p : predictions) {
    const Turn& g = gold.at(p.dialogue_id, p.turn_index);
    pred_beliefs.push_back(p.parsed.belief);
    gold_beliefs.push_back(g.belief);
    hyps.push_back(p.parsed.response_delex);
    refs.push_back(g.system_response_delex);
  }
  TaskScores s;
  s.jga = joint_goal_accuracy(pred_beliefs, gold_beliefs, kb.normalization());
  if (auto is = inform_success(predictions, gold.goals(), kb)) {
    s.inform = is->inform;
    s.success = is->success;
  }
  s.bleu = corpus_bleu(hyps, refs);
  s.cbe = conditional_bigram_entropy(hyps);
  s.unique_trigrams = unique_trigrams(hyps);
  return s;
}

std::size_t diagnostic_count(const std::vector<TurnPrediction>& predictions) {
  std::size_t n = 0;
  for (const auto& p : predictions) n += p.parsed.diagnostics.size();
  return n;
}

// ---------------------------------------------------------------- prepare

PrepareSummary cmd_prepare(const Config& config, std::optional<Split> split, std::ostream& log) {
  if (config.corpus_dir.empty()) throw SchemaError("no corpus_dir configured");
  if (!fs::is_directory(config.corpus_dir)) {
    throw SchemaError("corpus directory not found: " + config.corpus_dir.string());
  }
  const Normalizer norm = load_normalizer(config.corpus_dir);
  std::vector<Split> splits;
  if (split) {
    splits.push_back(*split);
  } else {
    splits.assign(kAllSplits.begin(), kAllSplits.end());
  }
  PrepareSummary summary;
  for (Split s : splits) {
    const DialogueCorpus corpus = load_corpus(config.corpus_dir, s, norm);
    for (Variant v : config.variants) {
      const fs::path dir = config.output_dir / "sequences" / std::string(variant_name(v));
      fs::create_directories(dir);
      std::ofstream seq(dir / (std::string(split_name(s)) + ".txt"), std::ios::binary);
      std::ofstream idx(dir / (std::string(split_name(s)) + ".index.jsonl"), std::ios::binary);
      if (!seq || !idx) throw SchemaError("cannot write sequences under " + dir.string());
      std::size_t line = 0;
      for (const auto& d : corpus.dialogues()) {
        for (std::size_t t = 0; t < d.turns.size(); ++t) {
          seq << build_training_sequence(d, t, v).text << '\n';
          idx << json{{"line", line}, {"dialogue_id", d.id}, {"turn_index", t}}.dump() << '\n';
          ++line;
        }
      }
      summary.counts[{v, s}] = line;
      log << variant_name(v) << ' ' << split_name(s) << ": " << line << " sequences\n";
    }
  }
  return summary;
}

// ---------------------------------------------------------------- evaluate

std::string system_label(Variant variant, const std::string& group) {
  std::string name = text::to_lower(variant_name(variant));
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return group.empty() ? name : name + "-" + group;
}

EvaluationReport assemble_report(std::vector<SystemEvaluation> systems, const std::string& group) {
  EvaluationReport report;
  ScoreTable emo;
  emo.title = "Emotion F1 (mean over seeds)";
  emo.columns = emotion_columns();
  ScoreTable task;
  task.title = "Task metrics (mean over seeds)";
  task.columns = task_columns();
  for (const auto& s : systems) {
    ScoreRow trow{s.system, group, std::vector<std::vector<double>>(task.columns.size())};
    ScoreRow erow{s.system, group, std::vector<std::vector<double>>(emo.columns.size())};
    for (const auto& seed : s.seeds) {
      const auto tv = task_row_values(seed.task);
      for (std::size_t c = 0; c < tv.size(); ++c) trow.values[c].push_back(tv[c]);
      const auto ev = emotion_row_values(seed.emotions);
      for (std::size_t c = 0; c < ev.size(); ++c) erow.values[c].push_back(ev[c]);
    }
    task.rows.push_back(std::move(trow));
    if (has_emotion_segment(s.variant)) emo.rows.push_back(std::move(erow));
  }
  report.emotion_table = mark_table(emo);
  report.task_table = mark_table(task);
  report.systems = std::move(systems);
  return report;
}

std::string evaluation_report_to_json(const EvaluationReport& report) {
  json j;
  j["systems"] = json::array();
  for (const auto& s : report.systems) {
    json seeds = json::array();
    for (const auto& seed : s.seeds) {
      seeds.push_back({{"seed_tag", seed.seed_tag},
                       {"turns", seed.turns},
                       {"diagnostics", seed.diagnostics},
                       {"failures", seed.failures},
                       {"task", task_json(seed.task)},
                       {"emotion", has_emotion_segment(s.variant) ? emotion_report_json(seed.emotions)
                                                                  : json(nullptr)}});
    }
    j["systems"].push_back({{"system", s.system}, {"variant", variant_name(s.variant)}, {"seeds", seeds}});
  }
  j["emotion_table"] = json::parse(table_to_json(report.emotion_table));
  j["task_table"] = json::parse(table_to_json(report.task_table));
  j["conventions"] = conventions();
  return j.dump(2);
}

std::string render_evaluation_report(const EvaluationReport& report) {
  std::string out;
  if (!report.emotion_table.rows.empty()) out += render_text(report.emotion_table) + "\n";
  out += render_text(report.task_table);
  const auto render_tests = [&](const MarkedTable& t) {
    for (const auto& c : t.comparisons) {
      out += "  " + t.columns[c.column].name + ": " + c.first + " vs " + c.second +
             (c.fallback ? " (fallback)" : "") + "  t=" +
             (std::isinf(c.test.t) ? std::string(c.test.t > 0 ? "inf" : "-inf") : format_value(c.test.t, 4)) +
             " p=" + format_value(c.test.p, 4) + (c.significant ? " *" : "") + "\n";
    }
  };
  if (!report.emotion_table.comparisons.empty() || !report.task_table.comparisons.empty()) {
    out += "\nPaired t-tests over seeds\n";
    render_tests(report.emotion_table);
    render_tests(report.task_table);
  }
  return out;
}

EvaluationReport cmd_evaluate(const Config& config, std::ostream& log) {
  const DialogueCorpus corpus = load_split(config);
  const KnowledgeBase kb = load_kb(config);
  const GoldIndex gold(corpus);
  std::vector<SystemEvaluation> systems;
  for (Variant v : config.variants) {
    SystemEvaluation sys;
    sys.system = system_label(v, config.group);
    sys.variant = v;
    for (const auto& seed : config.seed_tags) {
      auto backend = make_backend(config.backend, corpus, v);
      RunConfig rc;
      rc.variant = v;
      rc.context_mode = config.context_mode;
      rc.gen = config.decoding;
      rc.parallelism = config.parallelism;
      rc.seed_tag = seed;
      rc.max_retries = config.max_retries;
      rc.max_failure_rate = config.max_failure_rate;
      const PredictionSet set = run_corpus(*backend, corpus, kb, rc);

      const fs::path path = predictions_path(config, v, seed);
      fs::create_directories(path.parent_path());
      write_predictions(path, set);
      fs::path manifest = path;
      manifest.replace_extension(".manifest.json");
      write_file(manifest, run_manifest_json(set));

      SeedResult r;
      r.seed_tag = seed;
      r.emotions = score_emotions(set.turns, gold);
      r.task = score_task(set.turns, gold, kb);
      r.turns = set.turns.size();
      r.diagnostics = diagnostic_count(set.turns);
      r.failures = set.failures.size();
      for (const auto& w : set.warnings) log << "warning: " << w << '\n';
      log << sys.system << ' ' << seed << ": " << r.turns << " turns, " << r.diagnostics
          << " parse diagnostics, " << r.failures << " failed dialogues\n";
      sys.seeds.push_back(std::move(r));
    }
    systems.push_back(std::move(sys));
  }
  EvaluationReport report = assemble_report(std::move(systems), config.group);
  write_file(config.output_dir / "report" / "evaluation.json", evaluation_report_to_json(report));
  const std::string text = render_evaluation_report(report);
  write_file(config.output_dir / "report" / "evaluation.txt", text);
  log << text;
  return report;
}

// ---------------------------------------------------------------- refine

RefineSummary summarize_refinement(const std::vector<RefinedPrediction>& refined,
                                   const GoldIndex& gold, const KnowledgeBase& kb) {
  RefineSummary s;
  std::vector<TurnPrediction> before;
  std::vector<TurnPrediction> after;
  for (const auto& r : refined) {
    ++s.turns;
    switch (r.filtered_reason) {
      case FilterReason::none:
        ++s.prepended;
        break;
      case FilterReason::too_similar:
        ++s.filtered_too_similar;
        break;
      case FilterReason::neutral_emotion:
        ++s.neutral_skipped;
        break;
      case FilterReason::empty_snippet:
        ++s.empty_snippet;
        break;
      case FilterReason::backend_error:
        ++s.backend_error;
        break;
    }
    before.push_back(r.base);
    TurnPrediction p = r.base;
    p.parsed.response_delex = r.response_refined;
    p.response_lex = r.response_refined_lex;
    after.push_back(std::move(p));
  }
  s.before = score_task(before, gold, kb);
  s.after = score_task(after, gold, kb);
  return s;
}

std::string refine_summary_to_json(const RefineSummary& s) {
  return json{{"turns", s.turns},
              {"prepended", s.prepended},
              {"filtered_too_similar", s.filtered_too_similar},
              {"neutral_skipped", s.neutral_skipped},
              {"empty_snippet", s.empty_snippet},
              {"backend_error", s.backend_error},
              {"before", task_json(s.before)},
              {"after", task_json(s.after)},
              {"conventions", conventions()}}
      .dump(2);
}

RefineSummary cmd_refine(const Config& config, std::ostream& log) {
  const DialogueCorpus corpus = load_split(config);
  const KnowledgeBase kb = load_kb(config);
  const std::string seed = config.refine_seed_tag.empty() ? config.seed_tags.front() : config.refine_seed_tag;
  const Variant v = config.refine_variant;
  const auto predictions = read_predictions(predictions_path(config, v, seed));
  const ExemplarSet exemplars =
      config.exemplars.empty() ? default_exemplars() : load_exemplars(config.exemplars);
  auto backend = make_backend(config.refine_backend, corpus, v);
  const auto refined = refine_all(*backend, predictions, exemplars, config.refine_decoding,
                                  config.parallelism);

  const fs::path out = refined_path(config, v, seed);
  fs::create_directories(out.parent_path());
  {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw SchemaError("cannot write " + out.string());
    for (const auto& r : refined) f << refined_to_json(r) << '\n';
  }
  const RefineSummary summary = summarize_refinement(refined, GoldIndex(corpus), kb);
  write_file(config.output_dir / "report" / "refine.json", refine_summary_to_json(summary));
  log << "refined " << summary.turns << " turns: " << summary.prepended << " prepended, "
      << summary.filtered_too_similar << " filtered_too_similar, " << summary.neutral_skipped
      << " neutral_skipped, " << summary.empty_snippet << " empty_snippet, " << summary.backend_error
      << " backend_error\n";
  for (const auto& r : refined) {
    if (!r.diagnostic.empty()) {
      log << "  " << r.base.dialogue_id << '#' << r.base.turn_index << ": " << r.diagnostic << '\n';
    }
  }
  return summary;
}

// ---------------------------------------------------------------- report

std::string render_reference_tables(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("reference tables: ") + e.what());
  }
  std::string out;
  if (doc.contains("label_stats")) {
    const auto counts = doc["label_stats"].at("counts").get<std::vector<std::size_t>>();
    if (counts.size() != kEmotionCount) throw SchemaError("reference tables: need 7 label counts");
    LabelStats stats;
    std::size_t total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      stats.counts[i] = counts[i];
      total += counts[i];
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
      stats.proportions[i] = total ? static_cast<double>(counts[i]) / static_cast<double>(total) : 0.0;
    }
    out += "Emotion label statistics\n" + render_label_stats(stats) + "\n";
  }
  for (const char* key : {"emotion", "task", "ranking"}) {
    if (doc.contains(key)) out += render_text(table_from_json(doc[key].dump())) + "\n";
  }
  return out;
}

void cmd_report(const Config& config, const std::optional<fs::path>& reference, std::ostream& out) {
  bool any = false;
  if (!config.corpus_dir.empty() && fs::is_directory(config.corpus_dir)) {
    const DialogueCorpus full = load_full_corpus(config.corpus_dir);
    out << "Emotion label statistics (all splits)\n" << render_label_stats(label_stats(full)) << '\n';
    any = true;
  }
  const fs::path eval = config.output_dir / "report" / "evaluation.json";
  if (fs::exists(eval)) {
    const json doc = json::parse(read_file(eval));
    EvaluationReport report;
    report.emotion_table = table_from_json(doc.at("emotion_table").dump());
    report.task_table = table_from_json(doc.at("task_table").dump());
    out << render_evaluation_report(report) << '\n';
    any = true;
  }
  if (fs::exists(config.store_path())) {
    const AnnotationStore store(config.store_path());
    const auto snap = store.snapshot();
    if (!snap->empty()) {
      out << render_rank_report(rank_summary(*snap)) << '\n';
      any = true;
    }
  }
  if (reference) {
    out << render_reference_tables(read_file(*reference));
    any = true;
  }
  if (!any) out << "nothing to report under " << config.output_dir.string() << '\n';
}

// ---------------------------------------------------------------- human evaluation

EvalSample cmd_sample_eval(const Config& config, std::ostream& log) {
  if (config.systems.size() != 3) {
    throw SchemaError("human_eval.systems must list exactly 3 prediction files");
  }
  const DialogueCorpus corpus = load_split(config);
  std::vector<SystemPredictions> systems;
  for (const auto& s : config.systems) systems.push_back(read_system_predictions(s.name, s.predictions));
  EvalSample sample = sample_human_eval(corpus, systems, config.sample_size, config.sample_seed);
  write_file(config.examples_path(), eval_examples_to_json(sample.examples));
  fs::path manifest = config.examples_path();
  manifest.replace_extension(".manifest.json");
  write_file(manifest, sample_manifest_to_json(sample.manifest));
  for (const auto& q : sample.manifest.quotas) {
    log << canonical_name(q.category) << ": " << q.drawn << " drawn (" << q.available
        << " available, planned " << q.planned << ")\n";
  }
  log << sample.examples.size() << " examples written to " << config.examples_path().string() << '\n';
  return sample;
}

int cmd_serve_eval(const Config& config, std::ostream& log) {
  auto examples = eval_examples_from_json(read_file(config.examples_path()));
  AnnotationStore store(config.store_path());
  AnnotationService service(store, std::move(examples), config.ui_dir);
  log << "serving " << config.examples_path().string() << " on http://" << config.host << ':'
      << config.port << " (rankings in " << config.store_path().string() << ")" << std::endl;
  return service.listen(config.host, config.port) ? 0 : 1;
}

}  // namespace emotod
