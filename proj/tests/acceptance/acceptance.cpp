// Acceptance suite. One PASS/FAIL line per criterion; exit status 1 when any
// selected criterion fails.
//
//   emotod_acceptance [--only NAME]... [--list]
//
// EMOWOZ_CORPUS_DIR points at a corpus directory converted from the EmoWOZ
// MultiWOZ portion (knowledge base in EMOWOZ_KB_DIR, default <corpus>/../kb).
// Without it, dataset_statistics fails and the corpus-wide criteria run on a
// synthetic corpus with the same label counts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "emotod/corpus.hpp"
#include "emotod/generation.hpp"
#include "emotod/knowledge_base.hpp"
#include "emotod/metrics.hpp"
#include "emotod/output_parser.hpp"
#include "emotod/refinement.hpp"
#include "emotod/report.hpp"
#include "emotod/sequencer.hpp"
#include "emotod/text.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace emotod;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- tolerances

constexpr double kWeightedTarget = 85.2;
constexpr double kWeightedTol = 0.5;
constexpr double kMeanRankTol = 0.01;
constexpr double kCbeTol = 1e-9;
constexpr double kTTestTol = 1e-6;
constexpr double kKappaTol = 1e-12;
constexpr std::size_t kLevenshteinMaxLen = 12;
constexpr std::size_t kFuzzCases = 10000;

// ---------------------------------------------------------------- published values

constexpr std::array<std::size_t, kEmotionCount> kTable1Counts = {51426, 381, 914, 838, 44, 860, 17061};
const std::array<std::string, kEmotionCount> kTable1Proportions = {"71.9", "0.5", "1.3", "1.2",
                                                                  "0.1",  "1.2", "23.8"};
// PREV-llama per-class F1, non-neutral classes in id order
constexpr std::array<double, 6> kPrevLlamaF1 = {55.2, 37.9, 74.2, 36.7, 44.0, 91.1};

struct RankRow {
  const char* system;
  std::array<double, 3> percent;
  double mean_rank;
};
constexpr std::array<RankRow, 3> kTable4 = {{{"SIMPLE", {35.56, 40.56, 23.89}, 1.88},
                                             {"PREV", {40.0, 51.67, 8.33}, 1.68},
                                             {"REFINE", {70.0, 22.22, 7.78}, 1.38}}};

// ---------------------------------------------------------------- plumbing

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int decimals) { return format_value(v, decimals); }

struct Data {
  std::string source;  // "EmoWOZ" or "synthetic"
  std::map<Split, DialogueCorpus> splits;
  KnowledgeBase kb;
};

std::optional<fs::path> emowoz_dir() {
  const char* env = std::getenv("EMOWOZ_CORPUS_DIR");
  if (!env || !*env) return std::nullopt;
  return fs::path(env);
}

const Data& data() {
  static const Data d = [] {
    Data out;
    if (auto dir = emowoz_dir()) {
      out.source = "EmoWOZ";
      const Normalizer norm = load_normalizer(*dir);
      for (Split s : kAllSplits) out.splits.emplace(s, load_corpus(*dir, s, norm));
      const char* kb_env = std::getenv("EMOWOZ_KB_DIR");
      const fs::path kb_dir = kb_env && *kb_env ? fs::path(kb_env) : dir->parent_path() / "kb";
      out.kb = load_knowledge_base(kb_dir, norm);
    } else {
      out.source = "synthetic";
      auto synth = testing::make_synthetic({.emotion_counts = testing::kEmowozCounts});
      for (Split s : kAllSplits) out.splits.emplace(s, synth.split(s));
      out.kb = std::move(synth.kb);
    }
    return out;
  }();
  return d;
}

std::string source_note() { return " [" + data().source + " corpus]"; }

// ---------------------------------------------------------------- criteria

Outcome dataset_statistics() {
  const auto dir = emowoz_dir();
  if (!dir) return {false, "EmoWOZ corpus unavailable: set EMOWOZ_CORPUS_DIR"};
  if (!fs::is_directory(*dir)) return {false, "EMOWOZ_CORPUS_DIR is not a directory: " + dir->string()};
  const LabelStats stats = label_stats(load_full_corpus(*dir));
  bool ok = true;
  std::string counts, props;
  for (std::size_t i = 0; i < kEmotionCount; ++i) {
    const std::string p = fmt(100.0 * stats.proportions[i], 1);
    ok = ok && stats.counts[i] == kTable1Counts[i] && p == kTable1Proportions[i];
    counts += (i ? "/" : "") + std::to_string(stats.counts[i]);
    props += (i ? "/" : "") + p;
  }
  return {ok, "counts " + counts + ", proportions " + props};
}

Outcome weighted_average_consistency() {
  std::vector<double> f1(kPrevLlamaF1.begin(), kPrevLlamaF1.end());
  std::vector<double> support;
  for (Emotion e : kNonNeutralEmotions) support.push_back(static_cast<double>(kTable1Counts[emotion_id(e)]));
  const double w = weighted_average(f1, support);
  return {std::fabs(w - kWeightedTarget) <= kWeightedTol,
          "weighted F1 " + fmt(w, 2) + " vs " + fmt(kWeightedTarget, 1) + " (tol " + fmt(kWeightedTol, 1) + ")"};
}

Outcome mean_rank_consistency() {
  // 60 examples x 3 raters; per-system rank counts rebuilt from the percentages.
  constexpr std::size_t kJudgements = 180;
  std::vector<std::vector<int>> ranks(kTable4.size());
  for (std::size_t s = 0; s < kTable4.size(); ++s) {
    for (int r = 0; r < 3; ++r) {
      const auto n = static_cast<std::size_t>(std::lround(kTable4[s].percent[r] * kJudgements / 100.0));
      ranks[s].insert(ranks[s].end(), n, r + 1);
    }
    if (ranks[s].size() != kJudgements) {
      return {false, std::string(kTable4[s].system) + ": distribution does not cover 180 judgements"};
    }
  }
  std::vector<RankingRecord> records;
  for (std::size_t k = 0; k < kJudgements; ++k) {
    RankingRecord rec{"ex" + std::to_string(k / 3), "rater" + std::to_string(k % 3), {}};
    for (std::size_t s = 0; s < kTable4.size(); ++s) rec.ranks[kTable4[s].system] = ranks[s][k];
    records.push_back(std::move(rec));
  }
  const RankReport report = rank_summary(records);
  bool ok = true;
  std::string detail;
  for (const auto& row : kTable4) {
    const auto* sys = report.find(row.system);
    if (!sys) return {false, std::string("missing system ") + row.system};
    const double from_dist = mean_rank_from_distribution(row.percent);
    ok = ok && std::fabs(sys->mean_rank - row.mean_rank) <= kMeanRankTol &&
         std::fabs(from_dist - row.mean_rank) <= kMeanRankTol;
    for (int r = 0; r < 3; ++r) ok = ok && std::fabs(sys->distribution[r] - row.percent[r]) < 0.005;
    detail += std::string(detail.empty() ? "" : ", ") + row.system + " " + fmt(sys->mean_rank, 4) + " vs " +
              fmt(row.mean_rank, 2);
  }
  return {ok, detail};
}

Outcome gold_replay_composite() {
  const Data& d = data();
  const DialogueCorpus& test = d.splits.at(Split::test);
  std::string detail;
  bool ok = true;
  for (Variant v : {Variant::emo, Variant::prev}) {
    auto backend = make_gold_replay(test, v);
    RunConfig cfg;
    cfg.variant = v;
    cfg.parallelism = 8;
    const PredictionSet set = run_corpus(backend, test, d.kb, cfg);
    const std::size_t conflicts = backend.conflicts();
    std::vector<BeliefState> pb, gb;
    std::vector<Emotion> pe, ge;
    std::vector<std::string> hyps, refs;
    std::size_t diagnostics = 0;
    for (const auto& p : set.turns) {
      const Turn& g = test.find(p.dialogue_id)->turns[p.turn_index];
      pb.push_back(p.parsed.belief);
      gb.push_back(g.belief);
      pe.push_back(p.parsed.emotion);
      ge.push_back(g.user_emotion);
      hyps.push_back(p.parsed.response_delex);
      refs.push_back(g.system_response_delex);
      diagnostics += p.parsed.diagnostics.size();
    }
    const auto jga = joint_goal_accuracy(pb, gb, d.kb.normalization());
    const auto bleu = corpus_bleu(hyps, refs);
    const auto f1 = emotion_f1(pe, ge);
    bool f1_ok = true;
    std::size_t represented = 0;
    for (Emotion e : kAllEmotions) {
      if (f1.support[emotion_id(e)] == 0) continue;
      ++represented;
      f1_ok = f1_ok && f1.f1_of(e) == 1.0;
    }
    if (conflicts) detail += std::to_string(conflicts) + " prompts shared by turns with different gold; ";
    const bool v_ok = set.failures.empty() && set.turns.size() == test.user_turn_count() && jga &&
                      *jga == 1.0 && bleu && std::fabs(*bleu - 100.0) < 1e-9 && f1_ok && diagnostics == 0;
    ok = ok && v_ok;
    detail += std::string(detail.empty() ? "" : "; ") + std::string(variant_name(v)) + ": " +
              std::to_string(set.turns.size()) + " turns, JGA " + (jga ? fmt(*jga, 4) : "n/a") + ", BLEU " +
              (bleu ? fmt(*bleu, 2) : "n/a") + ", F1=1 on " + std::to_string(represented) +
              " classes " + (f1_ok ? "yes" : "no") + ", diagnostics " + std::to_string(diagnostics);
  }
  return {ok, detail + source_note()};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(20240601);
  std::string failures;
  auto fail = [&](const std::string& what) {
    if (failures.size() < 400) failures += (failures.empty() ? "" : "; ") + what;
  };

  // CBE and unique trigrams
  const std::vector<std::string> vocab = {"i", "want", "a", "cheap", "hotel", "[name]", "is", "the", "."};
  double worst_cbe = 0.0;
  for (int k = 0; k < 200; ++k) {
    std::vector<std::string> texts(rng() % 8);
    for (auto& t : texts) {
      const std::size_t n = rng() % 12;
      for (std::size_t i = 0; i < n; ++i) t += (i ? " " : "") + vocab[rng() % vocab.size()];
    }
    const double diff = std::fabs(conditional_bigram_entropy(texts) - oracle::brute_cbe(texts));
    worst_cbe = std::max(worst_cbe, diff);
    if (diff > kCbeTol) fail("cbe corpus " + std::to_string(k));
    if (unique_trigrams(texts) != oracle::brute_unique_trigrams(texts)) fail("trigrams corpus " + std::to_string(k));
  }

  // paired t-test
  double worst_t = 0.0;
  for (int k = 0; k < 200; ++k) {
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::size_t n = k < 100 ? 3 : 2 + rng() % 20;
    std::vector<double> a(n), b(n);
    const double shift = (k % 5) * 0.3;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 50.0 + noise(rng);
      b[i] = 50.0 + shift + noise(rng);
    }
    const TTestResult r = paired_t_test(a, b);
    if (std::fabs(r.t - oracle::paired_t(a, b)) > 1e-9 * std::max(1.0, std::fabs(r.t))) {
      fail("t statistic case " + std::to_string(k));
    }
    double diff = std::fabs(r.p - oracle::t_two_sided_p_integrated(r.t, r.df));
    if (r.df == 2) diff = std::max(diff, std::fabs(r.p - oracle::t_two_sided_p_df2(r.t)));
    worst_t = std::max(worst_t, diff);
    if (diff > kTTestTol) fail("t-test p case " + std::to_string(k));
  }

  // Fleiss kappa
  double worst_kappa = 0.0;
  for (int k = 0; k < 200; ++k) {
    const long raters = 2 + static_cast<long>(rng() % 5);
    const std::size_t cats = 2 + rng() % 4;
    std::vector<std::vector<long>> table(1 + rng() % 30, std::vector<long>(cats, 0));
    for (auto& row : table) {
      for (long r = 0; r < raters; ++r) ++row[rng() % cats];
    }
    const auto kappa = fleiss_kappa(table, raters);
    if (!kappa) continue;
    const double diff = std::fabs(*kappa - oracle::fleiss_by_pairs(table));
    worst_kappa = std::max(worst_kappa, diff);
    if (diff > kKappaTol) fail("kappa table " + std::to_string(k));
  }

  // Levenshtein ratio: every pair over {a,b,c} with combined length <= 12.
  std::vector<std::vector<std::string>> by_len(kLevenshteinMaxLen + 1);
  by_len[0] = {""};
  for (std::size_t n = 1; n <= kLevenshteinMaxLen; ++n) {
    for (const auto& s : by_len[n - 1]) {
      for (char c : {'a', 'b', 'c'}) by_len[n].push_back(s + c);
    }
  }
  std::size_t pairs = 0, mismatches = 0;
  for (std::size_t la = 0; la <= kLevenshteinMaxLen; ++la) {
    for (std::size_t lb = 0; la + lb <= kLevenshteinMaxLen; ++lb) {
      for (const auto& a : by_len[la]) {
        const std::u32string ua(a.begin(), a.end());
        for (const auto& b : by_len[lb]) {
          ++pairs;
          if (levenshtein_ratio(a, b) != oracle::edit_ratio(ua, std::u32string(b.begin(), b.end()))) {
            ++mismatches;
          }
        }
      }
    }
  }
  // and random pairs where both sides reach length 12
  for (int k = 0; k < 200000; ++k) {
    std::string a(rng() % (kLevenshteinMaxLen + 1), 'a'), b(rng() % (kLevenshteinMaxLen + 1), 'a');
    for (char& c : a) c = static_cast<char>('a' + rng() % 3);
    for (char& c : b) c = static_cast<char>('a' + rng() % 3);
    ++pairs;
    if (levenshtein_ratio(a, b) !=
        oracle::edit_ratio(std::u32string(a.begin(), a.end()), std::u32string(b.begin(), b.end()))) {
      ++mismatches;
    }
  }
  if (mismatches) fail(std::to_string(mismatches) + " levenshtein mismatches");

  char buf[256];
  std::snprintf(buf, sizeof buf,
                "cbe max err %.1e, t-test max err %.1e, kappa max err %.1e, levenshtein %zu pairs exact",
                worst_cbe, worst_t, worst_kappa, pairs - mismatches);
  return {failures.empty(), failures.empty() ? std::string(buf) : failures};
}

Outcome round_trip() {
  const Data& d = data();
  std::size_t checked = 0, broken = 0;
  std::string first_broken;
  for (Variant v : {Variant::emo, Variant::prev}) {
    for (Split s : kAllSplits) {
      for (const auto& dlg : d.splits.at(s).dialogues()) {
        for (std::size_t i = 0; i < dlg.turns.size(); ++i) {
          const Turn& t = dlg.turns[i];
          const ParsedTurn p = parse_generation(build_training_sequence(dlg, i, v).text, v);
          ++checked;
          if (!(p.belief == t.belief && p.emotion == t.user_emotion && p.acts == t.acts &&
                p.response_delex == t.system_response_delex)) {
            if (broken++ == 0) {
              first_broken = std::string(variant_name(v)) + " " + dlg.id + "#" + std::to_string(i);
            }
          }
        }
      }
    }
  }
  return {broken == 0 && checked > 0,
          std::to_string(checked - broken) + "/" + std::to_string(checked) + " turns identical" +
              (broken ? ", first mismatch " + first_broken : "") + source_note()};
}

std::size_t user_markers(std::string_view prompt) {
  std::size_t n = 0;
  for (auto p = prompt.find("<|user|>"); p != std::string_view::npos; p = prompt.find("<|user|>", p + 1)) ++n;
  return n;
}

// A deterministic pure function of the prompt, shaped like a PREV generation.
std::string hashed_generation(std::string_view prompt) {
  const std::uint64_t h = text::fnv1a64(prompt, 7);
  return " hotel area north <|endofbelief|> <|emotion|> " +
         std::string(canonical_name(kAllEmotions[h % kEmotionCount])) +
         " <|endofemotion|> <|action|> hotel inform choice <|endofaction|> <|response|> reply " +
         std::to_string(h % 1000) + " <|endofresponse|>";
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome prev_feedback() {
  const Data& d = data();
  const DialogueCorpus& test = d.splits.at(Split::test);

  // Mispredict turn 0 and look for the predicted label in the turn-1 prompt.
  std::size_t dialogues = 0, seen = 0;
  for (const auto& dlg : test.dialogues()) {
    if (dlg.turns.size() < 2 || dialogues == 300) continue;
    ++dialogues;
    const Emotion gold0 = dlg.turns[0].user_emotion;
    const Emotion wrong = kAllEmotions[(emotion_id(gold0) + 1) % kEmotionCount];
    ScriptedBackend mock([&](std::string_view prompt, const GenParams&) {
      const std::size_t turn = user_markers(prompt) - 1;
      std::vector<Emotion> prior;
      for (std::size_t i = 0; i < turn; ++i) prior.push_back(dlg.turns[i].user_emotion);
      const auto seq = build_training_sequence(dlg, turn, Variant::prev);
      std::string cont =
          seq.text.substr(build_inference_prompt(gold_history(dlg, turn), prior, Variant::prev).size());
      if (turn == 0) {
        const std::string g = "<|emotion|> " + std::string(canonical_name(gold0));
        cont.replace(cont.find(g), g.size(), "<|emotion|> " + std::string(canonical_name(wrong)));
      }
      return cont;
    });
    RunConfig cfg;
    cfg.variant = Variant::prev;
    run_dialogue(mock, dlg, d.kb, cfg);
    const auto prompts = mock.prompts();
    const std::string want = "<|feel|> " + std::string(canonical_name(wrong)) + " <|endoffeel|>";
    const std::string gold = "<|feel|> " + std::string(canonical_name(gold0)) + " <|endoffeel|>";
    if (prompts.size() >= 2 && prompts[1].find(want) != std::string::npos &&
        prompts[1].find(gold) == std::string::npos) {
      ++seen;
    }
  }

  // Parallelism 1 vs 8, predicted context so every prompt depends on earlier output.
  const fs::path dir = testing::scratch_dir("acceptance_parallel");
  std::string files[2];
  std::size_t turns = 0;
  const std::size_t workers[2] = {1, 8};
  for (int k = 0; k < 2; ++k) {
    ScriptedBackend backend([](std::string_view prompt, const GenParams&) { return hashed_generation(prompt); });
    RunConfig cfg;
    cfg.variant = Variant::prev;
    cfg.context_mode = ContextMode::predicted;
    cfg.parallelism = workers[k];
    const PredictionSet set = run_corpus(backend, test, d.kb, cfg);
    turns = set.turns.size();
    const fs::path path = dir / ("p" + std::to_string(workers[k]) + ".jsonl");
    write_predictions(path, set);
    files[k] = read_bytes(path);
  }
  const bool identical = !files[0].empty() && files[0] == files[1];
  return {seen == dialogues && dialogues > 0 && identical,
          std::to_string(seen) + "/" + std::to_string(dialogues) +
              " turn-1 prompts carry the mispredicted label; parallelism 1 vs 8 over " + std::to_string(turns) +
              " turns " + (identical ? "byte-identical" : "DIFFER") + source_note()};
}

Outcome refinement_behavior() {
  const Data& d = data();
  const DialogueCorpus& test = d.splits.at(Split::test);
  auto replay = make_gold_replay(test, Variant::prev);
  RunConfig cfg;
  cfg.variant = Variant::prev;
  cfg.parallelism = 8;
  const auto preds = run_corpus(replay, test, d.kb, cfg).turns;
  std::vector<TurnPrediction> emotional, neutral;
  for (const auto& p : preds) (p.parsed.emotion == Emotion::neutral ? neutral : emotional).push_back(p);

  // Echo: the snippet is the original response itself.
  ScriptedBackend echo([](std::string_view prompt, const GenParams&) {
    const auto at = prompt.rfind("<|system|> ");
    const auto end = prompt.find('\n', at);
    return std::string(prompt.substr(at + 11, end - at - 11));
  });
  const auto echoed = refine_all(echo, emotional, default_exemplars(), GenParams::refinement(), 8);
  std::size_t filtered = 0;
  for (const auto& r : echoed) filtered += r.filtered_reason == FilterReason::too_similar;

  // Disjoint: letters that never occur in the delexicalized responses.
  const std::string snippet = "QXZJ VWKQ!";
  ScriptedBackend disjoint([&](std::string_view, const GenParams&) { return snippet; });
  const auto prepended = refine_all(disjoint, emotional, default_exemplars(), GenParams::refinement(), 8);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < prepended.size(); ++i) {
    const auto& r = prepended[i];
    kept += r.filtered_reason == FilterReason::none &&
            r.response_refined == snippet + " " + emotional[i].parsed.response_delex &&
            r.response_refined.ends_with(emotional[i].parsed.response_delex);
  }

  ScriptedBackend counter([](std::string_view, const GenParams&) { return std::string("Sorry!"); });
  const auto skipped = refine_all(counter, neutral, default_exemplars(), GenParams::refinement(), 8);
  std::size_t neutral_skipped = 0;
  for (const auto& r : skipped) neutral_skipped += r.filtered_reason == FilterReason::neutral_emotion;

  const bool ok = !emotional.empty() && !neutral.empty() && filtered == emotional.size() &&
                  kept == emotional.size() && counter.calls() == 0 && neutral_skipped == neutral.size() &&
                  echo.calls() == emotional.size();
  return {ok, "echo " + std::to_string(filtered) + "/" + std::to_string(emotional.size()) + " filtered; disjoint " +
                  std::to_string(kept) + "/" + std::to_string(emotional.size()) +
                  " prepended with suffix intact; neutral " + std::to_string(neutral.size()) + " turns, " +
                  std::to_string(counter.calls()) + " backend calls" + source_note()};
}

bool fully_populated(const ParsedTurn& p) {
  if (!emotion_from_id(emotion_id(p.emotion))) return false;
  for (const auto& e : p.belief.entries()) {
    if (e.domain.empty() || e.slot.empty()) return false;
  }
  for (const auto& a : p.acts) {
    if (a.domain.empty() || a.act.empty()) return false;
  }
  return true;
}

Outcome fuzz_totality() {
  std::mt19937_64 rng(4242);
  static const std::vector<std::string> tokens = {
      "<|context|>", "<|endofcontext|>", "<|belief|>", "<|endofbelief|>", "<|emotion|>", "<|endofemotion|>",
      "<|action|>",  "<|endofaction|>",  "<|response|>", "<|endofresponse|>", "<|user|>", "<|feel|>", ", "};
  std::size_t ok = 0, total = 0;
  std::string first_bad;
  for (std::size_t k = 0; k < kFuzzCases; ++k) {
    std::string s(rng() % 300, '\0');
    for (char& c : s) c = static_cast<char>(rng() & 0xFF);
    // every other case splices in delimiter tokens
    if (k % 2) {
      for (int j = 0; j < 6; ++j) s.insert(rng() % (s.size() + 1), tokens[rng() % tokens.size()]);
    }
    for (Variant v : {Variant::simple, Variant::emo, Variant::prev}) {
      ++total;
      try {
        if (fully_populated(parse_generation(s, v))) {
          ++ok;
        } else if (first_bad.empty()) {
          first_bad = "case " + std::to_string(k) + " not fully populated";
        }
      } catch (const std::exception& e) {
        if (first_bad.empty()) first_bad = "case " + std::to_string(k) + " threw " + e.what();
      }
    }
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " parses total and populated" +
                           (first_bad.empty() ? "" : ", " + first_bad)};
}

std::vector<Criterion> criteria() {
  return {
      {"dataset_statistics", 60, dataset_statistics},
      {"weighted_average_consistency", 1, weighted_average_consistency},
      {"mean_rank_consistency", 1, mean_rank_consistency},
      {"gold_replay_composite", 300, gold_replay_composite},
      {"metric_oracles", 120, metric_oracles},
      {"round_trip", 120, round_trip},
      {"prev_feedback", 60, prev_feedback},
      {"refinement_behavior", 60, refinement_behavior},
      {"fuzz_totality", 60, fuzz_totality},
  };
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only.emplace_back(argv[++i]);
    } else if (arg == "--list") {
      for (const auto& c : criteria()) std::cout << c.name << '\n';
      return 0;
    } else {
      std::cerr << "usage: " << argv[0] << " [--only NAME]... [--list]\n";
      return 2;
    }
  }
  int failed = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += " (over the " + fmt(c.budget_seconds, 0) + " s budget)";
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << fmt(secs, 2) << " s]"
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::cerr << "no criterion selected\n";
    return 2;
  }
  return failed ? 1 : 0;
}
