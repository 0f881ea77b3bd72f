// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
//
// Single entry point for the pipeline: dataset synthesis, word alignment,
// code-mix generation, metrics, teacher/student training, evaluation,
// analysis, gradient checking, and run comparison reports.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcm/codemix.hpp"
#include "mcm/config.hpp"
#include "mcm/corpus.hpp"
#include "mcm/distill.hpp"
#include "mcm/errors.hpp"
#include "mcm/gradcheck.hpp"
#include "mcm/kernels.hpp"
#include "mcm/metrics.hpp"
#include "mcm/model.hpp"
#include "mcm/ops.hpp"
#include "mcm/trainer.hpp"

namespace fs = std::filesystem;
using namespace mcm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string checkpoint;
  std::string languages_csv;
  std::string ablate;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t comma = csv.find(',', pos);
    if (comma == std::string::npos) comma = csv.size();
    if (comma > pos) out.push_back(csv.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

void ensure_out(const std::string& dir) {
  if (dir.empty()) throw ConfigError("missing --out directory");
  fs::create_directories(dir);
}

void copy_config(const config::RunConfig& rc, const std::string& out_dir) {
  if (rc.source_path.empty()) return;
  std::ifstream in(rc.source_path, std::ios::binary);
  std::ofstream out(out_dir + "/config.json", std::ios::binary | std::ios::trunc);
  out << in.rdbuf();
}

config::RunConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw ConfigError("missing --config");
  config::RunConfig rc = config::RunConfig::load(args.config_path);
  if (args.seed_set) {
    rc.train.seed = args.seed;
    rc.data.seed = args.seed;
  }
  return rc;
}

corpus::Dataset load_dataset(const config::RunConfig& rc, bool with_codemix) {
  std::vector<std::string> extra;
  if (with_codemix && !rc.codemix_dir.empty()) extra.push_back(rc.codemix_dir + "/items.jsonl");
  return corpus::read_dataset(rc.data_dir, extra);
}

ModelConfig model_for_dataset(ModelConfig cfg, const corpus::Dataset& ds) {
  cfg.vocab_size = static_cast<std::int64_t>(ds.vocab.tokens.size());
  cfg.answer_count = static_cast<std::int64_t>(ds.vocab.answers.size());
  cfg.validate();
  return cfg;
}

void apply_ablation(distill::DistillConfig& dc, const std::string& ablate) {
  if (ablate.empty()) return;
  if (ablate == "cls")
    dc.w_cls = 0.0;
  else if (ablate == "object")
    dc.w_object = 0.0;
  else if (ablate == "pred")
    dc.w_pred = 0.0;
  else if (ablate == "nll")
    dc.w_nll = 0.0;
  else
    throw ConfigError("--ablate must be one of cls, object, pred, nll");
}

void write_summary_md(const std::string& path, const std::string& title,
                      const trainer::TrainResult& result, const trainer::EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  out << "# " << title << "\n\n";
  out << "generated: " << std::ctime(&now);  // excluded from determinism checks
  out << "\nbest epoch: " << result.best_epoch << "\n";
  if (!result.loss_history.empty())
    out << "final step loss: " << result.loss_history.back() << "\n";
  out << "\n" << trainer::reporting::eval_markdown("Validation accuracy", report) << "\n";
}

// Pairs (en item, xx item) of one cipher language, in corpus order.
std::vector<codemix::ParallelPair> language_pairs(const corpus::Dataset& ds,
                                                  const std::string& lang) {
  std::vector<codemix::ParallelPair> pairs;
  for (const auto& item : ds.items) {
    if (item.lang != lang) continue;
    const corpus::QAItem& en = ds.by_id(item.parallel_en_id);
    codemix::ParallelPair p;
    p.en_tokens = en.tokens;
    p.en_tags = en.tags;
    p.xx_tokens = item.tokens;
    p.lang = lang;
    p.gold_alignment = item.gold_alignment;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

int cmd_synth(const CommonArgs& args) {
  config::RunConfig rc = load_config(args);
  ensure_out(args.out_dir);
  corpus::Dataset ds = corpus::synth_shapes_world(rc.data);
  corpus::write_dataset(args.out_dir, ds);
  copy_config(rc, args.out_dir);
  std::cout << "synth: " << ds.items.size() << " items, " << ds.scenes.size() << " scenes -> "
            << args.out_dir << "\n";
  return kExitOk;
}

int cmd_align(const CommonArgs& args) {
  config::RunConfig rc = load_config(args);
  ensure_out(args.out_dir);
  corpus::Dataset ds = load_dataset(rc, /*with_codemix=*/false);
  std::vector<std::string> langs =
      args.languages_csv.empty() ? rc.data.languages : split_csv(args.languages_csv);

  std::ofstream stats(args.out_dir + "/align_stats.csv", std::ios::trunc);
  stats << "lang,pairs,oov,final_log_likelihood,gold_accuracy\n";
  std::ofstream alignments(args.out_dir + "/alignments.jsonl", std::ios::trunc);
  for (const auto& lang : langs) {
    auto pairs = language_pairs(ds, lang);
    if (pairs.empty()) throw DataError("align: no pairs for language " + lang);
    codemix::AlignerStats em_stats;
    codemix::AlignmentModel model = codemix::train_aligner(pairs, 5, 4.0, 0.08, &em_stats);
    std::int64_t correct = 0, total = 0, oov = 0;
    std::size_t pair_idx = 0;
    for (const auto& item : ds.items) {
      if (item.lang != lang) continue;
      const codemix::ParallelPair& p = pairs[pair_idx++];
      codemix::Alignment a = codemix::decode_alignment(model, p);
      oov += a.oov_count;
      if (!p.gold_alignment.empty())
        for (std::size_t j = 0; j < p.gold_alignment.size(); ++j) {
          ++total;
          if (p.gold_alignment[j] == a.src_index[j]) ++correct;
        }
      nlohmann::ordered_json row;
      row["id"] = item.id;
      row["lang"] = lang;
      row["alignment"] = a.src_index;
      alignments << row.dump() << "\n";
    }
    stats << lang << "," << pairs.size() << "," << oov << ","
          << em_stats.log_likelihood.back() << ","
          << (total ? double(correct) / double(total) : 0.0) << "\n";
  }
  copy_config(rc, args.out_dir);
  return kExitOk;
}

int cmd_codemix(const CommonArgs& args) {
  config::RunConfig rc = load_config(args);
  ensure_out(args.out_dir);
  corpus::Dataset ds = load_dataset(rc, /*with_codemix=*/false);
  std::vector<std::string> langs =
      args.languages_csv.empty() ? rc.data.languages : split_csv(args.languages_csv);

  std::vector<corpus::QAItem> generated;
  std::ofstream stats(args.out_dir + "/codemix_stats.csv", std::ios::trunc);
  stats << "lang,sentences,substituted,mean_cmi,mean_spf\n";
  for (const auto& lang : langs) {
    auto pairs = language_pairs(ds, lang);
    if (pairs.empty()) throw DataError("codemix: no pairs for language " + lang);
    codemix::AlignmentModel model = codemix::train_aligner(pairs);
    std::size_t pair_idx = 0;
    std::int64_t substituted = 0;
    double cmi_sum = 0.0, spf_sum = 0.0;
    for (const auto& item : ds.items) {
      if (item.lang != lang) continue;
      const codemix::ParallelPair& p = pairs[pair_idx++];
      codemix::Alignment a = codemix::decode_alignment(model, p);
      auto spans = codemix::extract_substitutable_spans(p, a);
      codemix::CodeMixResult mix = codemix::generate_codemixed(p, spans);
      if (!mix.applied.empty()) ++substituted;

      corpus::QAItem out;
      out.id = item.parallel_en_id.substr(0, item.parallel_en_id.size() - 3) + "_en-" + lang;
      out.lang = "en-" + lang;
      out.tokens = mix.tokens;
      out.tags = mix.origin;  // per-token origin labels
      out.image_id = item.image_id;
      out.answer = item.answer;
      out.parallel_en_id = item.parallel_en_id;
      generated.push_back(std::move(out));

      metrics::LabeledSentence ls;
      ls.tokens = mix.tokens;
      for (const auto& o : mix.origin) ls.labels.push_back(o == "embedded" ? "en" : lang);
      auto cs = metrics::codemix_complexity(ls);
      cmi_sum += cs.cmi;
      spf_sum += cs.spf;
    }
    stats << lang << "," << pair_idx << "," << substituted << ","
          << (pair_idx ? cmi_sum / double(pair_idx) : 0.0) << ","
          << (pair_idx ? spf_sum / double(pair_idx) : 0.0) << "\n";
  }
  corpus::write_items_jsonl(args.out_dir + "/items.jsonl", generated);
  copy_config(rc, args.out_dir);
  std::cout << "codemix: " << generated.size() << " items -> " << args.out_dir << "\n";
  return kExitOk;
}

int cmd_metrics(const CommonArgs& args) {
  config::RunConfig rc = load_config(args);
  ensure_out(args.out_dir);
  if (rc.codemix_dir.empty()) throw ConfigError("metrics: data.codemix_dir must be set");
  corpus::Dataset ds = load_dataset(rc, /*with_codemix=*/true);

  std::ofstream csv(args.out_dir + "/codemix_metrics.csv", std::ios::trunc);
  csv << "id,lang,cmi,spf,bleu,rouge_l,ter,cf2,cf3\n";
  double cmi_sum = 0.0, spf_sum = 0.0;
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> sim_pairs;
  std::int64_t n = 0;
  for (const auto& item : ds.items) {
    if (item.lang.rfind("en-", 0) != 0) continue;
    const std::string matrix_lang = item.lang.substr(3);
    metrics::LabeledSentence ls;
    ls.tokens = item.tokens;
    for (const auto& tag : item.tags) ls.labels.push_back(tag == "embedded" ? "en" : matrix_lang);
    auto cs = metrics::codemix_complexity(ls);

    // Reference: the untouched foreign parallel of the same question.
    const std::string xx_id =
        item.parallel_en_id.substr(0, item.parallel_en_id.size() - 3) + "_" + matrix_lang;
    const corpus::QAItem& xx = ds.by_id(xx_id);
    auto sim = metrics::text_similarity(item.tokens, xx.tokens);
    sim_pairs.emplace_back(item.tokens, xx.tokens);

    csv << item.id << "," << item.lang << "," << cs.cmi << "," << cs.spf << "," << sim.bleu << ","
        << sim.rouge_l << "," << sim.ter << ",n/a,n/a\n";
    cmi_sum += cs.cmi;
    spf_sum += cs.spf;
    ++n;
  }
  if (n == 0) throw DataError("metrics: no code-mixed items found");
  auto corpus_sim = metrics::corpus_text_similarity(sim_pairs);
  csv << "corpus,all," << cmi_sum / double(n) << "," << spf_sum / double(n) << ","
      << corpus_sim.bleu << "," << corpus_sim.rouge_l << "," << corpus_sim.ter << ",n/a,n/a\n";
  copy_config(rc, args.out_dir);
  return kExitOk;
}

int cmd_train_teacher(const CommonArgs& args) {
  config::RunConfig rc = load_config(args);
  ensure_out(args.out_dir);
  corpus::Dataset ds = load_dataset(rc, /*with_codemix=*/false);
  ModelConfig cfg = model_for_dataset(rc.model, ds);
  trainer::TrainConfig tc = rc.train;
  tc.mode = trainer::Mode::kTeacher;
  tc.epochs = rc.teacher_epochs;
  tc.languages = {"en"};
  trainer::TrainResult result = trainer::train_teacher(ds, cfg, tc);
  save_checkpoint(args.out_dir + "/teacher.ckpt", cfg, result.params);
  trainer::EvalReport report =
      trainer::evaluate(cfg, result.params, ds, {"en"}, /*validation_split=*/true);
  trainer::reporting::write_eval_csv(args.out_dir + "/eval_report.csv", report);
  trainer::reporting::write_eval_json(args.out_dir + "/eval_report.json", report);
  trainer::reporting::write_history_csv(args.out_dir + "/history.csv", result.loss_history,
                                        result.val_history);
  write_summary_md(args.out_dir + "/summary.md", "teacher", result, report);
  copy_config(rc, args.out_dir);
  std::cout << "teacher: en validation accuracy " << report.overall << "\n";
  return kExitOk;
}

int cmd_student(const CommonArgs& args, trainer::Mode mode) {
  config::RunConfig rc = load_config(args);
  ensure_out(args.out_dir);
  if (args.checkpoint.empty()) throw ConfigError("missing --checkpoint (teacher)");
  corpus::Dataset ds = load_dataset(rc, /*with_codemix=*/true);
  auto [teacher_cfg, teacher_params] = load_checkpoint(args.checkpoint);
  ModelConfig student_cfg = model_for_dataset(rc.student_model(), ds);
  if (student_cfg.vocab_size != teacher_cfg.vocab_size ||
      student_cfg.answer_count != teacher_cfg.answer_count)
    throw DataError("student: dataset vocabulary does not match the teacher checkpoint");

  trainer::TrainConfig tc = rc.train;
  tc.mode = mode;
  if (!rc.train_languages_set) tc.languages = rc.student_languages();
  if (!args.languages_csv.empty()) tc.languages = split_csv(args.languages_csv);

  distill::DistillConfig dc = rc.resolve_distill(student_cfg);
  apply_ablation(dc, args.ablate);

  trainer::TrainResult result =
      trainer::distill_student(ds, teacher_cfg, teacher_params, student_cfg, tc, dc);
  const char* name = mode == trainer::Mode::kDistill ? "student" : "baseline";
  save_checkpoint(args.out_dir + "/" + name + ".ckpt", student_cfg, result.params);
  trainer::EvalReport report =
      trainer::evaluate(student_cfg, result.params, ds, tc.languages, /*validation_split=*/true);
  trainer::reporting::write_eval_csv(args.out_dir + "/eval_report.csv", report);
  trainer::reporting::write_eval_json(args.out_dir + "/eval_report.json", report);
  trainer::reporting::write_history_csv(args.out_dir + "/history.csv", result.loss_history,
                                        result.val_history);
  write_summary_md(args.out_dir + "/summary.md", name, result, report);
  copy_config(rc, args.out_dir);
  std::cout << name << ": mean language validation accuracy " << report.mean_language << "\n";
  return kExitOk;
}

int cmd_eval(const CommonArgs& args) {
  config::RunConfig rc = load_config(args);
  ensure_out(args.out_dir);
  if (args.checkpoint.empty()) throw ConfigError("missing --checkpoint");
  corpus::Dataset ds = load_dataset(rc, /*with_codemix=*/true);
  auto [cfg, params] = load_checkpoint(args.checkpoint);
  if (cfg.vocab_size != static_cast<std::int64_t>(ds.vocab.tokens.size()) ||
      cfg.answer_count != static_cast<std::int64_t>(ds.vocab.answers.size()))
    throw DataError("eval: dataset vocabulary does not match the checkpoint");
  std::vector<std::string> langs = args.languages_csv.empty()
                                       ? (rc.train_languages_set ? rc.train.languages
                                                                 : rc.student_languages())
                                       : split_csv(args.languages_csv);
  trainer::EvalReport report = trainer::evaluate(cfg, params, ds, langs, /*validation_split=*/true);
  trainer::reporting::write_eval_csv(args.out_dir + "/eval_report.csv", report);
  trainer::reporting::write_eval_json(args.out_dir + "/eval_report.json", report);
  copy_config(rc, args.out_dir);
  std::cout << "eval: overall " << report.overall << " over " << report.total << " items\n";
  return kExitOk;
}

int cmd_analyze(const CommonArgs& args) {
  config::RunConfig rc = load_config(args);
  ensure_out(args.out_dir);
  if (args.checkpoint.empty()) throw ConfigError("missing --checkpoint");
  corpus::Dataset ds = load_dataset(rc, /*with_codemix=*/true);
  auto [cfg, params] = load_checkpoint(args.checkpoint);
  std::vector<std::string> langs = args.languages_csv.empty()
                                       ? (rc.train_languages_set ? rc.train.languages
                                                                 : rc.student_languages())
                                       : split_csv(args.languages_csv);
  trainer::AnalysisResult res = trainer::analyze(cfg, params, ds, langs, rc.data.heldout);
  trainer::reporting::write_analysis_csv(args.out_dir + "/analysis.csv", res);
  copy_config(rc, args.out_dir);
  std::cout << "analyze: alignment score " << res.alignment.score << "\n";
  return kExitOk;
}

int cmd_gradcheck(const CommonArgs& args) {
  const std::uint64_t seed = args.seed_set ? args.seed : 7;
  bool ok = true;
  for (const auto& check : op_checks()) {
    Rng rng(seed);
    auto [input, fn] = check.make(rng);
    const double err = grad_check(fn, input);
    std::cout << check.name << " " << err << "\n";
    ok = ok && err <= 1e-4;
  }
  // End-to-end: the full loss through a tiny model, differentiated against
  // one parameter tensor per stack.
  {
    ModelConfig cfg;
    cfg.d = 8;
    cfg.heads = 2;
    cfg.layers_lang = 1;
    cfg.layers_img = 1;
    cfg.layers_cross = 1;
    cfg.vocab_size = 9;
    cfg.answer_count = 4;
    cfg.objects = 3;
    cfg.roi_dim = 6;
    cfg.n_max = 5;
    cfg.mlp_ratio = 2;
    Rng rng(seed, 5);
    ModelParams teacher = ModelParams::init(cfg, rng);
    teacher.set_requires_grad(false);
    ModelParams student = ModelParams::init(cfg, rng);
    QuestionBatch q;
    q.ids = {{0, 2, 3, 4, 1}, {0, 5, 6, 1, 1}};
    q.mask = {{1, 1, 1, 1, 0}, {1, 1, 1, 0, 0}};
    q.lang = {"en", "en"};
    SceneBatch s;
    s.roi = Tensor::zeros({2, 3, 6});
    s.bbox = Tensor::zeros({2, 3, 4});
    for (auto& v : s.roi.data()) v = rng.normal();
    for (auto& v : s.bbox.data()) v = rng.uniform();
    Tensor gold = Tensor::zeros({2, 4});
    gold.data()[1] = 1.0;
    gold.data()[4 + 2] = 1.0;
    distill::DistillConfig dc;
    dc.tap_set = distill::default_tap_set(cfg.layers_cross, cfg.heads);

    DistillationTaps teacher_taps;
    {
      NoGradGuard ng;
      teacher_taps = forward(cfg, teacher, q, s);
    }
    auto loss_through = [&](Tensor& target_slot, const Tensor& x) {
      Tensor saved = target_slot;
      target_slot = x;
      DistillationTaps taps = forward(cfg, student, q, s);
      Tensor loss = distill::total_loss(teacher_taps, taps, gold, dc).total;
      target_slot = saved;
      return loss;
    };
    struct Probe {
      const char* name;
      Tensor* slot;
    };
    std::vector<Probe> probes = {{"e2e.lang.wq", &student.lang[0].att.wq},
                                 {"e2e.img.w1", &student.img[0].w1},
                                 {"e2e.cross.qatt.wk", &student.cross[0].q_att.wk},
                                 {"e2e.head.wp", &student.w_p}};
    for (auto& probe : probes) {
      Tensor input = probe.slot->detached_copy();
      auto fn = [&](const Tensor& x) { return loss_through(*probe.slot, x); };
      const double err = grad_check(fn, input);
      std::cout << probe.name << " " << err << "\n";
      ok = ok && err <= 1e-4;
    }
  }
  std::cout << (ok ? "all ops within 1e-4" : "FAILED: op above 1e-4") << "\n";
  return ok ? kExitOk : kExitData;
}

int cmd_report(const CommonArgs& args, const std::vector<std::string>& runs) {
  ensure_out(args.out_dir);
  if (runs.size() < 1) throw ConfigError("report: need at least one --runs directory");
  struct Run {
    std::string label;
    trainer::EvalReport report;
  };
  std::vector<Run> loaded;
  std::set<std::string> langs;
  for (const auto& dir : runs) {
    Run r;
    r.label = fs::path(dir).filename().string();
    if (r.label.empty()) r.label = dir;
    r.report = trainer::reporting::read_eval_json(dir + "/eval_report.json");
    for (const auto& row : r.report.rows) langs.insert(row.lang);
    loaded.push_back(std::move(r));
  }

  // Variant x language accuracy matrix.
  std::ofstream csv(args.out_dir + "/comparison.csv", std::ios::trunc);
  csv << "run";
  for (const auto& l : langs) csv << "," << l;
  csv << ",overall\n";
  for (const auto& r : loaded) {
    csv << r.label;
    for (const auto& l : langs) {
      const trainer::EvalRow* row = nullptr;
      for (const auto& cand : r.report.rows)
        if (cand.lang == l) row = &cand;
      csv << "," << (row ? std::to_string(row->accuracy) : "n/a");
    }
    csv << "," << r.report.overall << "\n";
  }

  std::ofstream md(args.out_dir + "/report.md");
  md << "# Run comparison\n\n| run |";
  for (const auto& l : langs) md << " " << l << " |";
  md << " overall |\n|---|";
  for (std::size_t i = 0; i <= langs.size(); ++i) md << "---|";
  md << "\n";
  for (const auto& r : loaded) {
    md << "| " << r.label << " |";
    for (const auto& l : langs) {
      const trainer::EvalRow* row = nullptr;
      for (const auto& cand : r.report.rows)
        if (cand.lang == l) row = &cand;
      md << " " << (row ? std::to_string(row->accuracy) : "n/a") << " |";
    }
    md << " " << r.report.overall << " |\n";
  }
  md << "\n";
  for (const auto& r : loaded)
    md << trainer::reporting::eval_markdown("Answer types: " + r.label, r.report) << "\n";
  return kExitOk;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config, bool needs_out) {
  auto* config_opt = cmd->add_option("--config", args.config_path, "Run configuration JSON");
  auto* out_opt = cmd->add_option("--out", args.out_dir, "Output directory");
  if (needs_config) config_opt->required();
  if (needs_out) out_opt->required();
  cmd->add_option("--seed", args.seed, "Seed override")->each([&args](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_option("--checkpoint", args.checkpoint, "Checkpoint path");
  cmd->add_option("--languages", args.languages_csv, "Comma-separated language list");
  cmd->add_option("--ablate", args.ablate, "Zero one loss weight: cls|object|pred|nll");
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("MCM_THREADS")) {
    const int n = std::atoi(env);
    kernels::set_threads(n > 0 ? n : 1);
  }

  CLI::App app{"desk-scale multilingual/code-mixed VQA distillation pipeline"};
  app.require_subcommand(1);
  CommonArgs args;
  std::vector<std::string> runs;

  auto* synth = app.add_subcommand("synth", "Generate the shapes-world dataset");
  add_common(synth, args, true, true);
  auto* align = app.add_subcommand("align", "Train word aligners on the parallel questions");
  add_common(align, args, true, true);
  auto* codemix_cmd = app.add_subcommand("codemix", "Generate code-mixed questions");
  add_common(codemix_cmd, args, true, true);
  auto* metrics_cmd = app.add_subcommand("metrics", "Code-mixing metrics over generated items");
  add_common(metrics_cmd, args, true, true);
  auto* teacher = app.add_subcommand("train-teacher", "Train the English teacher");
  add_common(teacher, args, true, true);
  auto* distill_cmd = app.add_subcommand("distill", "Distill the multilingual student");
  add_common(distill_cmd, args, true, true);
  auto* baseline = app.add_subcommand("baseline", "Train the gold-only joint baseline");
  add_common(baseline, args, true, true);
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval_cmd, args, true, true);
  auto* analyze_cmd = app.add_subcommand("analyze", "Partial-question, zero-shot, alignment study");
  add_common(analyze_cmd, args, true, true);
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference sweep over all ops");
  add_common(gradcheck_cmd, args, false, false);
  auto* report_cmd = app.add_subcommand("report", "Compare runs into one table");
  add_common(report_cmd, args, false, true);
  report_cmd->add_option("--runs", runs, "Run directories to compare")->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(args);
    if (align->parsed()) return cmd_align(args);
    if (codemix_cmd->parsed()) return cmd_codemix(args);
    if (metrics_cmd->parsed()) return cmd_metrics(args);
    if (teacher->parsed()) return cmd_train_teacher(args);
    if (distill_cmd->parsed()) return cmd_student(args, trainer::Mode::kDistill);
    if (baseline->parsed()) return cmd_student(args, trainer::Mode::kJointBaseline);
    if (eval_cmd->parsed()) return cmd_eval(args);
    if (analyze_cmd->parsed()) return cmd_analyze(args);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(args);
    if (report_cmd->parsed()) return cmd_report(args, runs);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
