// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mcm/errors.hpp"
#include "mcm/ops.hpp"

namespace mcm::trainer {

void TrainConfig::validate(const ModelConfig& cfg) const {
  if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (adam.clip_norm <= 0) throw ConfigError("train config: clip_norm must be > 0");
  if (freeze_lang < 0 || freeze_lang >= cfg.layers_lang)
    throw ConfigError("train config: freeze_lang must be in [0, layers_lang)");
  if (freeze_img < 0 || freeze_img >= cfg.layers_img)
    throw ConfigError("train config: freeze_img must be in [0, layers_img)");
  if (languages.empty()) throw ConfigError("train config: languages must be nonempty");
}

std::string answer_type(const std::string& answer) {
  static const std::set<std::string> colors = {"red", "green", "blue", "yellow"};
  static const std::set<std::string> shapes = {"circle", "square", "triangle", "star"};
  if (colors.count(answer)) return "color";
  if (shapes.count(answer)) return "shape";
  if (answer == "yes" || answer == "no") return "yesno";
  if (!answer.empty() && std::all_of(answer.begin(), answer.end(),
                                     [](unsigned char c) { return std::isdigit(c); }))
    return "count";
  return "other";
}

std::vector<const corpus::QAItem*> select_items(const corpus::Dataset& ds,
                                                const std::vector<std::string>& languages,
                                                bool validation) {
  std::set<std::string> langs(languages.begin(), languages.end());
  std::vector<const corpus::QAItem*> out;
  for (const auto& item : ds.items) {
    if (!langs.count(item.lang)) continue;
    if (corpus::is_validation(item) != validation) continue;
    out.push_back(&item);
  }
  return out;
}

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.next_below(i)]);
}

void freeze_bottom_layers(ModelParams& params, int freeze_lang, int freeze_img) {
  auto freeze_block = [](BlockParams& b) {
    for (Tensor* t : {&b.att.wq, &b.att.bq, &b.att.wk, &b.att.bk, &b.att.wv, &b.att.bv, &b.att.wo,
                      &b.att.bo, &b.w1, &b.b1, &b.w2, &b.b2})
      t->set_requires_grad(false);
  };
  for (int i = 0; i < freeze_lang; ++i) freeze_block(params.lang[static_cast<std::size_t>(i)]);
  for (int i = 0; i < freeze_img; ++i) freeze_block(params.img[static_cast<std::size_t>(i)]);
}

double validation_accuracy(const ModelConfig& cfg, const ModelParams& params,
                           const corpus::Dataset& ds, const std::vector<std::string>& languages,
                           int batch_size) {
  EvalReport rep = evaluate(cfg, params, ds, languages, /*validation_split=*/true, batch_size);
  return rep.mean_language;
}

}  // namespace

TrainResult train_teacher(const corpus::Dataset& ds, const ModelConfig& cfg,
                          const TrainConfig& tc) {
  cfg.validate();
  tc.validate(cfg);
  auto items = select_items(ds, {"en"}, /*validation=*/false);
  if (items.empty()) throw DataError("train_teacher: no English training items");

  Rng init_rng(tc.seed, 100);
  ModelParams params = ModelParams::init(cfg, init_rng);
  freeze_bottom_layers(params, tc.freeze_lang, tc.freeze_img);
  auto named = params.named();

  TrainResult result;
  result.cfg = cfg;
  optim::OptimizerState state;
  const std::int64_t steps_per_epoch =
      (static_cast<std::int64_t>(items.size()) + tc.batch_size - 1) / tc.batch_size;
  const std::int64_t total_steps = steps_per_epoch * tc.epochs;
  std::int64_t t = 0;
  double best_val = -1.0;

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    Rng shuffle_rng(tc.seed, 1000 + static_cast<std::uint64_t>(epoch));
    shuffle_indices(order, shuffle_rng);
    for (std::size_t start = 0; start < items.size(); start += tc.batch_size) {
      std::vector<const corpus::QAItem*> batch;
      for (std::size_t i = start; i < std::min(items.size(), start + tc.batch_size); ++i)
        batch.push_back(items[order[i]]);
      auto enc = corpus::encode_batch(batch, ds, cfg);
      DistillationTaps taps = forward(cfg, params, enc.q, enc.s);
      Tensor loss = distill::loss_nll(enc.gold, taps.answer_probs);
      result.loss_history.push_back(loss.item());
      loss.backward();
      optim::optimizer_step(named, state, tc.adam, t, total_steps);
      ++t;
    }
    const double val = validation_accuracy(cfg, params, ds, {"en"}, 64);
    result.val_history.push_back(val);
    if (val > best_val) {
      best_val = val;
      result.best_epoch = epoch;
      result.params = params.clone();
    }
  }
  return result;
}

void warm_start_from_teacher(const ModelConfig& student_cfg, ModelParams& student,
                             const ModelConfig& teacher_cfg, const ModelParams& teacher) {
  if (!student_cfg.cross_compatible(teacher_cfg))
    throw ConfigError("warm start: teacher and student cross-modal dimensions differ");
  if (student_cfg.layers_img != teacher_cfg.layers_img ||
      student_cfg.roi_dim != teacher_cfg.roi_dim || student_cfg.box_dim != teacher_cfg.box_dim ||
      student_cfg.mlp_ratio != teacher_cfg.mlp_ratio)
    throw ConfigError("warm start: image stacks are not shape compatible");

  auto copy_into = [](Tensor& dst, const Tensor& src) { dst.data() = src.data(); };
  auto copy_att = [&](AttentionParams& dst, const AttentionParams& src) {
    copy_into(dst.wq, src.wq);
    copy_into(dst.bq, src.bq);
    copy_into(dst.wk, src.wk);
    copy_into(dst.bk, src.bk);
    copy_into(dst.wv, src.wv);
    copy_into(dst.bv, src.bv);
    copy_into(dst.wo, src.wo);
    copy_into(dst.bo, src.bo);
  };
  auto copy_block = [&](BlockParams& dst, const BlockParams& src) {
    copy_att(dst.att, src.att);
    copy_into(dst.w1, src.w1);
    copy_into(dst.b1, src.b1);
    copy_into(dst.w2, src.w2);
    copy_into(dst.b2, src.b2);
  };
  copy_into(student.roi_proj, teacher.roi_proj);
  copy_into(student.roi_bias, teacher.roi_bias);
  copy_into(student.box_proj, teacher.box_proj);
  copy_into(student.box_bias, teacher.box_bias);
  for (std::size_t i = 0; i < student.img.size(); ++i) copy_block(student.img[i], teacher.img[i]);
  for (std::size_t i = 0; i < student.cross.size(); ++i) {
    copy_att(student.cross[i].q_att, teacher.cross[i].q_att);
    copy_att(student.cross[i].v_att, teacher.cross[i].v_att);
    copy_block(student.cross[i].q_block, teacher.cross[i].q_block);
    copy_block(student.cross[i].v_block, teacher.cross[i].v_block);
  }
  copy_into(student.w_p, teacher.w_p);
  copy_into(student.c_p, teacher.c_p);
  copy_into(student.w_a, teacher.w_a);
  copy_into(student.c_a, teacher.c_a);
}

TrainResult distill_student(const corpus::Dataset& ds, const ModelConfig& teacher_cfg,
                            const ModelParams& teacher_params, const ModelConfig& student_cfg,
                            const TrainConfig& tc, const distill::DistillConfig& dc) {
  if (tc.mode == Mode::kTeacher)
    throw ConfigError("distill_student: mode must be distill or joint-baseline");
  teacher_cfg.validate();
  student_cfg.validate();
  tc.validate(student_cfg);
  dc.validate(student_cfg.layers_cross, student_cfg.heads);
  if (!teacher_cfg.cross_compatible(student_cfg))
    throw ConfigError("distill_student: teacher/student cross-modal dimensions differ");

  const bool use_distill = tc.mode == Mode::kDistill;

  // Frozen private copy; the caller's teacher is never touched.
  ModelParams teacher = teacher_params.clone();
  teacher.set_requires_grad(false);

  auto items = select_items(ds, tc.languages, /*validation=*/false);
  if (items.empty()) throw DataError("distill_student: no training items for the given languages");
  for (const auto* item : items)
    if (!ds.item_index.count(item->parallel_en_id))
      throw DataError("distill_student: missing parallel English question for " + item->id);

  Rng init_rng(tc.seed, 200);
  ModelParams student = ModelParams::init(student_cfg, init_rng);
  warm_start_from_teacher(student_cfg, student, teacher_cfg, teacher);
  freeze_bottom_layers(student, tc.freeze_lang, tc.freeze_img);
  auto named = student.named();

  TrainResult result;
  result.cfg = student_cfg;
  optim::OptimizerState state;
  const std::int64_t steps_per_epoch =
      (static_cast<std::int64_t>(items.size()) + tc.batch_size - 1) / tc.batch_size;
  const std::int64_t total_steps = steps_per_epoch * tc.epochs;
  std::int64_t t = 0;
  double best_val = -1.0;

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    Rng shuffle_rng(tc.seed, 1000 + static_cast<std::uint64_t>(epoch));
    shuffle_indices(order, shuffle_rng);
    for (std::size_t start = 0; start < items.size(); start += tc.batch_size) {
      std::vector<const corpus::QAItem*> batch, en_batch;
      for (std::size_t i = start; i < std::min(items.size(), start + tc.batch_size); ++i) {
        batch.push_back(items[order[i]]);
        en_batch.push_back(&ds.by_id(batch.back()->parallel_en_id));
      }
      auto enc = corpus::encode_batch(batch, ds, student_cfg);
      Tensor loss;
      if (use_distill) {
        DistillationTaps teacher_taps;
        {
          NoGradGuard ng;
          auto ten = corpus::encode_batch(en_batch, ds, teacher_cfg);
          teacher_taps = forward(teacher_cfg, teacher, ten.q, ten.s);
        }
        DistillationTaps student_taps = forward(student_cfg, student, enc.q, enc.s);
        distill::LossBreakdown lb = distill::total_loss(teacher_taps, student_taps, enc.gold, dc);
        loss = lb.total;
      } else {
        DistillationTaps student_taps = forward(student_cfg, student, enc.q, enc.s);
        loss = distill::loss_nll(enc.gold, student_taps.answer_probs);
      }
      result.loss_history.push_back(loss.item());
      loss.backward();
      optim::optimizer_step(named, state, tc.adam, t, total_steps);
      ++t;
    }
    const double val = validation_accuracy(student_cfg, student, ds, tc.languages, 64);
    result.val_history.push_back(val);
    if (val > best_val) {
      best_val = val;
      result.best_epoch = epoch;
      result.params = student.clone();
    }
  }
  return result;
}

std::vector<std::int64_t> predict(const ModelConfig& cfg, const ModelParams& params,
                                  const corpus::Dataset& ds,
                                  const std::vector<const corpus::QAItem*>& items,
                                  int batch_size) {
  NoGradGuard ng;
  std::vector<std::int64_t> out;
  out.reserve(items.size());
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    std::vector<const corpus::QAItem*> batch(
        items.begin() + static_cast<std::ptrdiff_t>(start),
        items.begin() + static_cast<std::ptrdiff_t>(std::min(items.size(), start + batch_size)));
    auto enc = corpus::encode_batch(batch, ds, cfg);
    DistillationTaps taps = forward(cfg, params, enc.q, enc.s);
    const auto& probs = taps.answer_probs.data();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::int64_t best = 0;
      for (std::int64_t a = 1; a < cfg.answer_count; ++a)
        if (probs[static_cast<std::int64_t>(i) * cfg.answer_count + a] >
            probs[static_cast<std::int64_t>(i) * cfg.answer_count + best])
          best = a;
      out.push_back(best);
    }
  }
  return out;
}

EvalReport evaluate_predictions(const std::vector<const corpus::QAItem*>& items,
                                const std::vector<std::string>& predicted) {
  if (items.size() != predicted.size())
    throw DataError("evaluate_predictions: item/prediction count mismatch");
  struct Acc {
    std::int64_t n = 0;
    double sum = 0.0;
    std::map<std::string, EvalTypeCell> by_type;
  };
  std::map<std::string, Acc> per_lang;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double a = metrics::vqa_accuracy(predicted[i], items[i]->answer);
    Acc& acc = per_lang[items[i]->lang];
    acc.n += 1;
    acc.sum += a;
    EvalTypeCell& cell = acc.by_type[answer_type(items[i]->answer)];
    cell.count += 1;
    cell.accuracy += a;  // converted to a mean below
  }
  EvalReport rep;
  double total_sum = 0.0;
  for (auto& [lang, acc] : per_lang) {
    EvalRow row;
    row.lang = lang;
    row.count = acc.n;
    row.accuracy = acc.sum / static_cast<double>(acc.n);
    for (auto& [type, cell] : acc.by_type) {
      EvalTypeCell out_cell;
      out_cell.count = cell.count;
      out_cell.accuracy = cell.accuracy / static_cast<double>(cell.count);
      row.by_type[type] = out_cell;
    }
    rep.rows.push_back(std::move(row));
    rep.total += acc.n;
    total_sum += acc.sum;
  }
  if (rep.total > 0) rep.overall = total_sum / static_cast<double>(rep.total);
  if (!rep.rows.empty()) {
    double macro = 0.0;
    for (const auto& row : rep.rows) macro += row.accuracy;
    rep.mean_language = macro / static_cast<double>(rep.rows.size());
  }
  return rep;
}

EvalReport evaluate(const ModelConfig& cfg, const ModelParams& params, const corpus::Dataset& ds,
                    const std::vector<std::string>& languages, bool validation_split,
                    int batch_size) {
  auto items = select_items(ds, languages, validation_split);
  if (items.empty()) throw DataError("evaluate: no items for the requested languages");
  auto ids = predict(cfg, params, ds, items, batch_size);
  std::vector<std::string> answers;
  answers.reserve(ids.size());
  for (std::int64_t id : ids) answers.push_back(ds.vocab.answers[static_cast<std::size_t>(id)]);
  return evaluate_predictions(items, answers);
}

std::vector<std::vector<std::vector<double>>> cls_groups(
    const ModelConfig& cfg, const ModelParams& params, const corpus::Dataset& ds,
    const std::vector<std::string>& languages, bool validation_split) {
  NoGradGuard ng;
  auto items = select_items(ds, languages, validation_split);
  std::map<std::string, std::vector<std::vector<double>>> grouped;
  const int batch_size = 64;
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    std::vector<const corpus::QAItem*> batch(
        items.begin() + static_cast<std::ptrdiff_t>(start),
        items.begin() + static_cast<std::ptrdiff_t>(std::min(items.size(), start + batch_size)));
    auto enc = corpus::encode_batch(batch, ds, cfg);
    DistillationTaps taps = forward(cfg, params, enc.q, enc.s);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::vector<double> cls(static_cast<std::size_t>(cfg.d));
      for (std::int64_t j = 0; j < cfg.d; ++j)
        cls[static_cast<std::size_t>(j)] =
            taps.final_cls.data()[static_cast<std::int64_t>(i) * cfg.d + j];
      grouped[batch[i]->parallel_en_id].push_back(std::move(cls));
    }
  }
  std::vector<std::vector<std::vector<double>>> out;
  out.reserve(grouped.size());
  for (auto& [id, vecs] : grouped) out.push_back(std::move(vecs));
  return out;
}

AnalysisResult analyze(const ModelConfig& cfg, const ModelParams& params,
                       const corpus::Dataset& ds, const std::vector<std::string>& languages,
                       const std::vector<std::string>& zero_shot_languages,
                       const std::vector<double>& fractions) {
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("analyze: fractions must lie in (0, 1]");
  auto items = select_items(ds, languages, /*validation=*/true);
  if (items.empty()) throw DataError("analyze: no validation items for the requested languages");

  AnalysisResult res;
  res.fractions = fractions;

  auto full_ids = predict(cfg, params, ds, items, 64);

  for (double f : fractions) {
    // Truncated copies of each question; the item set is identical across
    // fractions so the unchanged rate is a paired comparison.
    std::vector<corpus::QAItem> truncated;
    truncated.reserve(items.size());
    for (const auto* item : items) {
      corpus::QAItem copy = *item;
      const std::size_t keep = static_cast<std::size_t>(
          std::ceil(f * static_cast<double>(copy.tokens.size())));
      copy.tokens.resize(std::max<std::size_t>(1, keep));
      copy.tags.resize(copy.tokens.size());
      truncated.push_back(std::move(copy));
    }
    std::vector<const corpus::QAItem*> view;
    view.reserve(truncated.size());
    for (const auto& item : truncated) view.push_back(&item);
    auto ids = predict(cfg, params, ds, view, 64);

    double acc = 0.0, unchanged = 0.0;
    for (std::size_t i = 0; i < view.size(); ++i) {
      acc += metrics::vqa_accuracy(ds.vocab.answers[static_cast<std::size_t>(ids[i])],
                                   items[i]->answer);
      if (ids[i] == full_ids[i]) unchanged += 1.0;
    }
    res.accuracy.push_back(acc / static_cast<double>(view.size()));
    res.unchanged_pct.push_back(100.0 * unchanged / static_cast<double>(view.size()));
  }

  for (const auto& lang : zero_shot_languages) {
    EvalReport rep = evaluate(cfg, params, ds, {lang}, /*validation_split=*/true);
    res.zero_shot[lang] = rep.overall;
  }

  res.alignment = metrics::repr_alignment_score(
      cls_groups(cfg, params, ds, languages, /*validation_split=*/true));
  return res;
}

// ------------------------------------------------------------- reporting

namespace reporting {

namespace {
const std::vector<std::string> kTypeColumns = {"color", "shape", "count", "yesno"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}
}  // namespace

void write_eval_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("report: cannot open " + path);
  out << "lang,n,accuracy";
  for (const auto& t : kTypeColumns) out << "," << t;
  out << "\n";
  for (const auto& row : report.rows) {
    out << row.lang << "," << row.count << "," << fmt(row.accuracy);
    for (const auto& t : kTypeColumns) {
      auto it = row.by_type.find(t);
      out << "," << (it == row.by_type.end() ? "n/a" : fmt(it->second.accuracy));
    }
    out << "\n";
  }
  out << "overall," << report.total << "," << fmt(report.overall);
  for (std::size_t i = 0; i < kTypeColumns.size(); ++i) out << ",";
  out << "\n";
}

void write_eval_json(const std::string& path, const EvalReport& report) {
  nlohmann::ordered_json j;
  j["total"] = report.total;
  j["overall"] = report.overall;
  j["mean_language"] = report.mean_language;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r["lang"] = row.lang;
    r["n"] = row.count;
    r["accuracy"] = row.accuracy;
    nlohmann::ordered_json types;
    for (const auto& [t, cell] : row.by_type) {
      types[t] = {{"n", cell.count}, {"accuracy", cell.accuracy}};
    }
    r["by_type"] = std::move(types);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("report: cannot open " + path);
  out << j.dump(2) << "\n";
}

EvalReport read_eval_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("report: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("report: parse error in " + path + ": " + e.what());
  }
  EvalReport rep;
  rep.total = j.at("total").get<std::int64_t>();
  rep.overall = j.at("overall").get<double>();
  rep.mean_language = j.at("mean_language").get<double>();
  for (const auto& r : j.at("rows")) {
    EvalRow row;
    row.lang = r.at("lang").get<std::string>();
    row.count = r.at("n").get<std::int64_t>();
    row.accuracy = r.at("accuracy").get<double>();
    if (r.contains("by_type"))
      for (auto it = r.at("by_type").begin(); it != r.at("by_type").end(); ++it) {
        EvalTypeCell cell;
        cell.count = it.value().at("n").get<std::int64_t>();
        cell.accuracy = it.value().at("accuracy").get<double>();
        row.by_type[it.key()] = cell;
      }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

void write_history_csv(const std::string& path, const std::vector<double>& loss,
                       const std::vector<double>& val) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("report: cannot open " + path);
  out << "step,loss\n";
  for (std::size_t i = 0; i < loss.size(); ++i) out << i << "," << fmt(loss[i]) << "\n";
  out << "epoch,val_accuracy\n";
  for (std::size_t i = 0; i < val.size(); ++i) out << i << "," << fmt(val[i]) << "\n";
}

void write_analysis_csv(const std::string& path, const AnalysisResult& analysis) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("report: cannot open " + path);
  out << "fraction,accuracy,unchanged_pct\n";
  for (std::size_t i = 0; i < analysis.fractions.size(); ++i)
    out << fmt(analysis.fractions[i]) << "," << fmt(analysis.accuracy[i]) << ","
        << fmt(analysis.unchanged_pct[i]) << "\n";
  out << "zero_shot_lang,accuracy,\n";
  for (const auto& [lang, acc] : analysis.zero_shot) out << lang << "," << fmt(acc) << ",\n";
  out << "alignment_score," << fmt(analysis.alignment.score) << ","
      << analysis.alignment.used_groups << "\n";
}

std::string eval_markdown(const std::string& title, const EvalReport& report) {
  std::string md = "## " + title + "\n\n| lang | n | accuracy |";
  for (const auto& t : kTypeColumns) md += " " + t + " |";
  md += "\n|---|---|---|";
  for (std::size_t i = 0; i < kTypeColumns.size(); ++i) md += "---|";
  md += "\n";
  for (const auto& row : report.rows) {
    md += "| " + row.lang + " | " + std::to_string(row.count) + " | " + fmt(row.accuracy) + " |";
    for (const auto& t : kTypeColumns) {
      auto it = row.by_type.find(t);
      md += " " + (it == row.by_type.end() ? std::string("n/a") : fmt(it->second.accuracy)) + " |";
    }
    md += "\n";
  }
  md += "| overall | " + std::to_string(report.total) + " | " + fmt(report.overall) + " |";
  for (std::size_t i = 0; i < kTypeColumns.size(); ++i) md += " |";
  md += "\n";
  return md;
}

}  // namespace reporting

}  // namespace mcm::trainer
