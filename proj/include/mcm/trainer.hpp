// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mcm/corpus.hpp"
#include "mcm/distill.hpp"
#include "mcm/metrics.hpp"
#include "mcm/model.hpp"
#include "mcm/optim.hpp"

namespace mcm::trainer {

enum class Mode { kTeacher, kDistill, kJointBaseline };

struct TrainConfig {
  Mode mode = Mode::kTeacher;
  int epochs = 10;
  int batch_size = 32;
  optim::AdamConfig adam;
  // Bottom encoder layers excluded from updates.
  int freeze_lang = 0;
  int freeze_img = 0;
  std::uint64_t seed = 1;
  // Languages feeding the student stream (teacher mode ignores this and
  // trains on English).
  std::vector<std::string> languages = {"en"};

  void validate(const ModelConfig& cfg) const;
};

struct EvalTypeCell {
  std::int64_t count = 0;
  double accuracy = 0.0;
};

struct EvalRow {
  std::string lang;
  std::int64_t count = 0;
  double accuracy = 0.0;
  std::map<std::string, EvalTypeCell> by_type;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::int64_t total = 0;
  double overall = 0.0;        // micro average
  double mean_language = 0.0;  // macro average over rows
};

struct TrainResult {
  ModelConfig cfg;
  ModelParams params;  // best epoch by validation accuracy
  std::vector<double> loss_history;
  std::vector<double> val_history;
  int best_epoch = -1;
};

// color | shape | count | yesno, mirroring the answer-type report layout.
std::string answer_type(const std::string& answer);

std::vector<const corpus::QAItem*> select_items(const corpus::Dataset& ds,
                                                const std::vector<std::string>& languages,
                                                bool validation);

// Supervised run on English items with the gold-answer loss only.
TrainResult train_teacher(const corpus::Dataset& ds, const ModelConfig& cfg,
                          const TrainConfig& tc);

// Copies the image encoder, cross-modality stack, and answer head from the
// teacher; language encoder and embeddings stay at their fresh init.
void warm_start_from_teacher(const ModelConfig& student_cfg, ModelParams& student,
                             const ModelConfig& teacher_cfg, const ModelParams& teacher);

// Distillation (mode kDistill) or the joint gold-only baseline
// (kJointBaseline). Both consume the identical multilingual stream order for
// a given seed; the teacher is cloned and frozen internally.
TrainResult distill_student(const corpus::Dataset& ds, const ModelConfig& teacher_cfg,
                            const ModelParams& teacher_params, const ModelConfig& student_cfg,
                            const TrainConfig& tc, const distill::DistillConfig& dc);

// Argmax answer ids for the given items.
std::vector<std::int64_t> predict(const ModelConfig& cfg, const ModelParams& params,
                                  const corpus::Dataset& ds,
                                  const std::vector<const corpus::QAItem*>& items,
                                  int batch_size = 64);

EvalReport evaluate_predictions(const std::vector<const corpus::QAItem*>& items,
                                const std::vector<std::string>& predicted);

EvalReport evaluate(const ModelConfig& cfg, const ModelParams& params, const corpus::Dataset& ds,
                    const std::vector<std::string>& languages, bool validation_split,
                    int batch_size = 64);

struct AnalysisResult {
  std::vector<double> fractions;
  std::vector<double> accuracy;       // per fraction, over the analysis items
  std::vector<double> unchanged_pct;  // vs the full-question predictions
  std::map<std::string, double> zero_shot;  // language -> accuracy
  metrics::AlignmentScore alignment;
};

// Partial-question curves, zero-shot accuracy on held-out languages, and the
// cross-language representation alignment score, all on the validation split.
AnalysisResult analyze(const ModelConfig& cfg, const ModelParams& params,
                       const corpus::Dataset& ds, const std::vector<std::string>& languages,
                       const std::vector<std::string>& zero_shot_languages,
                       const std::vector<double>& fractions = {0.2, 0.4, 0.6, 0.8, 1.0});

// Final CLS vectors of parallel questions grouped by English id; input to the
// representation alignment score.
std::vector<std::vector<std::vector<double>>> cls_groups(
    const ModelConfig& cfg, const ModelParams& params, const corpus::Dataset& ds,
    const std::vector<std::string>& languages, bool validation_split);

namespace reporting {

void write_eval_csv(const std::string& path, const EvalReport& report);
void write_eval_json(const std::string& path, const EvalReport& report);
EvalReport read_eval_json(const std::string& path);
void write_history_csv(const std::string& path, const std::vector<double>& loss,
                       const std::vector<double>& val);
void write_analysis_csv(const std::string& path, const AnalysisResult& analysis);
std::string eval_markdown(const std::string& title, const EvalReport& report);

}  // namespace reporting

}  // namespace mcm::trainer
