// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mcm/corpus.hpp"
#include "mcm/distill.hpp"
#include "mcm/model.hpp"
#include "mcm/trainer.hpp"

namespace mcm::config {

// One JSON document with model / train / distill / data sections drives every
// subcommand. Unknown keys are rejected so typos fail loudly, and the loaded
// file is copied into each output directory for provenance.
struct RunConfig {
  ModelConfig model;                     // vocab/answer counts filled from data
  std::int64_t student_layers_lang = 0;  // 0 = same as the teacher
  trainer::TrainConfig train;            // mode is set by the subcommand
  bool train_languages_set = false;      // true when the config names them
  int teacher_epochs = 10;

  std::string tap_spec = "all";  // all | paper | pairs like "1:2,2:1"
  double w_cls = 1.0, w_object = 1.0, w_pred = 1.0, w_nll = 1.0;

  corpus::SynthConfig data;
  std::string data_dir = "data";
  std::string codemix_dir;

  std::string source_path;  // where the document was loaded from

  static RunConfig load(const std::string& path);

  distill::DistillConfig resolve_distill(const ModelConfig& cfg) const;
  ModelConfig student_model() const;

  // Languages of the full student stream: English, the training ciphers, and
  // their code-mixed variants when a codemix directory is configured.
  std::vector<std::string> student_languages() const;
};

}  // namespace mcm::config
