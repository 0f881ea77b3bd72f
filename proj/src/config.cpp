// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"
#include "mcm/errors.hpp"

namespace mcm::config {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& section) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "' in section " + section);
}

template <typename T>
void read_into(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: parse error in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j, {"model", "train", "distill", "data"}, "(top level)");

  RunConfig rc;
  rc.source_path = path;

  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m,
                   {"d", "heads", "layers_lang", "layers_img", "layers_cross", "n_max",
                    "mlp_ratio", "student_layers_lang", "objects", "roi_dim", "box_dim"},
                   "model");
    read_into(m, "d", rc.model.d);
    read_into(m, "heads", rc.model.heads);
    read_into(m, "layers_lang", rc.model.layers_lang);
    read_into(m, "layers_img", rc.model.layers_img);
    read_into(m, "layers_cross", rc.model.layers_cross);
    read_into(m, "n_max", rc.model.n_max);
    read_into(m, "mlp_ratio", rc.model.mlp_ratio);
    read_into(m, "objects", rc.model.objects);
    read_into(m, "roi_dim", rc.model.roi_dim);
    read_into(m, "box_dim", rc.model.box_dim);
    read_into(m, "student_layers_lang", rc.student_layers_lang);
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t,
                   {"epochs", "teacher_epochs", "batch_size", "lr", "beta1", "beta2", "eps",
                    "clip_norm", "freeze_lang", "freeze_img", "seed", "languages"},
                   "train");
    read_into(t, "epochs", rc.train.epochs);
    read_into(t, "teacher_epochs", rc.teacher_epochs);
    read_into(t, "batch_size", rc.train.batch_size);
    read_into(t, "lr", rc.train.adam.lr);
    read_into(t, "beta1", rc.train.adam.beta1);
    read_into(t, "beta2", rc.train.adam.beta2);
    read_into(t, "eps", rc.train.adam.eps);
    read_into(t, "clip_norm", rc.train.adam.clip_norm);
    read_into(t, "freeze_lang", rc.train.freeze_lang);
    read_into(t, "freeze_img", rc.train.freeze_img);
    read_into(t, "seed", rc.train.seed);
    if (t.contains("languages")) {
      read_into(t, "languages", rc.train.languages);
      rc.train_languages_set = true;
    }
  }

  if (j.contains("distill")) {
    const json& d = j.at("distill");
    reject_unknown(d, {"taps", "w_cls", "w_object", "w_pred", "w_nll"}, "distill");
    read_into(d, "taps", rc.tap_spec);
    read_into(d, "w_cls", rc.w_cls);
    read_into(d, "w_object", rc.w_object);
    read_into(d, "w_pred", rc.w_pred);
    read_into(d, "w_nll", rc.w_nll);
  }

  if (j.contains("data")) {
    const json& d = j.at("data");
    reject_unknown(d,
                   {"dir", "codemix_dir", "num_scenes", "objects", "roi_dim", "noise_sigma",
                    "languages", "heldout", "seed"},
                   "data");
    read_into(d, "dir", rc.data_dir);
    read_into(d, "codemix_dir", rc.codemix_dir);
    read_into(d, "num_scenes", rc.data.num_scenes);
    read_into(d, "objects", rc.data.objects);
    read_into(d, "roi_dim", rc.data.roi_dim);
    read_into(d, "noise_sigma", rc.data.noise_sigma);
    read_into(d, "languages", rc.data.languages);
    read_into(d, "heldout", rc.data.heldout);
    read_into(d, "seed", rc.data.seed);
  }

  // The model reads scene geometry from the data section unless overridden.
  if (!j.contains("model") || !j.at("model").contains("objects"))
    rc.model.objects = rc.data.objects;
  if (!j.contains("model") || !j.at("model").contains("roi_dim"))
    rc.model.roi_dim = rc.data.roi_dim;
  return rc;
}

distill::DistillConfig RunConfig::resolve_distill(const ModelConfig& cfg) const {
  distill::DistillConfig dc;
  dc.w_cls = w_cls;
  dc.w_object = w_object;
  dc.w_pred = w_pred;
  dc.w_nll = w_nll;
  if (tap_spec == "all") {
    for (int l = 1; l <= cfg.layers_cross; ++l)
      for (int h = 1; h <= cfg.heads; ++h) dc.tap_set.emplace_back(l, h);
  } else if (tap_spec == "paper") {
    dc.tap_set = distill::default_tap_set(cfg.layers_cross, cfg.heads);
  } else {
    // "l:h,l:h" pairs
    std::string spec = tap_spec;
    std::size_t pos = 0;
    while (pos < spec.size()) {
      std::size_t comma = spec.find(',', pos);
      if (comma == std::string::npos) comma = spec.size();
      const std::string pair = spec.substr(pos, comma - pos);
      const std::size_t colon = pair.find(':');
      if (colon == std::string::npos)
        throw ConfigError("config: bad tap spec entry '" + pair + "' (want layer:head)");
      try {
        dc.tap_set.emplace_back(std::stoi(pair.substr(0, colon)),
                                std::stoi(pair.substr(colon + 1)));
      } catch (const std::exception&) {
        throw ConfigError("config: bad tap spec entry '" + pair + "'");
      }
      pos = comma + 1;
    }
  }
  dc.validate(cfg.layers_cross, cfg.heads);
  return dc;
}

ModelConfig RunConfig::student_model() const {
  ModelConfig m = model;
  if (student_layers_lang > 0) m.layers_lang = student_layers_lang;
  return m;
}

std::vector<std::string> RunConfig::student_languages() const {
  std::vector<std::string> langs = {"en"};
  for (const auto& l : data.languages) langs.push_back(l);
  if (!codemix_dir.empty())
    for (const auto& l : data.languages) langs.push_back("en-" + l);
  return langs;
}

}  // namespace mcm::config
