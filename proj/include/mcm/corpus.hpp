// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mcm/model.hpp"
#include "mcm/rng.hpp"

namespace mcm::corpus {

struct SceneObject {
  std::string shape;  // circle | square | triangle | star
  std::string color;  // red | green | blue | yellow
  std::string size;   // small | large
  std::array<double, 4> bbox;  // (x, y, w, h), all in [0,1]
  std::vector<double> roi;     // length d_r
};

struct Scene {
  std::string image_id;
  std::vector<SceneObject> objects;
};

// One question/answer record. For English items tags hold the token tag
// inventory (NE-*/NP/ADJ/O); for code-mixed items the same slot carries the
// per-token origin labels (matrix|embedded). gold_alignment maps each token
// to its English parallel token (-1 for none) and is populated only for
// cipher-language items.
struct QAItem {
  std::string id;
  std::string lang;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::string image_id;
  std::string answer;
  std::string parallel_en_id;
  std::vector<int> gold_alignment;
};

// Token and answer index maps; ids 0/1 are reserved for [CLS]/[PAD] and the
// rest follow sorted order, so the mapping is stable for a given item set.
struct Vocab {
  std::vector<std::string> tokens;
  std::map<std::string, std::int64_t> token_to_id;
  std::vector<std::string> answers;
  std::map<std::string, std::int64_t> answer_to_id;

  static Vocab build(const std::vector<QAItem>& items);
  std::int64_t id_of(const std::string& token) const;  // throws DataError on unknown
};

struct Dataset {
  std::vector<QAItem> items;
  std::map<std::string, Scene> scenes;
  Vocab vocab;
  std::map<std::string, std::size_t> item_index;  // id -> position in items

  void reindex();  // rebuilds vocab and the id index, validates image ids
  const QAItem& by_id(const std::string& id) const;
};

// Word-for-word cipher: every English word becomes a language prefix token
// plus a shared stem token, then the word order rule is applied. Stems are
// shared across languages so held-out languages stay recognizable.
struct CipherLanguage {
  std::string id;
  enum class Order { kIdentity, kReverse, kRotate1 } order;
};

CipherLanguage cipher_for(const std::string& lang_id, std::size_t position);
std::string stem_of(const std::string& english_word);

struct SynthConfig {
  int num_scenes = 100;
  int objects = 6;   // k
  int roi_dim = 32;  // d_r
  double noise_sigma = 0.05;
  std::vector<std::string> languages = {"aa", "bb", "cc", "dd"};
  std::vector<std::string> heldout = {"ee", "ff"};
  std::uint64_t seed = 7;
};

// Deterministic shapes-world generator: scenes, templated English questions
// with tags, and cipher parallels with gold alignments for every language in
// languages + heldout.
Dataset synth_shapes_world(const SynthConfig& cfg);

// Derived 5% validation split, stable across languages because it hashes the
// English parallel id.
bool is_validation(const QAItem& item);

struct EncodedBatch {
  QuestionBatch q;
  SceneBatch s;
  Tensor gold;  // (B, |A|) one-hot
  std::vector<std::int64_t> answer_ids;
};

EncodedBatch encode_batch(const std::vector<const QAItem*>& items, const Dataset& ds,
                          const ModelConfig& cfg);

// Whitespace token round trip used by tests: ids back to tokens, stopping at
// padding.
std::vector<std::string> decode_ids(const std::vector<std::int64_t>& ids, const Vocab& vocab);

void write_items_jsonl(const std::string& path, const std::vector<QAItem>& items);
std::vector<QAItem> read_items_jsonl(const std::string& path);
void write_scenes_jsonl(const std::string& path, const std::map<std::string, Scene>& scenes);
std::map<std::string, Scene> read_scenes_jsonl(const std::string& path);

void write_dataset(const std::string& dir, const Dataset& ds);
Dataset read_dataset(const std::string& dir);
// Items from extra files (code-mixed splits) join the base set before vocab
// rebuild.
Dataset read_dataset(const std::string& dir, const std::vector<std::string>& extra_item_files);

}  // namespace mcm::corpus
