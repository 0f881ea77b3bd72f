// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mcm/errors.hpp"

namespace mcm::corpus {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string> kShapes = {"circle", "square", "triangle", "star"};
const std::vector<std::string> kColors = {"red", "green", "blue", "yellow"};
const std::vector<std::string> kSizes = {"small", "large"};

std::uint64_t fnv1a_str(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

int index_of(const std::vector<std::string>& xs, const std::string& x) {
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (xs[i] == x) return static_cast<int>(i);
  return -1;
}

}  // namespace

Vocab Vocab::build(const std::vector<QAItem>& items) {
  std::set<std::string> token_set, answer_set;
  for (const auto& it : items) {
    for (const auto& t : it.tokens) token_set.insert(t);
    answer_set.insert(it.answer);
  }
  Vocab v;
  v.tokens = {"[CLS]", "[PAD]"};
  v.tokens.insert(v.tokens.end(), token_set.begin(), token_set.end());
  for (std::size_t i = 0; i < v.tokens.size(); ++i)
    v.token_to_id[v.tokens[i]] = static_cast<std::int64_t>(i);
  v.answers.assign(answer_set.begin(), answer_set.end());
  for (std::size_t i = 0; i < v.answers.size(); ++i)
    v.answer_to_id[v.answers[i]] = static_cast<std::int64_t>(i);
  return v;
}

std::int64_t Vocab::id_of(const std::string& token) const {
  auto it = token_to_id.find(token);
  if (it == token_to_id.end()) throw DataError("vocab: unknown token '" + token + "'");
  return it->second;
}

void Dataset::reindex() {
  vocab = Vocab::build(items);
  item_index.clear();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (item_index.count(items[i].id)) throw DataError("dataset: duplicate item id " + items[i].id);
    item_index[items[i].id] = i;
  }
  std::set<std::string> dangling;
  for (const auto& it : items)
    if (!scenes.count(it.image_id)) dangling.insert(it.image_id);
  if (!dangling.empty()) {
    std::string list;
    for (const auto& id : dangling) list += (list.empty() ? "" : ", ") + id;
    throw DataError("dataset: items reference missing scenes: " + list);
  }
  for (const auto& it : items)
    if (!item_index.count(it.parallel_en_id))
      throw DataError("dataset: item " + it.id + " has unresolved parallel id " +
                      it.parallel_en_id);
}

const QAItem& Dataset::by_id(const std::string& id) const {
  auto it = item_index.find(id);
  if (it == item_index.end()) throw DataError("dataset: unknown item id " + id);
  return items[it->second];
}

CipherLanguage cipher_for(const std::string& lang_id, std::size_t position) {
  static const CipherLanguage::Order orders[3] = {CipherLanguage::Order::kIdentity,
                                                  CipherLanguage::Order::kReverse,
                                                  CipherLanguage::Order::kRotate1};
  return {lang_id, orders[position % 3]};
}

std::string stem_of(const std::string& english_word) { return english_word + "_x"; }

namespace {

// Tokens of one cipher question plus the alignment back to the English words.
void cipher_translate(const CipherLanguage& lang, const std::vector<std::string>& en_tokens,
                      std::vector<std::string>* out_tokens, std::vector<int>* out_align) {
  const int n = static_cast<int>(en_tokens.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    switch (lang.order) {
      case CipherLanguage::Order::kIdentity: order[p] = p; break;
      case CipherLanguage::Order::kReverse: order[p] = n - 1 - p; break;
      case CipherLanguage::Order::kRotate1: order[p] = (p + n - 1) % n; break;
    }
  }
  out_tokens->clear();
  out_align->clear();
  for (int p = 0; p < n; ++p) {
    const int src = order[p];
    out_tokens->push_back(lang.id);
    out_align->push_back(src);
    out_tokens->push_back(stem_of(en_tokens[static_cast<std::size_t>(src)]));
    out_align->push_back(src);
  }
}

struct TemplateQuestion {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::string answer;
};

std::vector<TemplateQuestion> scene_questions(const Scene& scene) {
  std::vector<TemplateQuestion> out;
  for (const auto& shape : kShapes) {
    std::set<std::string> colors_of_shape;
    for (const auto& o : scene.objects)
      if (o.shape == shape) colors_of_shape.insert(o.color);
    // Ambiguous color questions are skipped rather than answered arbitrarily.
    if (colors_of_shape.size() == 1)
      out.push_back({{"what", "color", "is", "the", shape},
                     {"O", "O", "O", "O", "NP"},
                     *colors_of_shape.begin()});
    out.push_back({{"is", "there", "a", shape},
                   {"O", "O", "O", "NP"},
                   colors_of_shape.empty() ? "no" : "yes"});
  }
  for (const auto& color : kColors) {
    std::set<std::string> shapes_of_color;
    int count = 0;
    for (const auto& o : scene.objects)
      if (o.color == color) {
        shapes_of_color.insert(o.shape);
        ++count;
      }
    if (shapes_of_color.size() == 1)
      out.push_back({{"what", "shape", "is", "the", color, "object"},
                     {"O", "O", "O", "O", "ADJ", "O"},
                     *shapes_of_color.begin()});
    out.push_back({{"how", "many", color, "objects"},
                   {"O", "O", "ADJ", "O"},
                   std::to_string(count)});
  }
  return out;
}

std::string zero_pad(std::int64_t v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

Dataset synth_shapes_world(const SynthConfig& cfg) {
  if (cfg.roi_dim < static_cast<int>(kShapes.size() + kColors.size() + kSizes.size() + 4))
    throw DataError("synth: roi_dim " + std::to_string(cfg.roi_dim) +
                    " too small for the one-hot blocks (need >= 14)");
  if (cfg.objects < 2) throw DataError("synth: need at least 2 objects per scene");
  Dataset ds;
  Rng scene_rng(cfg.seed, 1);
  Rng noise_rng(cfg.seed, 2);

  std::vector<std::string> all_langs = cfg.languages;
  all_langs.insert(all_langs.end(), cfg.heldout.begin(), cfg.heldout.end());

  std::int64_t qid = 0;
  for (int si = 0; si < cfg.num_scenes; ++si) {
    Scene scene;
    scene.image_id = "img" + zero_pad(si, 5);
    for (int oi = 0; oi < cfg.objects; ++oi) {
      SceneObject obj;
      obj.shape = kShapes[scene_rng.next_below(kShapes.size())];
      obj.color = kColors[scene_rng.next_below(kColors.size())];
      obj.size = kSizes[scene_rng.next_below(kSizes.size())];
      const double w = obj.size == "small" ? 0.08 : 0.16;
      obj.bbox = {scene_rng.uniform(), scene_rng.uniform(), w, w};
      obj.roi.assign(static_cast<std::size_t>(cfg.roi_dim), 0.0);
      obj.roi[static_cast<std::size_t>(index_of(kShapes, obj.shape))] = 1.0;
      obj.roi[kShapes.size() + static_cast<std::size_t>(index_of(kColors, obj.color))] = 1.0;
      obj.roi[kShapes.size() + kColors.size() +
              static_cast<std::size_t>(index_of(kSizes, obj.size))] = 1.0;
      const std::size_t box_off = kShapes.size() + kColors.size() + kSizes.size();
      for (int bi = 0; bi < 4; ++bi)
        obj.roi[box_off + static_cast<std::size_t>(bi)] = obj.bbox[static_cast<std::size_t>(bi)];
      for (std::size_t ri = 0; ri < box_off + 4; ++ri)
        obj.roi[ri] += noise_rng.normal(0.0, cfg.noise_sigma);
      scene.objects.push_back(std::move(obj));
    }

    for (const auto& tq : scene_questions(scene)) {
      const std::string base = "q" + zero_pad(qid, 6);
      ++qid;
      QAItem en;
      en.id = base + "_en";
      en.lang = "en";
      en.tokens = tq.tokens;
      en.tags = tq.tags;
      en.image_id = scene.image_id;
      en.answer = tq.answer;
      en.parallel_en_id = en.id;
      ds.items.push_back(en);

      for (std::size_t li = 0; li < all_langs.size(); ++li) {
        const CipherLanguage lang = cipher_for(all_langs[li], li);
        QAItem xx;
        xx.id = base + "_" + lang.id;
        xx.lang = lang.id;
        cipher_translate(lang, tq.tokens, &xx.tokens, &xx.gold_alignment);
        xx.tags.assign(xx.tokens.size(), "O");
        xx.image_id = scene.image_id;
        xx.answer = tq.answer;  // answers are language-invariant
        xx.parallel_en_id = en.id;
        ds.items.push_back(std::move(xx));
      }
    }
    ds.scenes[scene.image_id] = std::move(scene);
  }
  ds.reindex();
  return ds;
}

bool is_validation(const QAItem& item) { return fnv1a_str(item.parallel_en_id) % 20 == 0; }

EncodedBatch encode_batch(const std::vector<const QAItem*>& items, const Dataset& ds,
                          const ModelConfig& cfg) {
  if (items.empty()) throw DataError("encode_batch: empty batch");
  const std::int64_t b = static_cast<std::int64_t>(items.size());
  EncodedBatch out;
  out.q.ids.resize(items.size());
  out.q.mask.resize(items.size());
  out.q.lang.resize(items.size());
  out.s.roi = Tensor::zeros({b, cfg.objects, cfg.roi_dim});
  out.s.bbox = Tensor::zeros({b, cfg.objects, cfg.box_dim});
  out.gold = Tensor::zeros({b, cfg.answer_count});

  for (std::size_t i = 0; i < items.size(); ++i) {
    const QAItem& item = *items[i];
    auto& ids = out.q.ids[i];
    auto& mask = out.q.mask[i];
    ids.assign(static_cast<std::size_t>(cfg.n_max), 1);  // [PAD]
    mask.assign(static_cast<std::size_t>(cfg.n_max), 0);
    ids[0] = 0;  // [CLS]
    mask[0] = 1;
    const std::size_t keep =
        std::min(item.tokens.size(), static_cast<std::size_t>(cfg.n_max - 1));
    for (std::size_t t = 0; t < keep; ++t) {
      ids[t + 1] = ds.vocab.id_of(item.tokens[t]);
      mask[t + 1] = 1;
    }
    out.q.lang[i] = item.lang;

    const Scene& scene = [&]() -> const Scene& {
      auto it = ds.scenes.find(item.image_id);
      if (it == ds.scenes.end())
        throw DataError("encode_batch: missing scene " + item.image_id);
      return it->second;
    }();
    if (static_cast<std::int64_t>(scene.objects.size()) != cfg.objects)
      throw DataError("encode_batch: scene " + item.image_id + " has " +
                      std::to_string(scene.objects.size()) + " objects, config expects " +
                      std::to_string(cfg.objects));
    for (std::int64_t o = 0; o < cfg.objects; ++o) {
      const SceneObject& obj = scene.objects[static_cast<std::size_t>(o)];
      if (static_cast<std::int64_t>(obj.roi.size()) != cfg.roi_dim)
        throw DataError("encode_batch: roi length mismatch in scene " + item.image_id);
      for (std::int64_t r = 0; r < cfg.roi_dim; ++r)
        out.s.roi.data()[(static_cast<std::int64_t>(i) * cfg.objects + o) * cfg.roi_dim + r] =
            obj.roi[static_cast<std::size_t>(r)];
      for (std::int64_t c = 0; c < cfg.box_dim; ++c)
        out.s.bbox.data()[(static_cast<std::int64_t>(i) * cfg.objects + o) * cfg.box_dim + c] =
            obj.bbox[static_cast<std::size_t>(c)];
    }

    auto ans = ds.vocab.answer_to_id.find(item.answer);
    if (ans == ds.vocab.answer_to_id.end())
      throw DataError("encode_batch: answer '" + item.answer + "' not in answer vocabulary");
    out.gold.data()[static_cast<std::int64_t>(i) * cfg.answer_count + ans->second] = 1.0;
    out.answer_ids.push_back(ans->second);
  }
  return out;
}

std::vector<std::string> decode_ids(const std::vector<std::int64_t>& ids, const Vocab& vocab) {
  std::vector<std::string> out;
  for (std::int64_t id : ids) {
    if (id == 0) continue;  // [CLS]
    if (id == 1) break;     // padding tail
    if (id < 0 || id >= static_cast<std::int64_t>(vocab.tokens.size()))
      throw DataError("decode_ids: id out of range");
    out.push_back(vocab.tokens[static_cast<std::size_t>(id)]);
  }
  return out;
}

// ------------------------------------------------------------------- JSONL

namespace {

std::vector<ordered_json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("jsonl: cannot open " + path);
  std::vector<ordered_json> out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t byte_off = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_start = byte_off;
    byte_off += line.size() + 1;
    if (line.empty()) continue;
    try {
      out.push_back(ordered_json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + " line " + std::to_string(line_no) + " (byte " +
                      std::to_string(line_start) + "): parse error: " + e.what());
    }
  }
  return out;
}

void write_lines(const std::string& path, const std::vector<ordered_json>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("jsonl: cannot open " + path + " for writing");
  for (const auto& j : lines) out << j.dump() << "\n";
  if (!out) throw DataError("jsonl: write failed for " + path);
}

template <typename T>
T field(const ordered_json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

void write_items_jsonl(const std::string& path, const std::vector<QAItem>& items) {
  std::vector<ordered_json> lines;
  lines.reserve(items.size());
  for (const auto& it : items) {
    ordered_json j;
    j["id"] = it.id;
    j["lang"] = it.lang;
    j["tokens"] = it.tokens;
    j["tags"] = it.tags;
    j["image_id"] = it.image_id;
    j["answer"] = it.answer;
    j["parallel_en_id"] = it.parallel_en_id;
    j["gold_alignment"] = it.gold_alignment;
    lines.push_back(std::move(j));
  }
  write_lines(path, lines);
}

std::vector<QAItem> read_items_jsonl(const std::string& path) {
  std::vector<QAItem> items;
  for (const auto& j : read_jsonl(path)) {
    const std::string where = path;
    QAItem it;
    it.id = field<std::string>(j, "id", where);
    it.lang = field<std::string>(j, "lang", where);
    it.tokens = field<std::vector<std::string>>(j, "tokens", where);
    it.tags = field<std::vector<std::string>>(j, "tags", where);
    it.image_id = field<std::string>(j, "image_id", where);
    it.answer = field<std::string>(j, "answer", where);
    it.parallel_en_id = field<std::string>(j, "parallel_en_id", where);
    it.gold_alignment = field<std::vector<int>>(j, "gold_alignment", where);
    if (it.tags.size() != it.tokens.size())
      throw DataError(where + ": item " + it.id + " has " + std::to_string(it.tags.size()) +
                      " tags for " + std::to_string(it.tokens.size()) + " tokens");
    items.push_back(std::move(it));
  }
  return items;
}

void write_scenes_jsonl(const std::string& path, const std::map<std::string, Scene>& scenes) {
  std::vector<ordered_json> lines;
  for (const auto& [id, scene] : scenes) {
    ordered_json j;
    j["image_id"] = id;
    ordered_json objs = ordered_json::array();
    for (const auto& o : scene.objects) {
      ordered_json jo;
      jo["shape"] = o.shape;
      jo["color"] = o.color;
      jo["size"] = o.size;
      jo["bbox"] = o.bbox;
      jo["roi"] = o.roi;
      objs.push_back(std::move(jo));
    }
    j["objects"] = std::move(objs);
    lines.push_back(std::move(j));
  }
  write_lines(path, lines);
}

std::map<std::string, Scene> read_scenes_jsonl(const std::string& path) {
  std::map<std::string, Scene> scenes;
  for (const auto& j : read_jsonl(path)) {
    Scene s;
    s.image_id = field<std::string>(j, "image_id", path);
    if (!j.contains("objects")) throw DataError(path + ": missing field 'objects'");
    for (const auto& jo : j.at("objects")) {
      SceneObject o;
      o.shape = field<std::string>(jo, "shape", path);
      o.color = field<std::string>(jo, "color", path);
      o.size = field<std::string>(jo, "size", path);
      auto bb = field<std::vector<double>>(jo, "bbox", path);
      if (bb.size() != 4) throw DataError(path + ": bbox must have 4 entries");
      std::copy(bb.begin(), bb.end(), o.bbox.begin());
      o.roi = field<std::vector<double>>(jo, "roi", path);
      s.objects.push_back(std::move(o));
    }
    scenes[s.image_id] = std::move(s);
  }
  return scenes;
}

void write_dataset(const std::string& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  write_items_jsonl(dir + "/items.jsonl", ds.items);
  write_scenes_jsonl(dir + "/scenes.jsonl", ds.scenes);
}

Dataset read_dataset(const std::string& dir) { return read_dataset(dir, {}); }

Dataset read_dataset(const std::string& dir, const std::vector<std::string>& extra_item_files) {
  Dataset ds;
  ds.items = read_items_jsonl(dir + "/items.jsonl");
  ds.scenes = read_scenes_jsonl(dir + "/scenes.jsonl");
  for (const auto& path : extra_item_files) {
    auto extra = read_items_jsonl(path);
    ds.items.insert(ds.items.end(), extra.begin(), extra.end());
  }
  ds.reindex();
  return ds;
}

}  // namespace mcm::corpus
