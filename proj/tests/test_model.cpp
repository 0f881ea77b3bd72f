// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mcm/distill.hpp"
#include "mcm/errors.hpp"
#include "mcm/gradcheck.hpp"
#include "mcm/model.hpp"
#include "mcm/ops.hpp"
#include "mcm/rng.hpp"

using namespace mcm;

namespace {

ModelConfig tiny_config() {
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
  cfg.box_dim = 4;
  cfg.n_max = 5;
  cfg.mlp_ratio = 2;
  return cfg;
}

Tensor randn(Rng& rng, std::vector<std::int64_t> shape, double s = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data()) v = rng.normal(0.0, s);
  return t;
}

BlockParams random_block(Rng& rng, std::int64_t d, std::int64_t hidden) {
  BlockParams p;
  p.att.wq = randn(rng, {d, d}, 0.2);
  p.att.bq = Tensor::zeros({d});
  p.att.wk = randn(rng, {d, d}, 0.2);
  p.att.bk = Tensor::zeros({d});
  p.att.wv = randn(rng, {d, d}, 0.2);
  p.att.bv = Tensor::zeros({d});
  p.att.wo = randn(rng, {d, d}, 0.2);
  p.att.bo = Tensor::zeros({d});
  p.w1 = randn(rng, {d, hidden}, 0.2);
  p.b1 = Tensor::zeros({hidden});
  p.w2 = randn(rng, {hidden, d}, 0.2);
  p.b2 = Tensor::zeros({d});
  return p;
}

QuestionBatch tiny_questions() {
  QuestionBatch q;
  q.ids = {{0, 2, 3, 4, 1}, {0, 5, 6, 1, 1}};
  q.mask = {{1, 1, 1, 1, 0}, {1, 1, 1, 0, 0}};
  q.lang = {"en", "en"};
  return q;
}

SceneBatch tiny_scenes(Rng& rng, const ModelConfig& cfg, std::int64_t batch = 2) {
  SceneBatch s;
  s.roi = randn(rng, {batch, cfg.objects, cfg.roi_dim});
  s.bbox = Tensor::zeros({batch, cfg.objects, cfg.box_dim});
  for (auto& v : s.bbox.data()) v = rng.uniform();
  return s;
}

}  // namespace

TEST_CASE("transformer block with zeroed projections is the identity") {
  Rng rng(1);
  const std::int64_t d = 8;
  BlockParams p = random_block(rng, d, 16);
  for (auto& v : p.att.wo.data()) v = 0.0;
  for (auto& v : p.w2.data()) v = 0.0;
  Tensor x = randn(rng, {1, 3, d});
  Tensor y = transformer_block(x, nullptr, p, 2);
  for (std::int64_t i = 0; i < x.numel(); ++i)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-12));
}

TEST_CASE("transformer block preserves shape") {
  Rng rng(2);
  BlockParams p = random_block(rng, 8, 16);
  Tensor x = randn(rng, {1, 3, 8});
  Tensor y = transformer_block(x, nullptr, p, 2);
  CHECK(y.shape() == std::vector<std::int64_t>{1, 3, 8});
}

TEST_CASE("transformer block is permutation equivariant without positions") {
  Rng rng(3);
  BlockParams p = random_block(rng, 8, 16);
  Tensor x = randn(rng, {1, 4, 8});
  Tensor y = transformer_block(x, nullptr, p, 2);
  const std::vector<int> perm = {2, 0, 3, 1};
  Tensor xp = Tensor::zeros({1, 4, 8});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 8; ++j) xp.data()[i * 8 + j] = x.data()[perm[i] * 8 + j];
  Tensor yp = transformer_block(xp, nullptr, p, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK(yp.data()[i * 8 + j] == doctest::Approx(y.data()[perm[i] * 8 + j]).epsilon(1e-10));
}

TEST_CASE("encode_question output shape and id validation") {
  ModelConfig cfg = tiny_config();
  Rng rng(4);
  ModelParams params = ModelParams::init(cfg, rng);
  QuestionBatch q = tiny_questions();
  Tensor h = encode_question(cfg, params, q);
  CHECK(h.shape() == std::vector<std::int64_t>{2, cfg.n_max, cfg.d});

  q.ids[0][1] = cfg.vocab_size;  // out of range
  CHECK_THROWS_AS(encode_question(cfg, params, q), ShapeError);
}

TEST_CASE("padding ids do not leak into non-padded positions") {
  ModelConfig cfg = tiny_config();
  Rng rng(5);
  ModelParams params = ModelParams::init(cfg, rng);
  QuestionBatch q = tiny_questions();
  QuestionBatch q2 = q;
  q2.ids[0][4] = 7;  // padded slot, different id
  q2.ids[1][3] = 2;
  Tensor h1 = encode_question(cfg, params, q);
  Tensor h2 = encode_question(cfg, params, q2);
  for (int b = 0; b < 2; ++b)
    for (std::int64_t pos = 0; pos < cfg.n_max; ++pos) {
      if (!q.mask[b][static_cast<std::size_t>(pos)]) continue;
      for (std::int64_t j = 0; j < cfg.d; ++j) {
        const std::int64_t idx = (b * cfg.n_max + pos) * cfg.d + j;
        CHECK(h1.data()[idx] == doctest::Approx(h2.data()[idx]).epsilon(1e-12));
      }
    }
}

TEST_CASE("encode_image averaging identity and permutation equivariance") {
  ModelConfig cfg = tiny_config();
  Rng rng(6);
  ModelParams params = ModelParams::init(cfg, rng);

  SUBCASE("zero projections with equal biases hit the bias vector") {
    for (auto& v : params.roi_proj.data()) v = 0.0;
    for (auto& v : params.box_proj.data()) v = 0.0;
    for (std::int64_t j = 0; j < cfg.d; ++j) {
      params.roi_bias.data()[static_cast<std::size_t>(j)] = 0.25 * double(j);
      params.box_bias.data()[static_cast<std::size_t>(j)] = 0.25 * double(j);
    }
    // Identity image encoder so u_j is visible at the output.
    for (auto& v : params.img[0].att.wo.data()) v = 0.0;
    for (auto& v : params.img[0].w2.data()) v = 0.0;
    SceneBatch s = tiny_scenes(rng, cfg);
    Tensor u = encode_image(cfg, params, s);
    for (std::int64_t o = 0; o < cfg.objects; ++o)
      for (std::int64_t j = 0; j < cfg.d; ++j)
        CHECK(u.data()[(0 * cfg.objects + o) * cfg.d + j] ==
              doctest::Approx(0.25 * double(j)).epsilon(1e-12));
  }

  SUBCASE("object permutation permutes rows") {
    SceneBatch s = tiny_scenes(rng, cfg, 1);
    Tensor u = encode_image(cfg, params, s);
    const std::vector<int> perm = {2, 0, 1};
    SceneBatch sp;
    sp.roi = Tensor::zeros({1, cfg.objects, cfg.roi_dim});
    sp.bbox = Tensor::zeros({1, cfg.objects, cfg.box_dim});
    for (int o = 0; o < 3; ++o) {
      for (std::int64_t r = 0; r < cfg.roi_dim; ++r)
        sp.roi.data()[o * cfg.roi_dim + r] = s.roi.data()[perm[o] * cfg.roi_dim + r];
      for (std::int64_t c = 0; c < cfg.box_dim; ++c)
        sp.bbox.data()[o * cfg.box_dim + c] = s.bbox.data()[perm[o] * cfg.box_dim + c];
    }
    Tensor up = encode_image(cfg, params, sp);
    for (int o = 0; o < 3; ++o)
      for (std::int64_t j = 0; j < cfg.d; ++j)
        CHECK(up.data()[o * cfg.d + j] ==
              doctest::Approx(u.data()[perm[o] * cfg.d + j]).epsilon(1e-10));
  }

  SUBCASE("output shape") {
    SceneBatch s = tiny_scenes(rng, cfg);
    CHECK(encode_image(cfg, params, s).shape() ==
          std::vector<std::int64_t>{2, cfg.objects, cfg.d});
  }
}

TEST_CASE("cross-modal taps: shapes, softmax consistency, single-object attention") {
  ModelConfig cfg = tiny_config();
  Rng rng(7);
  ModelParams params = ModelParams::init(cfg, rng);
  QuestionBatch q = tiny_questions();
  SceneBatch s = tiny_scenes(rng, cfg);
  Tensor h = encode_question(cfg, params, q);
  Tensor u = encode_image(cfg, params, s);
  CrossModalResult cm = cross_modal_encode(cfg, params, h, u, q.mask);

  CHECK(cm.taps.z_logits.shape() ==
        std::vector<std::int64_t>{2, cfg.layers_cross, cfg.heads, cfg.objects});
  CHECK(cm.h_bar.shape() == std::vector<std::int64_t>{2, cfg.n_max, cfg.d});
  CHECK(cm.u_bar.shape() == std::vector<std::int64_t>{2, cfg.objects, cfg.d});

  // softmax over the captured raw scores must reproduce the attention rows.
  for (int l = 1; l <= cfg.layers_cross; ++l)
    for (int j = 1; j <= cfg.heads; ++j) {
      const Tensor& alpha = cm.taps.cls_alpha.at({l, j});
      for (int b = 0; b < 2; ++b) {
        std::vector<double> z(static_cast<std::size_t>(cfg.objects));
        for (std::int64_t k = 0; k < cfg.objects; ++k)
          z[static_cast<std::size_t>(k)] =
              cm.taps.z_logits
                  .data()[((b * cfg.layers_cross + (l - 1)) * cfg.heads + (j - 1)) * cfg.objects +
                          k];
        double mx = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (auto& v : z) {
          v = std::exp(v - mx);
          sum += v;
        }
        double alpha_sum = 0.0;
        for (std::int64_t k = 0; k < cfg.objects; ++k) {
          CHECK(alpha.data()[b * cfg.objects + k] ==
                doctest::Approx(z[static_cast<std::size_t>(k)] / sum).epsilon(1e-10));
          alpha_sum += alpha.data()[b * cfg.objects + k];
        }
        CHECK(alpha_sum == doctest::Approx(1.0).epsilon(1e-12));
      }
    }

  SUBCASE("single object forces attention weight 1") {
    ModelConfig cfg1 = cfg;
    cfg1.objects = 1;
    Rng rng1(8);
    ModelParams p1 = ModelParams::init(cfg1, rng1);
    SceneBatch s1;
    s1.roi = randn(rng1, {2, 1, cfg1.roi_dim});
    s1.bbox = Tensor::zeros({2, 1, cfg1.box_dim});
    DistillationTaps taps = forward(cfg1, p1, q, s1);
    for (const auto& [key, alpha] : taps.cls_alpha)
      for (double v : alpha.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("predict_answer: zero head gives 0.5, probabilities stay in (0,1)") {
  ModelConfig cfg = tiny_config();
  Rng rng(9);
  ModelParams params = ModelParams::init(cfg, rng);
  for (auto& v : params.w_a.data()) v = 0.0;
  for (auto& v : params.c_a.data()) v = 0.0;
  Tensor cls = randn(rng, {2, cfg.d});
  Tensor probs = predict_answer(cfg, params, cls);
  CHECK(probs.shape() == std::vector<std::int64_t>{2, cfg.answer_count});
  for (double v : probs.data()) CHECK(v == doctest::Approx(0.5));

  Rng rng2(10);
  ModelParams p2 = ModelParams::init(cfg, rng2);
  Tensor probs2 = predict_answer(cfg, p2, cls);
  for (double v : probs2.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("forward is deterministic and frozen mode records no graph") {
  ModelConfig cfg = tiny_config();
  Rng rng(11);
  ModelParams params = ModelParams::init(cfg, rng);
  QuestionBatch q = tiny_questions();
  SceneBatch s = tiny_scenes(rng, cfg);

  DistillationTaps a = forward(cfg, params, q, s);
  DistillationTaps b = forward(cfg, params, q, s);
  CHECK(a.answer_probs.data() == b.answer_probs.data());
  CHECK(a.final_cls.data() == b.final_cls.data());
  CHECK(a.z_logits.data() == b.z_logits.data());

  ModelParams frozen = params.clone();
  frozen.set_requires_grad(false);
  DistillationTaps t = forward(cfg, frozen, q, s);
  CHECK(!t.answer_probs.has_node());
  CHECK(!t.answer_probs.requires_grad());
  CHECK(!t.final_cls.has_node());
  for (const auto& [name, tensor] : frozen.named()) CHECK(!tensor.has_grad());
  CHECK(t.answer_probs.data() == a.answer_probs.data());

  ModelParams copy = params.clone();
  DistillationTaps c = forward(cfg, copy, q, s);
  CHECK(c.answer_probs.data() == a.answer_probs.data());
  CHECK(c.z_logits.data() == a.z_logits.data());
}

TEST_CASE("end-to-end grad check on the tiny config") {
  ModelConfig cfg = tiny_config();
  Rng rng(12);
  ModelParams teacher = ModelParams::init(cfg, rng);
  teacher.set_requires_grad(false);
  ModelParams student = ModelParams::init(cfg, rng);
  QuestionBatch q = tiny_questions();
  SceneBatch s = tiny_scenes(rng, cfg);
  Tensor gold = Tensor::zeros({2, cfg.answer_count});
  gold.data()[1] = 1.0;
  gold.data()[cfg.answer_count + 2] = 1.0;
  distill::DistillConfig dc;
  dc.tap_set = distill::default_tap_set(cfg.layers_cross, cfg.heads);

  DistillationTaps teacher_taps;
  {
    NoGradGuard ng;
    teacher_taps = forward(cfg, teacher, q, s);
  }

  struct Probe {
    const char* name;
    Tensor* slot;
  };
  std::vector<Probe> probes = {{"lang.att.wq", &student.lang[0].att.wq},
                               {"emb.tok", &student.tok_emb},
                               {"img.w1", &student.img[0].w1},
                               {"cross.qatt.wk", &student.cross[0].q_att.wk},
                               {"cross.vblock.w2", &student.cross[0].v_block.w2},
                               {"head.wp", &student.w_p}};
  for (auto& probe : probes) {
    Tensor input = probe.slot->detached_copy();
    auto fn = [&](const Tensor& x) {
      Tensor saved = *probe.slot;
      *probe.slot = x;
      DistillationTaps taps = forward(cfg, student, q, s);
      Tensor loss = distill::total_loss(teacher_taps, taps, gold, dc).total;
      *probe.slot = saved;
      return loss;
    };
    const double err = grad_check(fn, input);
    INFO(probe.name, " err ", err);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("checkpoint round trip is bit exact and detects corruption") {
  ModelConfig cfg = tiny_config();
  Rng rng(13);
  ModelParams params = ModelParams::init(cfg, rng);
  const std::string path = std::filesystem::temp_directory_path() / "mcm_test.ckpt";
  save_checkpoint(path, cfg, params);
  auto [cfg2, params2] = load_checkpoint(path);
  CHECK(cfg2.d == cfg.d);
  CHECK(cfg2.vocab_size == cfg.vocab_size);
  auto a = params.named();
  auto b = params2.named();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second.data() == b[i].second.data());
  }

  // Identical content twice -> identical bytes.
  const std::string path2 = std::filesystem::temp_directory_path() / "mcm_test2.ckpt";
  save_checkpoint(path2, cfg, params);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);

  // Flip one byte in the middle: checksum must catch it.
  s1[s1.size() / 2] = static_cast<char>(s1[s1.size() / 2] ^ 0x5a);
  std::ofstream corrupt(path2, std::ios::binary | std::ios::trunc);
  corrupt << s1;
  corrupt.close();
  CHECK_THROWS_AS(load_checkpoint(path2), DataError);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}
