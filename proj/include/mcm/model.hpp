// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mcm/rng.hpp"
#include "mcm/tensor.hpp"

namespace mcm {

// Architecture hyperparameters shared by teacher and student. The cross-modal
// dimensions (d, heads, layers_cross, objects) must agree between the two for
// distillation; the language stack depth may differ.
struct ModelConfig {
  std::int64_t d = 32;            // hidden size
  std::int64_t heads = 4;         // attention heads per block
  std::int64_t layers_lang = 2;   // question encoder depth
  std::int64_t layers_img = 1;    // image encoder depth
  std::int64_t layers_cross = 2;  // cross-modality encoder depth
  std::int64_t vocab_size = 0;
  std::int64_t answer_count = 0;
  std::int64_t objects = 6;   // detected objects per image
  std::int64_t roi_dim = 32;  // RoI feature size
  std::int64_t box_dim = 4;
  std::int64_t n_max = 20;  // question positions including [CLS]
  std::int64_t mlp_ratio = 4;

  std::int64_t head_dim() const { return d / heads; }
  void validate() const;
  bool cross_compatible(const ModelConfig& other) const;
};

struct AttentionParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

struct BlockParams {
  AttentionParams att;
  Tensor w1, b1, w2, b2;
};

struct CrossLayerParams {
  AttentionParams q_att;  // question queries over object keys
  AttentionParams v_att;  // object queries over question keys
  BlockParams q_block;
  BlockParams v_block;
};

struct ModelParams {
  Tensor tok_emb;              // (vocab, d)
  Tensor pos_emb;              // (n_max, d)
  Tensor emb_gamma, emb_beta;  // (d)
  std::vector<BlockParams> lang;
  Tensor roi_proj, roi_bias;  // (d_r, d), (d)
  Tensor box_proj, box_bias;  // (d_b, d), (d)
  std::vector<BlockParams> img;
  std::vector<CrossLayerParams> cross;
  Tensor w_p, c_p;  // (2d, d), (2d)
  Tensor w_a, c_a;  // (|A|, 2d), (|A|)

  static ModelParams init(const ModelConfig& cfg, Rng& rng);

  // Unique-name view over every tensor; shared storage, insertion order fixed.
  std::vector<std::pair<std::string, Tensor>> named() const;
  void set_requires_grad(bool v);
  ModelParams clone() const;
};

// Token ids (B, n_max) with id 0 = [CLS] at position 0 and id 1 = padding;
// mask is true exactly on non-padding positions.
struct QuestionBatch {
  std::vector<std::vector<std::int64_t>> ids;
  std::vector<std::vector<std::uint8_t>> mask;
  std::vector<std::string> lang;
};

struct SceneBatch {
  Tensor roi;   // (B, k, d_r)
  Tensor bbox;  // (B, k, 4) in [0,1]
};

// Everything the distillation losses read from one forward pass. cls taps and
// z scores come from the question-side cross-attention, keyed by 1-based
// (layer, head); z is captured before the softmax.
struct DistillationTaps {
  std::map<std::pair<int, int>, Tensor> cls_taps;  // (B, d/heads) each
  Tensor z_logits;                                 // (B, L, heads, k)
  Tensor final_cls;                                // (B, d)
  Tensor answer_probs;                             // (B, |A|)
  // Attention rows actually used for the CLS query; kept so tests can verify
  // softmax(z) reproduces them.
  std::map<std::pair<int, int>, Tensor> cls_alpha;  // (B, k) each
};

struct CrossModalResult {
  Tensor h_bar;  // (B, n_max, d)
  Tensor u_bar;  // (B, k, d)
  DistillationTaps taps;  // answer_probs left empty here
};

// Pre-norm residual block over (B, len, d); mask, when given, hides key
// positions with -1e9 additive logits.
Tensor transformer_block(const Tensor& x, const std::vector<std::vector<std::uint8_t>>* key_mask,
                         const BlockParams& p, std::int64_t heads);

Tensor encode_question(const ModelConfig& cfg, const ModelParams& params, const QuestionBatch& q);
Tensor encode_image(const ModelConfig& cfg, const ModelParams& params, const SceneBatch& s);
CrossModalResult cross_modal_encode(const ModelConfig& cfg, const ModelParams& params,
                                    const Tensor& h, const Tensor& u,
                                    const std::vector<std::vector<std::uint8_t>>& mask);
Tensor predict_answer(const ModelConfig& cfg, const ModelParams& params, const Tensor& final_cls);
DistillationTaps forward(const ModelConfig& cfg, const ModelParams& params, const QuestionBatch& q,
                         const SceneBatch& s);

// Bit-exact checkpoint: "MCMD" magic, u32 version 1, u32 tensor count, then
// per tensor name(u16 length + bytes), rank u8, dims u32, little-endian f64
// data; a trailing u64 FNV-1a checksum covers all preceding bytes.
void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params);
std::pair<ModelConfig, ModelParams> load_checkpoint(const std::string& path);

}  // namespace mcm
