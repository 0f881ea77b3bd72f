// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "mcm/errors.hpp"
#include "mcm/ops.hpp"

namespace mcm {

void ModelConfig::validate() const {
  if (d < 1 || heads < 1 || d % heads != 0)
    throw ConfigError("model config: d must be a positive multiple of heads");
  if (layers_lang < 1 || layers_img < 1 || layers_cross < 1)
    throw ConfigError("model config: all encoder depths must be >= 1");
  if (objects < 1 || n_max < 1 || roi_dim < 1 || box_dim < 1 || mlp_ratio < 1)
    throw ConfigError("model config: objects, n_max, roi_dim, box_dim, mlp_ratio must be >= 1");
  if (vocab_size < 2 || answer_count < 1)
    throw ConfigError("model config: vocab_size >= 2 and answer_count >= 1 required");
}

bool ModelConfig::cross_compatible(const ModelConfig& other) const {
  return d == other.d && heads == other.heads && layers_cross == other.layers_cross &&
         objects == other.objects && answer_count == other.answer_count &&
         n_max == other.n_max;
}

namespace {

Tensor trunc_normal(Rng& rng, std::vector<std::int64_t> shape, double stddev = 0.02) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (auto& v : t.data()) v = rng.truncated_normal(stddev);
  return t;
}

Tensor zeros_param(std::vector<std::int64_t> shape) {
  return Tensor::zeros(std::move(shape), true);
}

AttentionParams init_attention(Rng& rng, std::int64_t d) {
  AttentionParams p;
  p.wq = trunc_normal(rng, {d, d});
  p.bq = zeros_param({d});
  p.wk = trunc_normal(rng, {d, d});
  p.bk = zeros_param({d});
  p.wv = trunc_normal(rng, {d, d});
  p.bv = zeros_param({d});
  p.wo = trunc_normal(rng, {d, d});
  p.bo = zeros_param({d});
  return p;
}

BlockParams init_block(Rng& rng, std::int64_t d, std::int64_t hidden) {
  BlockParams p;
  p.att = init_attention(rng, d);
  p.w1 = trunc_normal(rng, {d, hidden});
  p.b1 = zeros_param({hidden});
  p.w2 = trunc_normal(rng, {hidden, d});
  p.b2 = zeros_param({d});
  return p;
}

// (B,n,din) x (din,dout) -> (B,n,dout)
Tensor matmul_rows(const Tensor& x, const Tensor& w) {
  const std::int64_t b = x.dim(0), n = x.dim(1);
  Tensor flat = ops::reshape(x, {b * n, x.dim(2)});
  return ops::reshape(ops::matmul(flat, w), {b, n, w.dim(1)});
}

Tensor linear_rows(const Tensor& x, const Tensor& w, const Tensor& bias) {
  return ops::add_bias(matmul_rows(x, w), bias);
}

// Additive key mask: 0 where visible, -1e9 where hidden; shaped (B, nq, nk).
Tensor additive_mask(const std::vector<std::vector<std::uint8_t>>& key_mask, std::int64_t nq) {
  const std::int64_t b = static_cast<std::int64_t>(key_mask.size());
  const std::int64_t nk = static_cast<std::int64_t>(key_mask[0].size());
  Tensor m = Tensor::zeros({b, nq, nk});
  auto& d = m.data();
  for (std::int64_t bi = 0; bi < b; ++bi)
    for (std::int64_t j = 0; j < nk; ++j)
      if (!key_mask[static_cast<std::size_t>(bi)][static_cast<std::size_t>(j)])
        for (std::int64_t i = 0; i < nq; ++i) d[(bi * nq + i) * nk + j] = -1e9;
  return m;
}

struct HeadCapture {
  Tensor z;      // (B, nk) pre-softmax CLS row
  Tensor alpha;  // (B, nk)
  Tensor ctx;    // (B, head_dim) CLS context before the output projection
};

// Scaled dot-product attention with per-head captures of the CLS (row 0)
// query. Queries from x, keys/values from kv; used for both self and cross
// attention.
Tensor attention(const Tensor& x, const Tensor& kv, const AttentionParams& p, std::int64_t heads,
                 const std::vector<std::vector<std::uint8_t>>* key_mask,
                 std::vector<HeadCapture>* captures) {
  const std::int64_t b = x.dim(0), nq = x.dim(1), d = x.dim(2);
  const std::int64_t nk = kv.dim(1);
  const std::int64_t hd = d / heads;
  Tensor q = linear_rows(x, p.wq, p.bq);
  Tensor k = linear_rows(kv, p.wk, p.bk);
  Tensor v = linear_rows(kv, p.wv, p.bv);
  Tensor mask_add;
  if (key_mask) mask_add = additive_mask(*key_mask, nq);

  std::vector<Tensor> head_ctx;
  head_ctx.reserve(static_cast<std::size_t>(heads));
  for (std::int64_t h = 0; h < heads; ++h) {
    Tensor qh = ops::slice(q, 2, h * hd, hd);
    Tensor kh = ops::slice(k, 2, h * hd, hd);
    Tensor vh = ops::slice(v, 2, h * hd, hd);
    Tensor scores = ops::scale(ops::bmm(qh, ops::transpose(kh)), 1.0 / std::sqrt(double(hd)));
    Tensor z_cls;
    if (captures) z_cls = ops::reshape(ops::slice(scores, 1, 0, 1), {b, nk});
    if (mask_add.defined()) scores = ops::add(scores, mask_add);
    Tensor alpha = ops::softmax(scores);
    Tensor ctx = ops::bmm(alpha, vh);  // (B, nq, hd)
    if (captures) {
      HeadCapture cap;
      cap.z = z_cls;
      cap.alpha = ops::reshape(ops::slice(alpha, 1, 0, 1), {b, nk});
      cap.ctx = ops::reshape(ops::slice(ctx, 1, 0, 1), {b, hd});
      captures->push_back(std::move(cap));
    }
    head_ctx.push_back(std::move(ctx));
  }
  Tensor merged = ops::concat(head_ctx, 2);
  return linear_rows(merged, p.wo, p.bo);
}

Tensor mlp(const Tensor& x, const BlockParams& p) {
  return linear_rows(ops::gelu(linear_rows(x, p.w1, p.b1)), p.w2, p.b2);
}

}  // namespace

Tensor transformer_block(const Tensor& x, const std::vector<std::vector<std::uint8_t>>* key_mask,
                         const BlockParams& p, std::int64_t heads) {
  if (x.rank() != 3 || x.dim(2) != p.att.wq.dim(0))
    throw ShapeError("transformer_block: input " + x.shape_str() + " does not match d=" +
                     std::to_string(p.att.wq.dim(0)));
  if (key_mask && static_cast<std::int64_t>(key_mask->size()) != x.dim(0))
    throw ShapeError("transformer_block: mask batch mismatch");
  Tensor att = attention(ops::layernorm(x), ops::layernorm(x), p.att, heads, key_mask, nullptr);
  Tensor x1 = ops::add(x, att);
  Tensor out = ops::add(x1, mlp(ops::layernorm(x1), p));
  return out;
}

Tensor encode_question(const ModelConfig& cfg, const ModelParams& params, const QuestionBatch& q) {
  if (q.ids.empty()) throw ShapeError("encode_question: empty batch");
  for (const auto& row : q.ids)
    if (static_cast<std::int64_t>(row.size()) != cfg.n_max)
      throw ShapeError("encode_question: row length != n_max");
  Tensor emb = ops::embedding(params.tok_emb, q.ids);  // throws on id >= vocab
  emb = ops::add_bias(emb, params.pos_emb);
  Tensor x = ops::scale_shift(ops::layernorm(emb), params.emb_gamma, params.emb_beta);
  for (const auto& block : params.lang) x = transformer_block(x, &q.mask, block, cfg.heads);
  return x;
}

Tensor encode_image(const ModelConfig& cfg, const ModelParams& params, const SceneBatch& s) {
  if (s.roi.rank() != 3 || s.roi.dim(1) != cfg.objects || s.roi.dim(2) != cfg.roi_dim)
    throw ShapeError("encode_image: roi " + s.roi.shape_str() + " does not match config");
  if (s.bbox.rank() != 3 || s.bbox.dim(1) != cfg.objects || s.bbox.dim(2) != cfg.box_dim)
    throw ShapeError("encode_image: bbox " + s.bbox.shape_str() + " does not match config");
  Tensor f = linear_rows(s.roi, params.roi_proj, params.roi_bias);
  Tensor p = linear_rows(s.bbox, params.box_proj, params.box_bias);
  Tensor u = ops::scale(ops::add(f, p), 0.5);
  for (const auto& block : params.img) u = transformer_block(u, nullptr, block, cfg.heads);
  return u;
}

CrossModalResult cross_modal_encode(const ModelConfig& cfg, const ModelParams& params,
                                    const Tensor& h, const Tensor& u,
                                    const std::vector<std::vector<std::uint8_t>>& mask) {
  if (h.rank() != 3 || u.rank() != 3 || h.dim(0) != u.dim(0) || h.dim(2) != cfg.d ||
      u.dim(2) != cfg.d)
    throw ShapeError("cross_modal_encode: bad inputs " + h.shape_str() + " / " + u.shape_str());
  const std::int64_t b = h.dim(0);
  const int heads = static_cast<int>(cfg.heads);

  CrossModalResult res;
  Tensor hq = h, uq = u;
  std::vector<Tensor> layer_z;
  for (int l = 1; l <= cfg.layers_cross; ++l) {
    const CrossLayerParams& lp = params.cross[static_cast<std::size_t>(l - 1)];
    // Both directions read the previous layer's outputs.
    std::vector<HeadCapture> caps;
    Tensor h_tilde = attention(hq, uq, lp.q_att, cfg.heads, nullptr, &caps);
    Tensor u_tilde = attention(uq, hq, lp.v_att, cfg.heads, &mask, nullptr);
    hq = transformer_block(h_tilde, &mask, lp.q_block, cfg.heads);
    uq = transformer_block(u_tilde, nullptr, lp.v_block, cfg.heads);

    std::vector<Tensor> head_z;
    for (int j = 1; j <= heads; ++j) {
      HeadCapture& cap = caps[static_cast<std::size_t>(j - 1)];
      res.taps.cls_taps[{l, j}] = cap.ctx;
      res.taps.cls_alpha[{l, j}] = cap.alpha;
      head_z.push_back(ops::reshape(cap.z, {b, 1, cfg.objects}));
    }
    layer_z.push_back(ops::reshape(ops::concat(head_z, 1), {b, 1, cfg.heads, cfg.objects}));
  }
  res.taps.z_logits = ops::concat(layer_z, 1);  // (B, L, heads, k)
  res.h_bar = hq;
  res.u_bar = uq;
  res.taps.final_cls = ops::reshape(ops::slice(hq, 1, 0, 1), {b, cfg.d});
  return res;
}

Tensor predict_answer(const ModelConfig& cfg, const ModelParams& params, const Tensor& final_cls) {
  if (final_cls.rank() != 2 || final_cls.dim(1) != cfg.d)
    throw ShapeError("predict_answer: cls " + final_cls.shape_str() + " does not match d");
  Tensor pbar = ops::gelu(ops::add_bias(ops::matmul(final_cls, ops::transpose(params.w_p)),
                                        params.c_p));            // (B, 2d)
  Tensor logits = ops::add_bias(ops::matmul(pbar, ops::transpose(params.w_a)), params.c_a);
  return ops::sigmoid(logits);  // independent per-answer probabilities
}

DistillationTaps forward(const ModelConfig& cfg, const ModelParams& params, const QuestionBatch& q,
                         const SceneBatch& s) {
  Tensor h = encode_question(cfg, params, q);
  Tensor u = encode_image(cfg, params, s);
  CrossModalResult cm = cross_modal_encode(cfg, params, h, u, q.mask);
  cm.taps.answer_probs = predict_answer(cfg, params, cm.taps.final_cls);
  return cm.taps;
}

// ------------------------------------------------------------------ params

ModelParams ModelParams::init(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::int64_t d = cfg.d, hidden = cfg.d * cfg.mlp_ratio;
  ModelParams p;
  p.tok_emb = trunc_normal(rng, {cfg.vocab_size, d});
  p.pos_emb = trunc_normal(rng, {cfg.n_max, d});
  p.emb_gamma = Tensor::full({d}, 1.0, true);
  p.emb_beta = zeros_param({d});
  for (std::int64_t i = 0; i < cfg.layers_lang; ++i) p.lang.push_back(init_block(rng, d, hidden));
  p.roi_proj = trunc_normal(rng, {cfg.roi_dim, d});
  p.roi_bias = zeros_param({d});
  p.box_proj = trunc_normal(rng, {cfg.box_dim, d});
  p.box_bias = zeros_param({d});
  for (std::int64_t i = 0; i < cfg.layers_img; ++i) p.img.push_back(init_block(rng, d, hidden));
  for (std::int64_t i = 0; i < cfg.layers_cross; ++i) {
    CrossLayerParams cl;
    cl.q_att = init_attention(rng, d);
    cl.v_att = init_attention(rng, d);
    cl.q_block = init_block(rng, d, hidden);
    cl.v_block = init_block(rng, d, hidden);
    p.cross.push_back(std::move(cl));
  }
  p.w_p = trunc_normal(rng, {2 * d, d});
  p.c_p = zeros_param({2 * d});
  p.w_a = trunc_normal(rng, {cfg.answer_count, 2 * d});
  p.c_a = zeros_param({cfg.answer_count});
  return p;
}

namespace {

void add_attention(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                   const AttentionParams& a) {
  out.emplace_back(prefix + ".wq", a.wq);
  out.emplace_back(prefix + ".bq", a.bq);
  out.emplace_back(prefix + ".wk", a.wk);
  out.emplace_back(prefix + ".bk", a.bk);
  out.emplace_back(prefix + ".wv", a.wv);
  out.emplace_back(prefix + ".bv", a.bv);
  out.emplace_back(prefix + ".wo", a.wo);
  out.emplace_back(prefix + ".bo", a.bo);
}

void add_block(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
               const BlockParams& b) {
  add_attention(out, prefix + ".att", b.att);
  out.emplace_back(prefix + ".w1", b.w1);
  out.emplace_back(prefix + ".b1", b.b1);
  out.emplace_back(prefix + ".w2", b.w2);
  out.emplace_back(prefix + ".b2", b.b2);
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("emb.tok", tok_emb);
  out.emplace_back("emb.pos", pos_emb);
  out.emplace_back("emb.ln.gamma", emb_gamma);
  out.emplace_back("emb.ln.beta", emb_beta);
  for (std::size_t i = 0; i < lang.size(); ++i)
    add_block(out, "lang." + std::to_string(i), lang[i]);
  out.emplace_back("img.roi.proj", roi_proj);
  out.emplace_back("img.roi.bias", roi_bias);
  out.emplace_back("img.box.proj", box_proj);
  out.emplace_back("img.box.bias", box_bias);
  for (std::size_t i = 0; i < img.size(); ++i) add_block(out, "img." + std::to_string(i), img[i]);
  for (std::size_t i = 0; i < cross.size(); ++i) {
    const std::string p = "cross." + std::to_string(i);
    add_attention(out, p + ".qatt", cross[i].q_att);
    add_attention(out, p + ".vatt", cross[i].v_att);
    add_block(out, p + ".qblock", cross[i].q_block);
    add_block(out, p + ".vblock", cross[i].v_block);
  }
  out.emplace_back("head.wp", w_p);
  out.emplace_back("head.cp", c_p);
  out.emplace_back("head.wa", w_a);
  out.emplace_back("head.ca", c_a);
  return out;
}

void ModelParams::set_requires_grad(bool v) {
  for (auto& [name, t] : named()) {
    Tensor tt = t;
    tt.set_requires_grad(v);
  }
}

ModelParams ModelParams::clone() const {
  ModelParams copy = *this;
  // Rebuild every tensor with fresh storage via the named view.
  auto src = named();
  std::map<std::string, Tensor> fresh;
  for (auto& [name, t] : src) {
    Tensor c = t.detached_copy();
    c.set_requires_grad(t.requires_grad());
    fresh[name] = c;
  }
  auto fetch = [&fresh](const std::string& name) { return fresh.at(name); };
  copy.tok_emb = fetch("emb.tok");
  copy.pos_emb = fetch("emb.pos");
  copy.emb_gamma = fetch("emb.ln.gamma");
  copy.emb_beta = fetch("emb.ln.beta");
  auto fetch_att = [&](const std::string& p, AttentionParams& a) {
    a.wq = fetch(p + ".wq");
    a.bq = fetch(p + ".bq");
    a.wk = fetch(p + ".wk");
    a.bk = fetch(p + ".bk");
    a.wv = fetch(p + ".wv");
    a.bv = fetch(p + ".bv");
    a.wo = fetch(p + ".wo");
    a.bo = fetch(p + ".bo");
  };
  auto fetch_block = [&](const std::string& p, BlockParams& b) {
    fetch_att(p + ".att", b.att);
    b.w1 = fetch(p + ".w1");
    b.b1 = fetch(p + ".b1");
    b.w2 = fetch(p + ".w2");
    b.b2 = fetch(p + ".b2");
  };
  for (std::size_t i = 0; i < copy.lang.size(); ++i)
    fetch_block("lang." + std::to_string(i), copy.lang[i]);
  copy.roi_proj = fetch("img.roi.proj");
  copy.roi_bias = fetch("img.roi.bias");
  copy.box_proj = fetch("img.box.proj");
  copy.box_bias = fetch("img.box.bias");
  for (std::size_t i = 0; i < copy.img.size(); ++i)
    fetch_block("img." + std::to_string(i), copy.img[i]);
  for (std::size_t i = 0; i < copy.cross.size(); ++i) {
    const std::string p = "cross." + std::to_string(i);
    fetch_att(p + ".qatt", copy.cross[i].q_att);
    fetch_att(p + ".vatt", copy.cross[i].v_att);
    fetch_block(p + ".qblock", copy.cross[i].q_block);
    fetch_block(p + ".vblock", copy.cross[i].v_block);
  }
  copy.w_p = fetch("head.wp");
  copy.c_p = fetch("head.cp");
  copy.w_a = fetch("head.wa");
  copy.c_a = fetch("head.ca");
  return copy;
}

// -------------------------------------------------------------- checkpoint

namespace {

constexpr char kMagic[4] = {'M', 'C', 'M', 'D'};

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(buf, bits);
}

std::uint64_t fnv1a(const std::string& buf) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : buf) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  void need(std::size_t n, const char* what) {
    if (pos + n > buf.size())
      throw DataError(std::string("checkpoint: truncated while reading ") + what + " at byte " +
                      std::to_string(pos));
  }
  std::uint16_t u16() {
    need(2, "u16");
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= std::uint16_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8, "u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(std::size_t n) {
    need(n, "name");
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

std::vector<double> config_values(const ModelConfig& c) {
  return {double(c.d),       double(c.heads),   double(c.layers_lang), double(c.layers_img),
          double(c.layers_cross), double(c.vocab_size), double(c.answer_count),
          double(c.objects), double(c.roi_dim), double(c.box_dim),     double(c.n_max),
          double(c.mlp_ratio)};
}

ModelConfig config_from_values(const std::vector<double>& v) {
  if (v.size() != 12) throw DataError("checkpoint: config tensor has wrong length");
  ModelConfig c;
  c.d = std::int64_t(v[0]);
  c.heads = std::int64_t(v[1]);
  c.layers_lang = std::int64_t(v[2]);
  c.layers_img = std::int64_t(v[3]);
  c.layers_cross = std::int64_t(v[4]);
  c.vocab_size = std::int64_t(v[5]);
  c.answer_count = std::int64_t(v[6]);
  c.objects = std::int64_t(v[7]);
  c.roi_dim = std::int64_t(v[8]);
  c.box_dim = std::int64_t(v[9]);
  c.n_max = std::int64_t(v[10]);
  c.mlp_ratio = std::int64_t(v[11]);
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, 1);  // version
  auto entries = params.named();
  put_u32(buf, static_cast<std::uint32_t>(entries.size() + 1));
  auto write_tensor = [&buf](const std::string& name, const std::vector<std::int64_t>& shape,
                             const std::vector<double>& data) {
    put_u16(buf, static_cast<std::uint16_t>(name.size()));
    buf.append(name);
    buf.push_back(static_cast<char>(shape.size()));
    for (std::int64_t dim : shape) put_u32(buf, static_cast<std::uint32_t>(dim));
    for (double v : data) put_f64(buf, v);
  };
  write_tensor("config", {12}, config_values(cfg));
  for (const auto& [name, t] : entries) write_tensor(name, t.shape(), t.data());
  put_u64(buf, fnv1a(buf));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot open " + path + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("checkpoint: write failed for " + path);
}

std::pair<ModelConfig, ModelParams> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 16) throw DataError("checkpoint: file too short: " + path);
  const std::string body = buf.substr(0, buf.size() - 8);
  Reader tail{buf, buf.size() - 8};
  if (tail.u64() != fnv1a(body)) throw DataError("checkpoint: checksum mismatch in " + path);

  Reader r{buf};
  if (r.str(4) != std::string(kMagic, 4)) throw DataError("checkpoint: bad magic in " + path);
  if (r.u32() != 1) throw DataError("checkpoint: unsupported version in " + path);
  const std::uint32_t count = r.u32();
  std::map<std::string, Tensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16();
    const std::string name = r.str(name_len);
    r.need(1, "rank");
    const int rank = static_cast<unsigned char>(buf[r.pos++]);
    std::vector<std::int64_t> shape;
    std::int64_t n = 1;
    for (int j = 0; j < rank; ++j) {
      shape.push_back(static_cast<std::int64_t>(r.u32()));
      n *= shape.back();
    }
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = r.f64();
    tensors[name] = Tensor::from_data(std::move(shape), std::move(data));
  }
  if (!tensors.count("config")) throw DataError("checkpoint: missing config tensor in " + path);
  ModelConfig cfg = config_from_values(tensors.at("config").data());
  cfg.validate();

  // Template the layout, then overwrite every tensor with the stored values.
  Rng rng(0);
  ModelParams params = ModelParams::init(cfg, rng);
  for (auto& [name, t] : params.named()) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint: missing tensor " + name + " in " + path);
    if (it->second.shape() != t.shape())
      throw DataError("checkpoint: shape mismatch for " + name + " in " + path);
    Tensor dst = t;
    dst.data() = it->second.data();
  }
  return {cfg, params};
}

}  // namespace mcm
