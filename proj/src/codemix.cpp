// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/codemix.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "mcm/errors.hpp"

namespace mcm::codemix {

const std::string AlignmentModel::kNull = "<null>";

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Position prior over {NULL} + English indices for foreign position j:
// NULL gets p0, the rest share (1 - p0) by exp(-lambda * |i/n - j/m|).
std::vector<double> diagonal_prior(int en_len, int xx_len, int j, double lambda, double p0) {
  std::vector<double> delta(static_cast<std::size_t>(en_len));
  double z = 0.0;
  for (int i = 0; i < en_len; ++i) {
    const double rel = std::fabs(double(i) / en_len - double(j) / xx_len);
    delta[static_cast<std::size_t>(i)] = std::exp(-lambda * rel);
    z += delta[static_cast<std::size_t>(i)];
  }
  for (auto& v : delta) v *= (1.0 - p0) / z;
  return delta;
}

double ttable_get(const AlignmentModel& model, const std::string& en, const std::string& xx) {
  auto row = model.ttable.find(en);
  if (row == model.ttable.end()) return 0.0;
  auto cell = row->second.find(xx);
  return cell == row->second.end() ? 0.0 : cell->second;
}

}  // namespace

AlignmentModel train_aligner(const std::vector<ParallelPair>& pairs, int iterations, double lambda,
                             double p0, AlignerStats* stats) {
  if (pairs.empty()) throw DataError("train_aligner: empty corpus");
  for (const auto& p : pairs)
    if (p.en_tokens.empty() || p.xx_tokens.empty())
      throw DataError("train_aligner: pair with an empty side");

  AlignmentModel model;
  model.lambda = lambda;
  model.p0 = p0;

  for (const auto& p : pairs) {
    for (const auto& w : p.en_tokens) model.src_vocab.insert(lower(w));
    for (const auto& w : p.xx_tokens) model.tgt_vocab.insert(lower(w));
  }

  // Uniform start over the target vocabulary.
  std::map<std::string, std::map<std::string, double>>& t = model.ttable;
  {
    const double u = 1.0 / static_cast<double>(model.tgt_vocab.size());
    for (const auto& ew : model.src_vocab)
      for (const auto& xw : model.tgt_vocab) t[ew][xw] = u;
    for (const auto& xw : model.tgt_vocab) t[AlignmentModel::kNull][xw] = u;
  }

  for (int iter = 0; iter < iterations; ++iter) {
    std::map<std::string, std::map<std::string, double>> counts;
    double ll = 0.0;
    for (const auto& pair : pairs) {
      const int n = static_cast<int>(pair.en_tokens.size());
      const int m = static_cast<int>(pair.xx_tokens.size());
      for (int j = 0; j < m; ++j) {
        const std::string xw = lower(pair.xx_tokens[static_cast<std::size_t>(j)]);
        const auto delta = diagonal_prior(n, m, j, lambda, p0);
        std::vector<double> post(static_cast<std::size_t>(n) + 1);
        post[0] = ttable_get(model, AlignmentModel::kNull, xw) * p0;
        double z = post[0];
        for (int i = 0; i < n; ++i) {
          const std::string ew = lower(pair.en_tokens[static_cast<std::size_t>(i)]);
          post[static_cast<std::size_t>(i) + 1] =
              ttable_get(model, ew, xw) * delta[static_cast<std::size_t>(i)];
          z += post[static_cast<std::size_t>(i) + 1];
        }
        if (z <= 0.0) continue;  // token unseen by every source; contributes nothing
        ll += std::log(z);
        counts[AlignmentModel::kNull][xw] += post[0] / z;
        for (int i = 0; i < n; ++i)
          counts[lower(pair.en_tokens[static_cast<std::size_t>(i)])][xw] +=
              post[static_cast<std::size_t>(i) + 1] / z;
      }
    }
    if (stats) stats->log_likelihood.push_back(ll);
    for (auto& [ew, row] : counts) {
      double total = 0.0;
      for (const auto& [xw, c] : row) total += c;
      if (total <= 0.0) continue;
      auto& trow = t[ew];
      trow.clear();
      for (const auto& [xw, c] : row) trow[xw] = c / total;
    }
  }
  return model;
}

Alignment decode_alignment(const AlignmentModel& model, const ParallelPair& pair) {
  Alignment out;
  const int n = static_cast<int>(pair.en_tokens.size());
  const int m = static_cast<int>(pair.xx_tokens.size());
  for (int j = 0; j < m; ++j) {
    const std::string xw = lower(pair.xx_tokens[static_cast<std::size_t>(j)]);
    if (!model.tgt_vocab.count(xw)) {
      out.src_index.push_back(-1);
      out.oov_count += 1;
      continue;
    }
    const auto delta = diagonal_prior(n, m, j, model.lambda, model.p0);
    double best = ttable_get(model, AlignmentModel::kNull, xw) * model.p0;
    int best_i = -1;
    for (int i = 0; i < n; ++i) {
      const double score = ttable_get(model, lower(pair.en_tokens[static_cast<std::size_t>(i)]), xw) *
                           delta[static_cast<std::size_t>(i)];
      if (score > best) {  // ties keep the smallest index
        best = score;
        best_i = i;
      }
    }
    out.src_index.push_back(best_i);
  }
  return out;
}

namespace {

int tag_tier(const std::string& tag) {
  if (tag.rfind("NE-", 0) == 0) return 0;
  if (tag == "NP") return 1;
  if (tag == "ADJ") return 2;
  return -1;
}

}  // namespace

std::vector<SpanCandidate> extract_substitutable_spans(const ParallelPair& pair,
                                                       const Alignment& alignment) {
  if (pair.en_tags.size() != pair.en_tokens.size())
    throw DataError("extract_substitutable_spans: tags/tokens length mismatch");
  if (alignment.src_index.size() != pair.xx_tokens.size())
    throw DataError("extract_substitutable_spans: alignment length mismatch");
  const int n = static_cast<int>(pair.en_tokens.size());
  const int m = static_cast<int>(pair.xx_tokens.size());

  std::vector<SpanCandidate> candidates;
  int b = 0;
  while (b < n) {
    const std::string tag = pair.en_tags[static_cast<std::size_t>(b)];
    if (tag_tier(tag) < 0) {
      ++b;
      continue;
    }
    int e = b + 1;
    while (e < n && pair.en_tags[static_cast<std::size_t>(e)] == tag) ++e;

    // Foreign window covering everything aligned into [b, e).
    int lo = m, hi = -1;
    for (int j = 0; j < m; ++j) {
      const int a = alignment.src_index[static_cast<std::size_t>(j)];
      if (a >= b && a < e) {
        lo = std::min(lo, j);
        hi = std::max(hi, j);
      }
    }
    bool ok = hi >= 0;
    // Consistency: inside the window, tokens either align into the segment or
    // to NULL; an alignment escaping the segment disqualifies the span.
    for (int j = lo; ok && j <= hi; ++j) {
      const int a = alignment.src_index[static_cast<std::size_t>(j)];
      if (a != -1 && (a < b || a >= e)) ok = false;
    }
    if (ok) candidates.push_back({b, e, lo, hi + 1, tag});
    b = e;
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const SpanCandidate& a, const SpanCandidate& b2) {
                     const int ta = tag_tier(a.tag), tb = tag_tier(b2.tag);
                     if (ta != tb) return ta < tb;
                     return a.en_begin < b2.en_begin;
                   });
  return candidates;
}

CodeMixResult generate_codemixed(const ParallelPair& pair,
                                 const std::vector<SpanCandidate>& candidates) {
  const int m = static_cast<int>(pair.xx_tokens.size());
  std::vector<int> owner(static_cast<std::size_t>(m), -1);  // candidate index per position
  std::vector<SpanCandidate> applied;
  for (const auto& c : candidates) {
    bool overlaps = false;
    for (int j = c.xx_begin; j < c.xx_end; ++j)
      if (owner[static_cast<std::size_t>(j)] >= 0) overlaps = true;
    if (overlaps) continue;
    const int idx = static_cast<int>(applied.size());
    for (int j = c.xx_begin; j < c.xx_end; ++j) owner[static_cast<std::size_t>(j)] = idx;
    applied.push_back(c);
  }

  CodeMixResult out;
  out.applied = applied;
  int j = 0;
  while (j < m) {
    const int idx = owner[static_cast<std::size_t>(j)];
    if (idx < 0) {
      out.tokens.push_back(pair.xx_tokens[static_cast<std::size_t>(j)]);
      out.origin.push_back("matrix");
      ++j;
    } else {
      const SpanCandidate& c = applied[static_cast<std::size_t>(idx)];
      for (int i = c.en_begin; i < c.en_end; ++i) {
        out.tokens.push_back(pair.en_tokens[static_cast<std::size_t>(i)]);
        out.origin.push_back("embedded");
      }
      j = c.xx_end;
    }
  }
  return out;
}

}  // namespace mcm::codemix
