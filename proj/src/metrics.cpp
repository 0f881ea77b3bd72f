// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "mcm/errors.hpp"

namespace mcm::metrics {

namespace {
constexpr double kEps = 1e-9;
}

bool is_language_independent(const std::string& token) {
  if (token.empty()) return true;
  for (unsigned char c : token)
    if (!std::isdigit(c) && !std::ispunct(c)) return false;
  return true;
}

ComplexityScores codemix_complexity(const LabeledSentence& s) {
  if (s.tokens.empty()) throw DataError("codemix_complexity: empty sentence");
  if (s.labels.size() != s.tokens.size())
    throw DataError("codemix_complexity: labels/tokens length mismatch");
  const std::int64_t n = static_cast<std::int64_t>(s.tokens.size());

  std::map<std::string, std::int64_t> per_lang;
  std::vector<std::string> labeled_seq;
  std::int64_t u = 0;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (is_language_independent(s.tokens[i])) {
      ++u;
      continue;
    }
    per_lang[s.labels[i]] += 1;
    labeled_seq.push_back(s.labels[i]);
  }

  ComplexityScores out;
  if (n > u && !per_lang.empty()) {
    std::int64_t max_w = 0;
    for (const auto& [lang, c] : per_lang) max_w = std::max(max_w, c);
    out.cmi = 100.0 * (1.0 - static_cast<double>(max_w) / static_cast<double>(n - u));
  }
  if (n > 1) {
    std::int64_t switches = 0;
    for (std::size_t i = 1; i < labeled_seq.size(); ++i)
      if (labeled_seq[i] != labeled_seq[i - 1]) ++switches;
    out.spf = 100.0 * static_cast<double>(switches) / static_cast<double>(n - 1);
  }
  return out;
}

namespace {

using Tokens = std::vector<std::string>;

struct NgramStats {
  std::int64_t matched[4] = {0, 0, 0, 0};
  std::int64_t total[4] = {0, 0, 0, 0};
  std::int64_t cand_len = 0;
  std::int64_t ref_len = 0;
};

std::map<std::string, std::int64_t> ngram_counts(const Tokens& toks, int n) {
  std::map<std::string, std::int64_t> counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) key += toks[i + static_cast<std::size_t>(j)] + "\x1f";
    counts[key] += 1;
  }
  return counts;
}

void accumulate(NgramStats& st, const Tokens& cand, const Tokens& ref) {
  st.cand_len += static_cast<std::int64_t>(cand.size());
  st.ref_len += static_cast<std::int64_t>(ref.size());
  for (int n = 1; n <= 4; ++n) {
    auto cc = ngram_counts(cand, n);
    auto rc = ngram_counts(ref, n);
    for (const auto& [g, c] : cc) {
      st.total[n - 1] += c;
      auto it = rc.find(g);
      if (it != rc.end()) st.matched[n - 1] += std::min(c, it->second);
    }
  }
}

double bleu_from(const NgramStats& st) {
  double log_p = 0.0;
  for (int n = 0; n < 4; ++n)
    log_p += std::log((static_cast<double>(st.matched[n]) + kEps) /
                      (static_cast<double>(st.total[n]) + kEps));
  log_p /= 4.0;
  double bp = 1.0;
  if (st.cand_len < st.ref_len && st.cand_len > 0)
    bp = std::exp(1.0 - static_cast<double>(st.ref_len) / static_cast<double>(st.cand_len));
  if (st.cand_len == 0) bp = 0.0;
  return 100.0 * bp * std::exp(log_p);
}

std::int64_t lcs_length(const Tokens& a, const Tokens& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::int64_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double rouge_l_pct(const Tokens& cand, const Tokens& ref) {
  if (cand.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(cand, ref));
  const double p = lcs / static_cast<double>(cand.size());
  const double r = lcs / static_cast<double>(ref.size());
  if (p + r <= 0.0) return 0.0;
  return 100.0 * 2.0 * p * r / (p + r);
}

}  // namespace

std::int64_t edit_distance(const Tokens& a, const Tokens& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::int64_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<std::int64_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<std::int64_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::int64_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

SimilarityScores text_similarity(const Tokens& candidate, const Tokens& reference) {
  if (reference.empty()) throw DataError("text_similarity: empty reference");
  SimilarityScores out;
  NgramStats st;
  accumulate(st, candidate, reference);
  out.bleu = bleu_from(st);
  out.rouge_l = rouge_l_pct(candidate, reference);
  out.ter = 100.0 * static_cast<double>(edit_distance(candidate, reference)) /
            static_cast<double>(reference.size());
  return out;
}

SimilarityScores corpus_text_similarity(
    const std::vector<std::pair<Tokens, Tokens>>& pairs) {
  if (pairs.empty()) throw DataError("corpus_text_similarity: no pairs");
  NgramStats st;
  double rouge_sum = 0.0;
  std::int64_t edits = 0, ref_len = 0;
  for (const auto& [cand, ref] : pairs) {
    if (ref.empty()) throw DataError("corpus_text_similarity: empty reference");
    accumulate(st, cand, ref);
    rouge_sum += rouge_l_pct(cand, ref);
    edits += edit_distance(cand, ref);
    ref_len += static_cast<std::int64_t>(ref.size());
  }
  SimilarityScores out;
  out.bleu = bleu_from(st);
  out.rouge_l = rouge_sum / static_cast<double>(pairs.size());
  out.ter = 100.0 * static_cast<double>(edits) / static_cast<double>(ref_len);
  return out;
}

double vqa_accuracy(const std::string& predicted, const std::string& gold) {
  if (gold.empty()) throw DataError("vqa_accuracy: empty gold answer");
  return predicted == gold ? 1.0 : 0.0;
}

double vqa_accuracy(const std::string& predicted, const std::map<std::string, int>& answer_counts) {
  if (answer_counts.empty()) throw DataError("vqa_accuracy: empty annotator counts");
  auto it = answer_counts.find(predicted);
  const int c = it == answer_counts.end() ? 0 : it->second;
  return std::min(static_cast<double>(c) / 3.0, 1.0);
}

AlignmentScore repr_alignment_score(const std::vector<std::vector<std::vector<double>>>& groups) {
  AlignmentScore out;
  double total = 0.0;
  for (const auto& group : groups) {
    if (group.size() < 2) {
      out.skipped_groups += 1;
      continue;
    }
    double pair_sum = 0.0;
    int pair_count = 0;
    for (std::size_t a = 0; a < group.size(); ++a) {
      for (std::size_t b = a + 1; b < group.size(); ++b) {
        if (group[a].size() != group[b].size())
          throw DataError("repr_alignment_score: vector length mismatch inside a group");
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < group[a].size(); ++i) {
          dot += group[a][i] * group[b][i];
          na += group[a][i] * group[a][i];
          nb += group[b][i] * group[b][i];
        }
        const double denom = std::sqrt(na) * std::sqrt(nb);
        pair_sum += denom < 1e-300 ? 0.0 : dot / denom;
        pair_count += 1;
      }
    }
    total += pair_sum / static_cast<double>(pair_count);
    out.used_groups += 1;
  }
  if (out.used_groups > 0) out.score = total / static_cast<double>(out.used_groups);
  return out;
}

}  // namespace mcm::metrics
