// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace mcm::codemix {

// One English/foreign sentence pair. Tags cover the English side
// (NE-PER/NE-LOC/NE-ORG, NP, ADJ, O). gold_alignment, when present, maps each
// foreign token to its English token (-1 for none) and serves as the oracle.
struct ParallelPair {
  std::vector<std::string> en_tokens;
  std::vector<std::string> en_tags;
  std::vector<std::string> xx_tokens;
  std::string lang;
  std::vector<int> gold_alignment;
};

// Lexical translation table with a diagonal position prior. The source side
// includes a NULL word with probability mass p0 at every target position.
struct AlignmentModel {
  double lambda = 4.0;
  double p0 = 0.08;
  std::map<std::string, std::map<std::string, double>> ttable;  // t[en][xx]
  std::set<std::string> src_vocab;  // lowercased English words, without NULL
  std::set<std::string> tgt_vocab;  // lowercased foreign words
  static const std::string kNull;
};

struct AlignerStats {
  std::vector<double> log_likelihood;  // one entry per EM iteration
};

// EM over p(align j -> i) proportional to t(xx_j|en_i) * delta(i, j), where
// delta is p0 for NULL and a per-position normalized exp(-lambda * |i/n -
// j/m|) otherwise. Tokens are compared lowercased.
AlignmentModel train_aligner(const std::vector<ParallelPair>& pairs, int iterations = 5,
                             double lambda = 4.0, double p0 = 0.08,
                             AlignerStats* stats = nullptr);

// Per foreign token: aligned English index or -1 for NULL. Unknown foreign
// tokens go to NULL and bump oov_count.
struct Alignment {
  std::vector<int> src_index;
  int oov_count = 0;
};

Alignment decode_alignment(const AlignmentModel& model, const ParallelPair& pair);

struct SpanCandidate {
  int en_begin, en_end;  // [begin, end) over English tokens
  int xx_begin, xx_end;  // [begin, end) over foreign tokens
  std::string tag;
};

// Consistent aligned spans for every maximal tagged English segment, in
// substitution priority order: NE kinds first, then NP, then ADJ,
// left-to-right within a tier. Inside the foreign window only NULL-aligned
// tokens may escape the segment; anything aligned outside disqualifies it.
std::vector<SpanCandidate> extract_substitutable_spans(const ParallelPair& pair,
                                                       const Alignment& alignment);

struct CodeMixResult {
  std::vector<std::string> tokens;
  std::vector<std::string> origin;  // matrix | embedded, one per token
  std::vector<SpanCandidate> applied;
};

// Replaces each candidate's foreign span with the English segment, skipping
// candidates that overlap an earlier substitution. Matrix tokens keep their
// order; embedded tokens carry the English surface forms.
CodeMixResult generate_codemixed(const ParallelPair& pair,
                                 const std::vector<SpanCandidate>& candidates);

}  // namespace mcm::codemix
