// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mcm::metrics {

// Tokens with per-token language labels; tokens made only of digits or
// punctuation count as language-independent and are excluded from the
// mixing-index denominators.
struct LabeledSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
};

bool is_language_independent(const std::string& token);

struct ComplexityScores {
  double cmi = 0.0;  // percent
  double spf = 0.0;  // percent
};

// CMI = 100 * (1 - max_language_share) over language-dependent tokens;
// SPF = 100 * switch points / (n - 1) where switches are counted along the
// subsequence of language-labeled tokens. Single-token sentences score 0.
ComplexityScores codemix_complexity(const LabeledSentence& s);

struct SimilarityScores {
  double bleu = 0.0;     // percent, 4-gram with epsilon smoothing
  double rouge_l = 0.0;  // percent, LCS F1
  double ter = 0.0;      // percent, word edit distance over reference length
};

SimilarityScores text_similarity(const std::vector<std::string>& candidate,
                                 const std::vector<std::string>& reference);

// Corpus-level aggregation: BLEU pools n-gram counts; ROUGE-L is the mean F1;
// TER pools edits over pooled reference length.
SimilarityScores corpus_text_similarity(
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs);

std::int64_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Exact match for single-gold data.
double vqa_accuracy(const std::string& predicted, const std::string& gold);
// Multi-annotator form: min(count(predicted)/3, 1).
double vqa_accuracy(const std::string& predicted, const std::map<std::string, int>& answer_counts);

struct AlignmentScore {
  double score = 0.0;   // mean over groups of mean pairwise cosine
  int used_groups = 0;
  int skipped_groups = 0;  // groups with fewer than two members
};

// Groups hold the final CLS vector of the same question in each language.
AlignmentScore repr_alignment_score(const std::vector<std::vector<std::vector<double>>>& groups);

}  // namespace mcm::metrics
