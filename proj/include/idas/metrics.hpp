#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace idas {

/// Case-folded tokens, none empty.
using TokenSeq = std::vector<std::string>;

struct ScoreSet {
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
  double bleu = 0.0;

  bool operator==(const ScoreSet&) const = default;
};

void to_json(nlohmann::json& j, const ScoreSet& s);
void from_json(const nlohmann::json& j, ScoreSet& s);

/// Same token rule as count_tokens, case-folded.
TokenSeq metric_tokenize(std::string_view text);

/// ROUGE-N recall: clipped n-gram overlap over the reference n-gram count;
/// 0 when the reference has no n-grams.
double rouge_n(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

/// LCS length over reference length; 0 for an empty reference.
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

/// Sentence-level BLEU. Orders 1..min(max_n, |candidate|) with clipped
/// precision; orders >= 2 with no match use (0 + 1) / (total + 1). The
/// geometric mean is scaled by BP = exp(1 - |ref| / |cand|) when the
/// candidate is shorter than the reference. Empty candidate scores 0.
double bleu(const TokenSeq& candidate, const TokenSeq& reference, std::size_t max_n = 4);

ScoreSet score_pair(std::string_view candidate_text, std::string_view reference_text);

}  // namespace idas
