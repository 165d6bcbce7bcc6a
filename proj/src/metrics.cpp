#include "idas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "idas/error.hpp"
#include "idas/text.hpp"

namespace idas {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const TokenSeq& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

// Sum over `bounded` n-gram types of min(count in bounded, count in other).
std::size_t clipped_overlap(const NgramCounts& bounded, const NgramCounts& other) {
  std::size_t total = 0;
  for (const auto& [gram, count] : bounded) {
    if (auto found = other.find(gram); found != other.end()) total += std::min(count, found->second);
  }
  return total;
}

}  // namespace

void to_json(nlohmann::json& j, const ScoreSet& s) {
  j = nlohmann::json{{"r1", s.r1}, {"r2", s.r2}, {"rl", s.rl}, {"bleu", s.bleu}};
}

void from_json(const nlohmann::json& j, ScoreSet& s) {
  j.at("r1").get_to(s.r1);
  j.at("r2").get_to(s.r2);
  j.at("rl").get_to(s.rl);
  j.at("bleu").get_to(s.bleu);
}

TokenSeq metric_tokenize(std::string_view text) { return text::folded_tokens(text); }

double rouge_n(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "ROUGE-N needs n >= 1");
  if (reference.size() < n) return 0.0;
  const auto ref = count_ngrams(reference, n);
  const auto cand = count_ngrams(candidate, n);
  const auto total = reference.size() - n + 1;
  return static_cast<double>(clipped_overlap(ref, cand)) / static_cast<double>(total);
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  if (a.empty() || b.empty()) return 0;
  // Two rolling rows over b.
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  if (reference.empty()) return 0.0;
  return static_cast<double>(lcs_length(candidate, reference)) /
         static_cast<double>(reference.size());
}

double bleu(const TokenSeq& candidate, const TokenSeq& reference, std::size_t max_n) {
  if (max_n < 1) throw Error(ErrorCode::InvalidArgument, "BLEU needs max_n >= 1");
  if (candidate.empty()) return 0.0;
  const std::size_t orders = std::min(max_n, candidate.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto cand = count_ngrams(candidate, n);
    const auto ref = count_ngrams(reference, n);
    auto matches = static_cast<double>(clipped_overlap(cand, ref));
    auto total = static_cast<double>(candidate.size() - n + 1);
    if (matches == 0.0) {
      if (n == 1) return 0.0;
      matches += 1.0;
      total += 1.0;
    }
    log_sum += std::log(matches / total);
  }
  const double geo_mean = std::exp(log_sum / static_cast<double>(orders));
  const double bp = candidate.size() < reference.size()
                        ? std::exp(1.0 - static_cast<double>(reference.size()) /
                                             static_cast<double>(candidate.size()))
                        : 1.0;
  return std::clamp(bp * geo_mean, 0.0, 1.0);
}

ScoreSet score_pair(std::string_view candidate_text, std::string_view reference_text) {
  const auto cand = metric_tokenize(candidate_text);
  const auto ref = metric_tokenize(reference_text);
  return {rouge_n(cand, ref, 1), rouge_n(cand, ref, 2), rouge_l(cand, ref), bleu(cand, ref)};
}

}  // namespace idas
