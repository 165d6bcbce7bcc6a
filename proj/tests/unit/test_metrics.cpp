#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "idas/corpus.hpp"
#include "idas/metrics.hpp"
#include "oracles.hpp"

using namespace idas;

namespace {

TokenSeq seq(std::initializer_list<const char*> toks) { return {toks.begin(), toks.end()}; }

TokenSeq random_seq(std::mt19937_64& rng, std::size_t max_len, std::size_t vocab) {
  TokenSeq s;
  for (std::size_t i = 0, n = rng() % (max_len + 1); i < n; ++i) s.push_back("t" + std::to_string(rng() % vocab));
  return s;
}

}  // namespace

TEST(Tokenize, Examples) {
  EXPECT_TRUE(metric_tokenize("").empty());
  EXPECT_EQ(metric_tokenize("CR400AF故障"), seq({"cr400af", "故", "障"}));
  const std::vector<std::string> samples{"牵引丢失 3454 HMI", "Brake, release!", "  ", "ÄÖÜ straße 速度"};
  for (const auto& s : samples) EXPECT_EQ(metric_tokenize(s).size(), count_tokens(s)) << s;
}

TEST(Rouge, HandCountedExample) {
  const auto ref = seq({"a", "b", "c", "d"});
  const auto cand = seq({"a", "b", "x"});
  EXPECT_DOUBLE_EQ(rouge_n(cand, ref, 1), 0.5);
  EXPECT_DOUBLE_EQ(rouge_n(cand, ref, 2), 1.0 / 3.0);
  EXPECT_EQ(lcs_length(cand, ref), 2u);
  EXPECT_DOUBLE_EQ(rouge_l(cand, ref), 0.5);
}

TEST(Rouge, Boundaries) {
  const auto x = seq({"a", "b", "c"});
  EXPECT_EQ(rouge_n(x, x, 1), 1.0);
  EXPECT_EQ(rouge_n(x, x, 2), 1.0);
  EXPECT_EQ(rouge_l(x, x), 1.0);
  EXPECT_EQ(lcs_length(x, x), 3u);
  EXPECT_EQ(rouge_n(seq({"p", "q"}), x, 1), 0.0);
  EXPECT_EQ(lcs_length(seq({"p", "q"}), x), 0u);
  EXPECT_EQ(rouge_n({}, x, 1), 0.0);
  EXPECT_EQ(rouge_n(x, {}, 1), 0.0);
  EXPECT_EQ(rouge_n(seq({"a"}), seq({"a"}), 2), 0.0);  // no reference bigrams
  EXPECT_EQ(rouge_l(x, {}), 0.0);
}

TEST(Rouge, ClipsRepeatedNgrams) {
  EXPECT_DOUBLE_EQ(rouge_n(seq({"a", "a", "a"}), seq({"a", "b"}), 1), 0.5);
}

TEST(Bleu, ClippedUnigramPrecision) {
  const auto cand = seq({"the", "the", "the", "the", "the", "the", "the"});
  const auto ref = seq({"the", "cat", "is", "on", "the", "mat"});
  // p1 = 2/7; p2..p4 have no matches: 1/7, 1/6, 1/5. No brevity penalty.
  const double expect = std::exp((std::log(2.0 / 7) + std::log(1.0 / 7) + std::log(1.0 / 6) + std::log(1.0 / 5)) / 4);
  EXPECT_NEAR(bleu(cand, ref), expect, 1e-12);
  EXPECT_NEAR(bleu(cand, ref), oracle::bleu(cand, ref), 1e-12);
}

TEST(Bleu, Boundaries) {
  const auto x = seq({"a", "b", "c", "d", "e"});
  EXPECT_EQ(bleu(x, x), 1.0);
  EXPECT_EQ(bleu({}, x), 0.0);
  EXPECT_EQ(bleu(seq({"p", "q", "r", "s"}), x), 0.0);
  EXPECT_EQ(bleu(seq({"a"}), seq({"a"})), 1.0);
  // Short candidate: BP = exp(1 - 5/2).
  EXPECT_NEAR(bleu(seq({"a", "b"}), x), std::exp(1.0 - 2.5), 1e-12);
}

TEST(Metrics, MatchOracleOnRandomPairs) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    const auto cand = random_seq(rng, 40, 8);
    const auto ref = random_seq(rng, 40, 8);
    EXPECT_NEAR(rouge_n(cand, ref, 1), oracle::rouge_n(cand, ref, 1), 1e-12);
    EXPECT_NEAR(rouge_n(cand, ref, 2), oracle::rouge_n(cand, ref, 2), 1e-12);
    EXPECT_EQ(lcs_length(cand, ref), oracle::lcs(cand, ref));
    EXPECT_NEAR(rouge_l(cand, ref), oracle::rouge_l(cand, ref), 1e-12);
    EXPECT_NEAR(bleu(cand, ref), oracle::bleu(cand, ref), 1e-12);
  }
}

TEST(Metrics, RangeAndLcsSymmetry) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_seq(rng, 30, 5);
    const auto b = random_seq(rng, 30, 5);
    EXPECT_EQ(lcs_length(a, b), lcs_length(b, a));
    const auto s = score_pair("", "");
    EXPECT_EQ(s, ScoreSet{});
    for (double v : {rouge_n(a, b, 1), rouge_n(a, b, 2), rouge_l(a, b), bleu(a, b)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(ScorePair, IdentityAndEmpty) {
  EXPECT_EQ(score_pair("列车牵引丢失时复位", "列车牵引丢失时复位"), (ScoreSet{1, 1, 1, 1}));
  EXPECT_EQ(score_pair("", "列车牵引丢失时复位"), ScoreSet{});
  EXPECT_EQ(score_pair("brake", "列车牵引"), ScoreSet{});
}

TEST(ScorePair, MatchesOracleOnText) {
  const std::string cand = "司机应首先确认主断路器状态，然后复位牵引变流器。";
  const std::string ref = "发生牵引丢失时，司机应确认主断路器处于闭合状态，并复位故障单元。";
  const auto c = metric_tokenize(cand), r = metric_tokenize(ref);
  const auto s = score_pair(cand, ref);
  EXPECT_NEAR(s.r1, oracle::rouge_n(c, r, 1), 1e-12);
  EXPECT_NEAR(s.r2, oracle::rouge_n(c, r, 2), 1e-12);
  EXPECT_NEAR(s.rl, oracle::rouge_l(c, r), 1e-12);
  EXPECT_NEAR(s.bleu, oracle::bleu(c, r), 1e-12);
}
