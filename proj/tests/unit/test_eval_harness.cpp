#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <map>

#include "idas/error.hpp"
#include "idas/eval_harness.hpp"
#include "idas/rag_engine.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace idas;

namespace {

QAPair ex(std::string id, Category c, std::string q, std::string a) {
  return {std::move(id), std::move(q), std::move(a), c, "", {PairFlag::ExamConverted}};
}

std::vector<QAPair> six_pairs() {
  return {ex("r2", Category::RailwayRegulation, "q4", "stop at the next station"),
          ex("l1", Category::LegalProvision, "q1", "a b c d"),
          ex("e1", Category::RailwayExpertise, "q5", "reset the converter"),
          ex("l2", Category::LegalProvision, "q2", "x y z"),
          ex("r1", Category::RailwayRegulation, "q3", "open the breaker"),
          ex("e2", Category::RailwayExpertise, "q6", "isolate the bogie now")};
}

// Canned answers per question; q6 makes the system throw.
const std::map<std::string, std::string> kAnswers{{"q1", "a b x"},
                                                  {"q2", "x y z"},
                                                  {"q3", "open breaker"},
                                                  {"q4", "stop now"},
                                                  {"q5", "reset the converter"}};

std::string canned(const std::string& q) {
  if (q == "q6") throw std::runtime_error("backend down");
  return kAnswers.at(q);
}

MetricReport report_with(std::string name, double r1, double r2, double rl, double b) {
  MetricReport r;
  r.system_name = std::move(name);
  r.per_category[Category::RailwayRegulation] = {r1, r2, rl, b};
  r.example_count[Category::RailwayRegulation] = 1;
  return r;
}

std::vector<QAPair> fixture_eval_set() {
  std::ifstream in(testing_support::fixtures_dir() / "eval_set.jsonl");
  return read_pairs_jsonl(in);
}

}  // namespace

TEST(Evaluate, CheatingOracleScoresOne) {
  const auto pairs = six_pairs();
  std::map<std::string, std::string> ref;
  for (const auto& p : pairs) ref[p.question] = p.answer;
  const auto r = evaluate("oracle", [&](const std::string& q) { return ref.at(q); }, pairs);
  for (const auto& [c, s] : r.per_category) {
    EXPECT_EQ(s.r1, 1.0);
    EXPECT_EQ(s.rl, 1.0);
    EXPECT_EQ(s.bleu, 1.0);
    EXPECT_EQ(s.r2, 1.0);
  }
  EXPECT_EQ(r.failed_count, 0u);
}

TEST(Evaluate, EmptyAnswersScoreZero) {
  const auto r = evaluate("blank", [](const std::string&) { return std::string(); }, six_pairs());
  for (const auto& [c, s] : r.per_category) EXPECT_EQ(s, ScoreSet{});
}

TEST(Evaluate, MeansMatchHandScoring) {
  const auto r = evaluate("canned", canned, six_pairs());
  EXPECT_EQ(r.failed_count, 1u);
  EXPECT_EQ(r.example_count.at(Category::LegalProvision), 2u);
  EXPECT_EQ(r.example_count.at(Category::RailwayExpertise), 2u);
  // Legal: (a b x | a b c d) R1 .5 R2 1/3 RL .5 ; (x y z | x y z) all 1.
  const auto& legal = r.per_category.at(Category::LegalProvision);
  EXPECT_NEAR(legal.r1, (0.5 + 1.0) / 2, 1e-9);
  EXPECT_NEAR(legal.r2, (1.0 / 3 + 1.0) / 2, 1e-9);
  EXPECT_NEAR(legal.rl, (0.5 + 1.0) / 2, 1e-9);
  EXPECT_NEAR(legal.bleu, (oracle::bleu({"a", "b", "x"}, {"a", "b", "c", "d"}) + 1.0) / 2, 1e-9);
  // Regulation: (open breaker | open the breaker) R1 2/3 R2 0 RL 2/3;
  // (stop now | stop at the next station) R1 1/5 R2 0 RL 1/5.
  const auto& reg = r.per_category.at(Category::RailwayRegulation);
  EXPECT_NEAR(reg.r1, (2.0 / 3 + 0.2) / 2, 1e-9);
  EXPECT_NEAR(reg.r2, 0.0, 1e-9);
  EXPECT_NEAR(reg.rl, (2.0 / 3 + 0.2) / 2, 1e-9);
  // Expertise: one perfect answer, one failure scored zero.
  const auto& exp = r.per_category.at(Category::RailwayExpertise);
  EXPECT_NEAR(exp.r1, 0.5, 1e-9);
  EXPECT_NEAR(exp.bleu, 0.5, 1e-9);
  ASSERT_EQ(r.examples.size(), 6u);
  EXPECT_EQ(r.examples[0].id, "l1");
  EXPECT_TRUE(r.examples.back().failed);
  EXPECT_EQ(r.examples.back().id, "e2");
}

TEST(Evaluate, OrderInvariantAndParallelSafe) {
  auto pairs = six_pairs();
  const auto a = evaluate("s", canned, pairs);
  std::reverse(pairs.begin(), pairs.end());
  const auto b = evaluate("s", canned, pairs, {4, true});
  EXPECT_EQ(nlohmann::json(a).dump(), nlohmann::json(b).dump());
}

TEST(Evaluate, EmptySetRejected) {
  EXPECT_THROW(evaluate("s", canned, {}), Error);
}

TEST(Compare, RegulationDeltaInPoints) {
  const std::vector<MetricReport> reports{report_with("base", 0.39, 0.20, 0.30, 0.05),
                                          report_with("rag", 0.50, 0.29, 0.39, 0.07)};
  const auto t = compare(reports, "base", "rag");
  const auto& d = t.delta.at(Category::RailwayRegulation);
  EXPECT_NEAR(d.r1, 0.11, 1e-12);
  const auto text = render_comparison_text(t);
  EXPECT_NE(text.find("Δ% (base)"), std::string::npos);
  EXPECT_NE(text.find("11.00"), std::string::npos);
  EXPECT_NE(text.find("9.00"), std::string::npos);
  const auto csv = render_comparison_csv(t);
  EXPECT_NE(csv.find("delta_pp(rag - base),RailwayRegulation,11.00,9.00,9.00,2.00"), std::string::npos)
      << csv;
}

TEST(Compare, SelfAndAntisymmetry) {
  const std::vector<MetricReport> reports{report_with("a", 0.44, 0.19, 0.37, 0.06),
                                          report_with("b", 0.52, 0.25, 0.40, 0.08)};
  const auto self = compare(reports, "a", "a");
  EXPECT_EQ(self.delta.at(Category::RailwayRegulation), ScoreSet{});
  const auto ab = compare(reports, "a", "b").delta.at(Category::RailwayRegulation);
  const auto ba = compare(reports, "b", "a").delta.at(Category::RailwayRegulation);
  EXPECT_EQ(ab.r1, -ba.r1);
  EXPECT_EQ(ab.r2, -ba.r2);
  EXPECT_EQ(ab.rl, -ba.rl);
  EXPECT_EQ(ab.bleu, -ba.bleu);
  EXPECT_NEAR(ab.r1, 0.52 - 0.44, 1e-15);
  EXPECT_NEAR(ab.bleu, 0.08 - 0.06, 1e-15);
  try {
    compare(reports, "a", "zzz");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownSystemName);
  }
}

TEST(Report, JsonRoundTrip) {
  const auto r = evaluate("canned", canned, six_pairs());
  const auto back = nlohmann::json(r).get<MetricReport>();
  EXPECT_EQ(nlohmann::json(back).dump(), nlohmann::json(r).dump());
  EXPECT_EQ(render_report_csv(back), render_report_csv(r));
}

namespace {

std::shared_ptr<const TemplateStore> templates() {
  static const auto store =
      std::make_shared<const TemplateStore>(TemplateStore::load_dir(testing_support::templates_dir()));
  return store;
}

SweepSetup sweep_setup() {
  SweepSetup setup;
  setup.engine_factory = [](std::shared_ptr<const FlatIndex> index) -> AnswerFn {
    auto engine = std::make_shared<AdvisoryEngine>(
        std::move(index), EmbedderSpec{},
        testing_support::scripted(load_script(testing_support::fixtures_dir() / "script.json")), templates(),
        EngineConfig{});
    return [engine](const std::string& q) { return engine->ask(q).final_answer; };
  };
  return setup;
}

std::vector<Document> fixture_docs() {
  const auto root = testing_support::fixtures_dir();
  return load_corpus(root / "corpus", load_manifest(root / "manifest.json")).documents;
}

}  // namespace

TEST(Sweep, SingleSizeEqualsDirectEvaluate) {
  const auto docs = fixture_docs();
  const auto eval = fixture_eval_set();
  const std::vector<std::size_t> sizes{500};
  const auto setup = sweep_setup();
  const auto sweep = chunk_sweep(docs, sizes, eval, setup);
  ASSERT_EQ(sweep.reports.size(), 1u);

  ChunkPolicy p;
  p.chunk_size = 500;
  const auto direct = evaluate("x", setup.engine_factory(build_index(chunk_corpus(docs, p), EmbedderSpec{})), eval);
  EXPECT_EQ(sweep.reports.at(500).per_category, direct.per_category);
  EXPECT_EQ(sweep.reports.at(500).example_count, direct.example_count);
}

TEST(Sweep, RejectsBadSizesAndRecordsFailures) {
  const auto docs = fixture_docs();
  const auto eval = fixture_eval_set();
  const std::vector<std::size_t> none, dup{200, 200}, with_zero{0, 300};
  EXPECT_THROW(chunk_sweep(docs, none, eval, sweep_setup()), Error);
  EXPECT_THROW(chunk_sweep(docs, dup, eval, sweep_setup()), Error);
  const auto r = chunk_sweep(docs, with_zero, eval, sweep_setup());
  EXPECT_EQ(r.failures.count(0), 1u);
  EXPECT_EQ(r.reports.count(300), 1u);
  EXPECT_NE(render_sweep_text(r).find("size 0 failed"), std::string::npos);
}

TEST(Sweep, CsvShape) {
  const std::vector<std::size_t> sizes{1000, 200};
  const auto r = chunk_sweep(fixture_docs(), sizes, fixture_eval_set(), sweep_setup());
  const auto csv = render_sweep_csv(r);
  EXPECT_TRUE(csv.starts_with("chunk_size,category,count,r1,r2,rl,bleu\n200,"));
  EXPECT_NE(csv.find("\n1000,"), std::string::npos);
  const auto examples = render_sweep_examples_csv(r);
  EXPECT_EQ(std::count(examples.begin(), examples.end(), '\n'), 1 + 2 * 36);
}
