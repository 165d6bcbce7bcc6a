#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "idas/dataset_forge.hpp"
#include "idas/error.hpp"
#include "test_support.hpp"

using namespace idas;
using testing_support::fallback_backend;
using testing_support::fixed_backend;

namespace {

std::shared_ptr<const TemplateStore> templates() {
  static const auto store =
      std::make_shared<const TemplateStore>(TemplateStore::load_dir(testing_support::templates_dir()));
  return store;
}

BackendSpec fixture_backend() {
  return testing_support::scripted(load_script(testing_support::fixtures_dir() / "script.json"));
}

std::vector<Document> fixture_docs() {
  const auto root = testing_support::fixtures_dir();
  return load_corpus(root / "corpus", load_manifest(root / "manifest.json")).documents;
}

QAPair qa(std::string id, std::string q, std::string a, Category c = Category::RailwayExpertise) {
  return {std::move(id), std::move(q), std::move(a), c, "chunk-" + id, {PairFlag::Generated}};
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

Chunk chunk_with(std::string text) {
  Chunk c;
  c.id = "doc-x-00000";
  c.document_id = "doc-x";
  c.text = std::move(text);
  c.category = Category::RailwayExpertise;
  return c;
}

}  // namespace

TEST(QuestionList, ParsesNumberedLines) {
  EXPECT_EQ(parse_question_list("1. Q-A?\n2. Q-B?"), (std::vector<std::string>{"Q-A?", "Q-B?"}));
  EXPECT_EQ(parse_question_list("- one?\n\n* two?\n3) three?\n4、四？\n问题5：五？\nplain?"),
            (std::vector<std::string>{"one?", "two?", "three?", "四？", "五？", "plain?"}));
  EXPECT_TRUE(parse_question_list("").empty());
  EXPECT_TRUE(parse_question_list(" \n \n").empty());
}

TEST(GenerateQuestions, FromScriptedBackend) {
  const DatasetForge forge(fixed_backend("1. Q-A?\n2. Q-B?\n3. Q-C?"), templates(), ForgeConfig{});
  EXPECT_EQ(forge.generate_questions(chunk_with("text"), 2), (std::vector<std::string>{"Q-A?", "Q-B?"}));
}

TEST(GenerateQuestions, EmptyResponseIsUnparseable) {
  const DatasetForge forge(fixed_backend(""), templates(), ForgeConfig{});
  EXPECT_EQ(code_of([&] { forge.generate_questions(chunk_with("text"), 3); }), ErrorCode::UnparseableResponse);
}

TEST(GenerateQuestions, FixtureScriptOnFixtureChunk) {
  ForgeConfig cfg;
  const auto docs = fixture_docs();
  const auto chunks = chunk_document(docs.front(), cfg.policy);
  ASSERT_GE(chunks.size(), 2u);
  ASSERT_TRUE(chunks[1].text.starts_with("第一节 CR400AF牵引丢失概述"));
  const DatasetForge forge(fixture_backend(), templates(), cfg);
  EXPECT_EQ(forge.generate_questions(chunks[1], 3),
            (std::vector<std::string>{"CR400AF牵引丢失概述如何处理？",
                                      "What does the manual say about CR400AF牵引丢失概述?",
                                      "CR400AF牵引丢失概述如何处理呢？"}));
}

TEST(GenerateAnswer, BackendVariants) {
  const auto chunk = chunk_with("牵引丢失时先确认主断路器状态，再复位故障单元。");
  EXPECT_NE(DatasetForge(fallback_backend(FallbackMode::EchoContext), templates(), ForgeConfig{})
                .generate_answer(chunk, "怎么办？")
                .find(chunk.text),
            std::string::npos);
  EXPECT_EQ(DatasetForge(fixed_backend("ANSWER"), templates(), ForgeConfig{}).generate_answer(chunk, "q?"),
            "ANSWER");
  EXPECT_EQ(DatasetForge(fixed_backend(""), templates(), ForgeConfig{}).generate_answer(chunk, "q?"), "");
}

TEST(GenerateAnswer, StubServer) {
  testing_support::StubServer stub([](httplib::Server& s) {
    s.Post("/chat", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[{"message":{"content":"stub text"}}]})", "application/json");
    });
  });
  BackendSpec b;
  b.kind = BackendKind::Remote;
  b.endpoint_url = stub.url("/chat");
  EXPECT_EQ(DatasetForge(b, templates(), ForgeConfig{}).generate_answer(chunk_with("x"), "q?"), "stub text");
}

TEST(Duplicate, Examples) {
  EXPECT_TRUE(is_duplicate("信号故障如何处理？", "信号故障如何处理？"));
  EXPECT_FALSE(is_duplicate("信号故障如何处理？", "brake release fault?"));
  EXPECT_TRUE(is_duplicate("信号故障如何处理？", "信号故障如何处理呢？"));
  EXPECT_TRUE(is_duplicate("How to handle TRACTION loss?", "how to handle traction loss"));
  EXPECT_FALSE(is_duplicate("信号故障如何处理？", "制动故障如何处理？"));
}

TEST(Duplicate, JaccardByHand) {
  // {ab, bc} vs {ab, bd}: 1 shared of 3.
  EXPECT_DOUBLE_EQ(bigram_jaccard("abc", "abd"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(bigram_jaccard("abc", "abc"), 1.0);
  EXPECT_EQ(normalize_question("  信号 故障，如何处理呢？ "), "信号故障如何处理");
}

TEST(Filter, PlantedDefects) {
  const std::string good = "司机应确认主断路器状态，然后复位故障单元。";
  std::vector<QAPair> batch{
      qa("p0", "CR400AF牵引丢失时应如何处理？", good),
      qa("p1", "速度传感器故障时司机应该做什么？", good),
      qa("p2", "受电弓无法升起时怎么办？", ""),                                // planted: missing
      qa("p3", "制动不缓解时应采取哪些措施？", good),
      qa("p4", "车门无法关闭时应如何处理？", "抱歉，我无法回答这个问题，请咨询专业人员。"),  // planted: refusal
      qa("p5", "轴温报警后司机应如何操作？", good),
      qa("p6", "CR400AF牵引丢失时应如何处理呢？", good),                      // planted: duplicate of p0
      qa("p7", "What should the driver do when the fire alarm sounds?", "Stop outside tunnels and check the alarm."),
      qa("p8", "空调故障时如何疏导旅客？", good),
      qa("p9", "主断路器跳闸后能否立即重新闭合？", good),
  };
  const auto result = filter_pairs(batch);
  ASSERT_EQ(result.kept.size(), 7u);
  ASSERT_EQ(result.rejected.size(), 3u);
  EXPECT_EQ(result.rejected[0].pair.id, "p2");
  EXPECT_EQ(result.rejected[0].reason, RejectReason::MissingAnswer);
  EXPECT_EQ(result.rejected[1].pair.id, "p4");
  EXPECT_EQ(result.rejected[1].reason, RejectReason::InvalidAnswer);
  EXPECT_EQ(result.rejected[2].pair.id, "p6");
  EXPECT_EQ(result.rejected[2].reason, RejectReason::Duplicate);
  EXPECT_EQ(result.kept[0].id, "p0");
  EXPECT_EQ(result.kept.back().id, "p9");
}

TEST(Filter, InvalidQuestions) {
  const std::string good = "the driver resets the traction converter first";
  const std::vector<QAPair> batch{qa("a", "为什么？", good), qa("b", "Traction loss handling procedure", good),
                                  qa("c", "Somehow the brake failed", good),
                                  qa("d", "How is the brake reset?", good)};
  const auto result = filter_pairs(batch);
  ASSERT_EQ(result.kept.size(), 1u);
  EXPECT_EQ(result.kept[0].id, "d");
  for (const auto& r : result.rejected) EXPECT_EQ(r.reason, RejectReason::InvalidQuestion) << r.pair.id;
}

TEST(Filter, ByteIdenticalQuestionsKeepFirst) {
  const std::string good = "司机应确认主断路器状态，然后复位故障单元。";
  const std::vector<QAPair> batch{qa("a", "牵引丢失如何处理？", good), qa("b", "牵引丢失如何处理？", good)};
  const auto result = filter_pairs(batch);
  ASSERT_EQ(result.kept.size(), 1u);
  EXPECT_EQ(result.rejected[0].pair.id, "b");
  EXPECT_EQ(result.rejected[0].reason, RejectReason::Duplicate);
}

TEST(Filter, ShortAnswerIsInvalid) {
  const std::vector<QAPair> batch{qa("a", "牵引丢失如何处理？", "复位")};
  EXPECT_EQ(filter_pairs(batch).rejected[0].reason, RejectReason::InvalidAnswer);
}

TEST(ForgeTable, StatisticsLayoutGolden) {
  ForgeReport report;
  report.per_category[Category::LegalProvision] = {138809, 4553};
  report.per_category[Category::RailwayRegulation] = {371914, 3052};
  report.per_category[Category::RailwayExpertise] = {265634, 2517};
  EXPECT_EQ(render_forge_table(report),
            "Category            Total Tokens  Number of Q&A\n"
            "------------------  ------------  -------------\n"
            "Legal Provision          138,809          4,553\n"
            "Railway Regulation       371,914          3,052\n"
            "Railway Expertise        265,634          2,517\n");
  EXPECT_EQ(render_forge_csv(report),
            "category,total_tokens,qa_count\n"
            "Legal Provision,138809,4553\n"
            "Railway Regulation,371914,3052\n"
            "Railway Expertise,265634,2517\n");
  EXPECT_EQ(report.total_pairs(), 10122u);
}

TEST(BuildRtd, EmptyCorpus) {
  const DatasetForge forge(fixture_backend(), templates(), ForgeConfig{});
  const auto result = forge.build_rtd({});
  EXPECT_TRUE(result.pairs.empty());
  EXPECT_EQ(result.report.total_pairs(), 0u);
}

TEST(BuildRtd, NothingSurvivesThrows) {
  const DatasetForge forge(fixed_backend("1. 好吗"), templates(), ForgeConfig{});
  const auto docs = fixture_docs();
  EXPECT_EQ(code_of([&] { forge.build_rtd(std::span(docs).first(2)); }), ErrorCode::NoPairsSurvived);
}

TEST(BuildRtd, FixtureCorpusIsCleanAndDeterministic) {
  const auto docs = fixture_docs();
  ForgeConfig cfg;
  cfg.few_shot = load_few_shot(testing_support::fixtures_dir() / "few_shot.json");
  const auto a = DatasetForge(fixture_backend(), templates(), cfg).build_rtd(docs);
  cfg.parallelism = 4;
  const auto b = DatasetForge(fixture_backend(), templates(), cfg).build_rtd(docs);

  std::ostringstream sa, sb;
  write_pairs_jsonl(sa, a.pairs);
  write_pairs_jsonl(sb, b.pairs);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(render_forge_report(a.report), render_forge_report(b.report));

  ASSERT_FALSE(a.pairs.empty());
  std::set<std::string> chunk_ids;
  for (const auto& c : chunk_corpus(docs, cfg.policy)) chunk_ids.insert(c.id);
  std::size_t tokens = 0;
  for (const auto& d : docs) tokens += d.token_count;
  std::size_t report_tokens = 0;
  for (const auto& [c, s] : a.report.per_category) report_tokens += s.total_tokens;
  EXPECT_EQ(report_tokens, tokens);
  EXPECT_EQ(a.report.total_pairs(), a.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    EXPECT_TRUE(chunk_ids.contains(a.pairs[i].source_chunk_id));
    EXPECT_FALSE(a.pairs[i].answer.empty());
    EXPECT_TRUE(a.pairs[i].has_flag(PairFlag::Generated));
    for (std::size_t j = 0; j < i; ++j) {
      EXPECT_FALSE(is_duplicate(a.pairs[i].question, a.pairs[j].question)) << a.pairs[i].id;
    }
  }
  EXPECT_GT(a.report.rejected.at(RejectReason::Duplicate), 0u);
}

TEST(ExamConversion, TrueFalseUsesBackendText) {
  ExamItem item{"t1", "S", ExamItemType::TrueFalse, {}, "true", Category::RailwayRegulation};
  const auto conv = DatasetForge(fixed_backend("S 是正确的"), templates(), ForgeConfig{}).convert_exam_item(item);
  ASSERT_TRUE(conv.pair);
  EXPECT_EQ(conv.pair->answer, "S 是正确的");
  EXPECT_EQ(conv.pair->question, "判断正误并说明理由：S");
  EXPECT_TRUE(conv.pair->has_flag(PairFlag::ExamConverted));
}

TEST(ExamConversion, AnswerMustContainKeyedOption) {
  ExamItem item{"s1", "哪项正确？", ExamItemType::SingleChoice, {"甲选项", "乙选项", "丙选项"}, "B",
                Category::RailwayExpertise};
  const auto bad = DatasetForge(fixed_backend("答案是甲选项"), templates(), ForgeConfig{}).convert_exam_item(item);
  EXPECT_FALSE(bad.pair);
  EXPECT_EQ(bad.reason, RejectReason::InvalidAnswer);
  const auto good = DatasetForge(fixed_backend("正确答案是乙选项"), templates(), ForgeConfig{}).convert_exam_item(item);
  ASSERT_TRUE(good.pair);
  EXPECT_EQ(good.pair->question, "哪项正确？");
  const auto empty = DatasetForge(fixed_backend(""), templates(), ForgeConfig{}).convert_exam_item(item);
  EXPECT_EQ(empty.reason, RejectReason::MissingAnswer);
}

TEST(ExamConversion, InvalidKeys) {
  const DatasetForge forge(fixed_backend("x"), templates(), ForgeConfig{});
  EXPECT_THROW(forge.convert_exam_item({"a", "s", ExamItemType::SingleChoice, {"x", "y"}, "C", Category::Other}), Error);
  EXPECT_THROW(forge.convert_exam_item({"a", "s", ExamItemType::SingleChoice, {"x", "y"}, "AB", Category::Other}), Error);
  EXPECT_THROW(forge.convert_exam_item({"a", "s", ExamItemType::TrueFalse, {}, "maybe", Category::Other}), Error);
}

TEST(ExamConversion, FixtureBank) {
  std::ifstream in(testing_support::fixtures_dir() / "exam_bank.jsonl");
  const auto items = read_exam_jsonl(in);
  ASSERT_EQ(items.size(), 9u);
  const DatasetForge forge(fixture_backend(), templates(), ForgeConfig{});
  std::size_t converted = 0;
  for (const auto& item : items) {
    const auto conv = forge.convert_exam_item(item);
    ASSERT_TRUE(conv.pair) << item.id << ": " << conv.detail;
    ++converted;
    EXPECT_EQ(conv.pair->id, item.id);
    EXPECT_EQ(conv.pair->category, item.category);
    for (const auto idx : item.keyed_options()) {
      EXPECT_NE(conv.pair->answer.find(item.options[idx]), std::string::npos);
    }
  }
  EXPECT_EQ(converted, 9u);
}

namespace {

std::vector<QAPair> synthetic_pairs(std::size_t per_category) {
  std::vector<QAPair> out;
  for (const auto c : {Category::LegalProvision, Category::RailwayRegulation, Category::RailwayExpertise}) {
    for (std::size_t i = 0; i < per_category; ++i) {
      out.push_back(qa(std::string(to_string(c)) + "-" + std::to_string(i), "q?", "a", c));
    }
  }
  return out;
}

std::string dump(const std::vector<QAPair>& pairs) {
  std::ostringstream out;
  write_pairs_jsonl(out, pairs);
  return out.str();
}

}  // namespace

TEST(SampleEval, Basics) {
  const auto pairs = synthetic_pairs(50);
  EXPECT_TRUE(sample_eval_set(pairs, 0, 1).empty());
  const auto all = sample_eval_set(pairs, 50, 1);
  EXPECT_EQ(all.size(), 150u);
  EXPECT_EQ(code_of([&] { sample_eval_set(pairs, 51, 1); }), ErrorCode::InsufficientCategory);
}

TEST(SampleEval, SeededAndSorted) {
  auto pairs = synthetic_pairs(200);
  const auto a = sample_eval_set(pairs, 20, 42);
  std::reverse(pairs.begin(), pairs.end());
  const auto b = sample_eval_set(pairs, 20, 42);
  EXPECT_EQ(dump(a), dump(b));
  EXPECT_NE(dump(a), dump(sample_eval_set(pairs, 20, 43)));
  ASSERT_EQ(a.size(), 60u);
  for (std::size_t i = 1; i < a.size(); ++i) {
    EXPECT_TRUE(a[i - 1].category < a[i].category ||
                (a[i - 1].category == a[i].category && a[i - 1].id < a[i].id));
  }
}

TEST(Pairs, JsonLinesRoundTrip) {
  const auto pairs = synthetic_pairs(3);
  std::stringstream buf;
  write_pairs_jsonl(buf, pairs);
  EXPECT_EQ(read_pairs_jsonl(buf), pairs);
}
