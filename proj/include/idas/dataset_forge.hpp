#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "idas/corpus.hpp"
#include "idas/llm_gateway.hpp"

namespace idas {

enum class PairFlag { Generated, ExamConverted };

struct QAPair {
  std::string id;
  std::string question;
  std::string answer;
  Category category = Category::Other;
  std::string source_chunk_id;  // empty for exam-converted pairs
  std::vector<PairFlag> flags;

  bool has_flag(PairFlag flag) const;
  bool operator==(const QAPair&) const = default;
};

void to_json(nlohmann::json& j, const QAPair& pair);
void from_json(const nlohmann::json& j, QAPair& pair);
void write_pairs_jsonl(std::ostream& out, std::span<const QAPair> pairs);
std::vector<QAPair> read_pairs_jsonl(std::istream& in);

enum class RejectReason { InvalidQuestion, MissingAnswer, InvalidAnswer, Duplicate };
std::string_view to_string(RejectReason reason) noexcept;

std::vector<std::string> default_refusal_phrases();
std::vector<std::string> default_interrogative_markers();

struct FilterConfig {
  std::size_t min_question_tokens = 4;
  std::size_t min_answer_tokens = 5;
  std::vector<std::string> refusal_phrases = default_refusal_phrases();
  /// Substrings (case-folded match) that mark a question as interrogative.
  std::vector<std::string> interrogative_markers = default_interrogative_markers();
  double duplicate_threshold = 0.9;
};

struct Rejection {
  QAPair pair;
  RejectReason reason;
};

struct FilterResult {
  std::vector<QAPair> kept;
  std::vector<Rejection> rejected;
};

/// Checks each pair in order: InvalidQuestion, MissingAnswer, InvalidAnswer,
/// then Duplicate against the pairs kept so far. The first failing check is
/// the recorded reason; kept pairs preserve input order.
FilterResult filter_pairs(std::span<const QAPair> pairs, const FilterConfig& config = {});

/// Case-folded, punctuation and whitespace removed, trailing sentence-final
/// particles (呢 吗 吧 啊 呀 么) dropped.
std::string normalize_question(std::string_view question);

/// Jaccard similarity of the code-point bigram sets of two normalized strings.
double bigram_jaccard(std::string_view normalized_a, std::string_view normalized_b);

/// Normalized forms equal, or bigram Jaccard >= threshold.
bool is_duplicate(std::string_view q1, std::string_view q2, double threshold = 0.9);

struct CategoryStats {
  std::size_t total_tokens = 0;
  std::size_t qa_count = 0;

  bool operator==(const CategoryStats&) const = default;
};

struct ForgeReport {
  std::map<Category, CategoryStats> per_category;
  std::map<RejectReason, std::size_t> rejected;
  std::size_t skipped_chunks = 0;
  std::vector<std::string> failures;  // "<chunk or item id>: <reason>"

  std::size_t total_pairs() const;
};

/// Aligned text table: Category | Total Tokens | Number of Q&A.
std::string render_forge_table(const ForgeReport& report);
std::string render_forge_csv(const ForgeReport& report);
/// Table followed by rejection and failure summaries.
std::string render_forge_report(const ForgeReport& report);

enum class ExamItemType { SingleChoice, MultipleChoice, TrueFalse };
std::string_view to_string(ExamItemType type) noexcept;

struct ExamItem {
  std::string id;
  std::string stem;
  ExamItemType type = ExamItemType::SingleChoice;
  std::vector<std::string> options;
  /// Option letters ("B", "ACD") for choice items; "true"/"false" otherwise.
  std::string key;
  Category category = Category::Other;

  /// Throws InvalidArgument when the key does not fit the item type.
  void validate() const;
  /// 0-based option indices named by the key (empty for TrueFalse).
  std::vector<std::size_t> keyed_options() const;
};

void from_json(const nlohmann::json& j, ExamItem& item);
std::vector<ExamItem> read_exam_jsonl(std::istream& in);

struct FewShotExample {
  std::string question;
  std::string answer;
};

std::vector<FewShotExample> load_few_shot(const std::filesystem::path& path);

struct ForgeConfig {
  ChunkPolicy policy{ChunkMode::Structural};
  std::size_t max_questions = 3;
  std::vector<FewShotExample> few_shot;
  std::string question_template = "question_gen";
  std::string answer_template = "answer_gen";
  std::string exam_answer_template = "exam_answer";
  double question_temperature = 0.7;
  double answer_temperature = 0.0;
  int max_tokens = 1024;
  std::size_t parallelism = 1;
  FilterConfig filter;
};

struct ForgeResult {
  std::vector<QAPair> pairs;
  std::vector<Rejection> rejected;
  ForgeReport report;
};

struct ExamConversion {
  std::optional<QAPair> pair;
  std::optional<RejectReason> reason;  // set when the item was skipped
  std::string detail;
};

/// Splits a numbered / bulleted / line-delimited list into trimmed questions.
std::vector<std::string> parse_question_list(std::string_view response);

class DatasetForge {
 public:
  DatasetForge(BackendSpec backend, std::shared_ptr<const TemplateStore> templates,
               ForgeConfig config);

  /// At most max_q questions; throws UnparseableResponse when none parse.
  std::vector<std::string> generate_questions(const Chunk& chunk, std::size_t max_q) const;
  /// Trimmed backend answer; "" when the backend answered with nothing.
  std::string generate_answer(const Chunk& chunk, std::string_view question) const;

  /// chunk -> questions -> answers -> filter. Per-chunk failures are recorded
  /// and skipped. Throws NoPairsSurvived when chunks existed but nothing was
  /// kept; an empty corpus yields an empty result.
  ForgeResult build_rtd(std::span<const Document> corpus) const;

  ExamConversion convert_exam_item(const ExamItem& item) const;

  const ForgeConfig& config() const noexcept { return config_; }

 private:
  std::string call(const std::string& template_name, const SlotValues& slots,
                   double temperature) const;

  BackendSpec backend_;
  std::shared_ptr<const TemplateStore> templates_;
  ForgeConfig config_;
};

/// Seeded uniform sample of `per_category` pairs from every category present,
/// sorted by (category, id). Throws InsufficientCategory.
std::vector<QAPair> sample_eval_set(std::span<const QAPair> pairs, std::size_t per_category,
                                    std::uint64_t seed);

}  // namespace idas
