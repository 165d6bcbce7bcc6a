#include "idas/dataset_forge.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <regex>
#include <set>
#include <thread>
#include <unordered_set>

#include "idas/error.hpp"
#include "idas/text.hpp"

namespace idas {

namespace {

std::string_view flag_name(PairFlag flag) {
  return flag == PairFlag::Generated ? "Generated" : "ExamConverted";
}

PairFlag parse_flag(std::string_view name) {
  if (name == "Generated") return PairFlag::Generated;
  if (name == "ExamConverted") return PairFlag::ExamConverted;
  throw Error(ErrorCode::InvalidArgument, "unknown pair flag '" + std::string(name) + "'");
}

bool is_ascii_word(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
  });
}

bool is_interrogative(std::string_view question, const FilterConfig& config) {
  const auto folded = text::fold_case(question);
  const auto tokens = text::folded_tokens(question);
  for (const auto& marker : config.interrogative_markers) {
    const auto m = text::fold_case(marker);
    if (is_ascii_word(m)) {
      if (std::find(tokens.begin(), tokens.end(), m) != tokens.end()) return true;
    } else if (folded.find(m) != std::string::npos) {
      return true;
    }
  }
  return false;
}

bool contains_refusal(std::string_view answer, const FilterConfig& config) {
  const auto folded = text::fold_case(answer);
  return std::any_of(config.refusal_phrases.begin(), config.refusal_phrases.end(),
                     [&](const std::string& phrase) {
                       return folded.find(text::fold_case(phrase)) != std::string::npos;
                     });
}

std::vector<std::uint64_t> bigram_keys(std::string_view normalized) {
  std::vector<char32_t> cps;
  for (std::size_t pos = 0; pos < normalized.size();) {
    const auto cp = text::decode_at(normalized, pos);
    cps.push_back(cp.value);
    pos += cp.length;
  }
  std::vector<std::uint64_t> keys;
  for (std::size_t i = 0; i + 1 < cps.size(); ++i) {
    keys.push_back((static_cast<std::uint64_t>(cps[i]) << 32) | cps[i + 1]);
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

double jaccard_sorted(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
    if (a[i] == b[j]) ++common, ++i, ++j;
    else if (a[i] < b[j]) ++i;
    else ++j;
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::string with_thousands(std::size_t value) {
  auto digits = std::to_string(value);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i != 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string pad_right(std::string_view s, std::size_t width) {
  std::string out(s);
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

std::string pad_left(std::string_view s, std::size_t width) {
  std::string out;
  if (s.size() < width) out.append(width - s.size(), ' ');
  out += s;
  return out;
}

std::string exam_question_template(ExamItemType type) {
  return "exam_question_" + std::string(to_string(type));
}

char option_letter(std::size_t index) { return static_cast<char>('A' + index); }

// Unbiased draw in [0, n) from a standardized engine, so samples are identical
// across standard library implementations.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % n);
  std::uint64_t draw = 0;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % n;
}

}  // namespace

bool QAPair::has_flag(PairFlag flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

void to_json(nlohmann::json& j, const QAPair& pair) {
  auto flags = nlohmann::json::array();
  for (const auto f : pair.flags) flags.push_back(flag_name(f));
  j = nlohmann::json{{"id", pair.id},
                     {"question", pair.question},
                     {"answer", pair.answer},
                     {"category", pair.category},
                     {"source_chunk_id", pair.source_chunk_id},
                     {"flags", flags}};
}

void from_json(const nlohmann::json& j, QAPair& pair) {
  j.at("id").get_to(pair.id);
  j.at("question").get_to(pair.question);
  j.at("answer").get_to(pair.answer);
  j.at("category").get_to(pair.category);
  const auto& src = j.value("source_chunk_id", nlohmann::json(""));
  pair.source_chunk_id = src.is_null() ? std::string() : src.get<std::string>();
  pair.flags.clear();
  for (const auto& f : j.value("flags", nlohmann::json::array())) {
    pair.flags.push_back(parse_flag(f.get<std::string>()));
  }
}

void write_pairs_jsonl(std::ostream& out, std::span<const QAPair> pairs) {
  for (const auto& p : pairs) out << nlohmann::json(p).dump() << '\n';
}

std::vector<QAPair> read_pairs_jsonl(std::istream& in) {
  std::vector<QAPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      pairs.push_back(nlohmann::json::parse(line).get<QAPair>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument,
                  "pair line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pairs;
}

std::string_view to_string(RejectReason reason) noexcept {
  switch (reason) {
    case RejectReason::InvalidQuestion: return "InvalidQuestion";
    case RejectReason::MissingAnswer: return "MissingAnswer";
    case RejectReason::InvalidAnswer: return "InvalidAnswer";
    case RejectReason::Duplicate: return "Duplicate";
  }
  return "InvalidQuestion";
}

std::vector<std::string> default_refusal_phrases() {
  return {"无法回答", "无法提供", "抱歉", "对不起", "我不知道", "作为一个AI", "作为AI",
          "I cannot", "I can't", "I'm sorry", "as an AI", "I don't know"};
}

std::vector<std::string> default_interrogative_markers() {
  return {"?", "？", "吗", "什么", "如何", "怎么", "怎样", "哪", "为什么", "为何", "是否",
          "多少", "几", "谁", "请问", "what", "how", "why", "when", "where", "which",
          "who", "whom", "whose"};
}

std::string normalize_question(std::string_view question) {
  std::u32string cps;
  for (std::size_t pos = 0; pos < question.size();) {
    const auto cp = text::decode_at(question, pos);
    pos += cp.length;
    if (text::is_cjk(cp.value) || text::is_word_char(cp.value)) cps.push_back(text::fold_case(cp.value));
  }
  static constexpr std::u32string_view kParticles = U"呢吗吧啊呀么";
  while (cps.size() > 1 && kParticles.find(cps.back()) != std::u32string_view::npos) cps.pop_back();
  std::string out;
  for (const auto cp : cps) text::append_utf8(out, cp);
  return out;
}

double bigram_jaccard(std::string_view a, std::string_view b) {
  return jaccard_sorted(bigram_keys(a), bigram_keys(b));
}

bool is_duplicate(std::string_view q1, std::string_view q2, double threshold) {
  const auto a = normalize_question(q1);
  const auto b = normalize_question(q2);
  if (a == b) return true;
  return bigram_jaccard(a, b) >= threshold;
}

FilterResult filter_pairs(std::span<const QAPair> pairs, const FilterConfig& config) {
  FilterResult result;
  struct KeptKey {
    std::string normalized;
    std::vector<std::uint64_t> bigrams;
  };
  std::vector<KeptKey> kept_keys;

  for (const auto& pair : pairs) {
    std::optional<RejectReason> reason;
    if (count_tokens(pair.question) < config.min_question_tokens ||
        !is_interrogative(pair.question, config)) {
      reason = RejectReason::InvalidQuestion;
    } else if (text::trim(pair.answer).empty()) {
      reason = RejectReason::MissingAnswer;
    } else if (count_tokens(pair.answer) < config.min_answer_tokens ||
               contains_refusal(pair.answer, config)) {
      reason = RejectReason::InvalidAnswer;
    }

    KeptKey key;
    if (!reason) {
      key.normalized = normalize_question(pair.question);
      key.bigrams = bigram_keys(key.normalized);
      for (const auto& k : kept_keys) {
        if (k.normalized == key.normalized ||
            jaccard_sorted(k.bigrams, key.bigrams) >= config.duplicate_threshold) {
          reason = RejectReason::Duplicate;
          break;
        }
      }
    }

    if (reason) {
      result.rejected.push_back({pair, *reason});
    } else {
      kept_keys.push_back(std::move(key));
      result.kept.push_back(pair);
    }
  }
  return result;
}

std::size_t ForgeReport::total_pairs() const {
  std::size_t total = 0;
  for (const auto& [_, stats] : per_category) total += stats.qa_count;
  return total;
}

std::string render_forge_table(const ForgeReport& report) {
  const std::string h0 = "Category";
  const std::string h1 = "Total Tokens";
  const std::string h2 = "Number of Q&A";
  std::size_t w0 = h0.size();
  std::size_t w1 = h1.size();
  std::size_t w2 = h2.size();
  for (const auto& [category, stats] : report.per_category) {
    w0 = std::max(w0, display_name(category).size());
    w1 = std::max(w1, with_thousands(stats.total_tokens).size());
    w2 = std::max(w2, with_thousands(stats.qa_count).size());
  }
  std::string out;
  out += pad_right(h0, w0) + "  " + pad_left(h1, w1) + "  " + pad_left(h2, w2) + "\n";
  out += std::string(w0, '-') + "  " + std::string(w1, '-') + "  " + std::string(w2, '-') + "\n";
  for (const auto& [category, stats] : report.per_category) {
    out += pad_right(display_name(category), w0) + "  " +
           pad_left(with_thousands(stats.total_tokens), w1) + "  " +
           pad_left(with_thousands(stats.qa_count), w2) + "\n";
  }
  return out;
}

std::string render_forge_csv(const ForgeReport& report) {
  std::string out = "category,total_tokens,qa_count\n";
  for (const auto& [category, stats] : report.per_category) {
    out += std::string(display_name(category)) + "," + std::to_string(stats.total_tokens) + "," +
           std::to_string(stats.qa_count) + "\n";
  }
  return out;
}

std::string render_forge_report(const ForgeReport& report) {
  std::string out = render_forge_table(report);
  out += "\nKept pairs: " + std::to_string(report.total_pairs()) + "\n";
  out += "Rejected:";
  for (const auto reason : {RejectReason::InvalidQuestion, RejectReason::MissingAnswer,
                            RejectReason::InvalidAnswer, RejectReason::Duplicate}) {
    const auto found = report.rejected.find(reason);
    const std::size_t n = found == report.rejected.end() ? 0 : found->second;
    out += " " + std::string(to_string(reason)) + "=" + std::to_string(n);
  }
  out += "\nSkipped chunks: " + std::to_string(report.skipped_chunks) + "\n";
  for (const auto& f : report.failures) out += "  failure: " + f + "\n";
  return out;
}

std::string_view to_string(ExamItemType type) noexcept {
  switch (type) {
    case ExamItemType::SingleChoice: return "single";
    case ExamItemType::MultipleChoice: return "multiple";
    case ExamItemType::TrueFalse: return "true_false";
  }
  return "single";
}

std::vector<std::size_t> ExamItem::keyed_options() const {
  std::vector<std::size_t> out;
  if (type == ExamItemType::TrueFalse) return out;
  for (const char c : key) {
    if (c == ',' || c == ' ') continue;
    const char upper = (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
    if (upper < 'A' || upper > 'Z') {
      throw Error(ErrorCode::InvalidArgument, "exam item " + id + ": bad key letter '" + c + "'");
    }
    out.push_back(static_cast<std::size_t>(upper - 'A'));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void ExamItem::validate() const {
  if (text::trim(stem).empty()) throw Error(ErrorCode::InvalidArgument, "exam item " + id + ": empty stem");
  if (type == ExamItemType::TrueFalse) {
    if (key != "true" && key != "false") {
      throw Error(ErrorCode::InvalidArgument, "exam item " + id + ": true/false key must be true or false");
    }
    return;
  }
  const auto keyed = keyed_options();
  for (const auto idx : keyed) {
    if (idx >= options.size()) {
      throw Error(ErrorCode::InvalidArgument, "exam item " + id + ": key names a missing option");
    }
  }
  if (type == ExamItemType::SingleChoice && keyed.size() != 1) {
    throw Error(ErrorCode::InvalidArgument, "exam item " + id + ": single choice needs exactly one key");
  }
  if (type == ExamItemType::MultipleChoice && keyed.empty()) {
    throw Error(ErrorCode::InvalidArgument, "exam item " + id + ": multiple choice needs a key");
  }
}

void from_json(const nlohmann::json& j, ExamItem& item) {
  j.at("stem").get_to(item.stem);
  const auto type = j.at("item_type").get<std::string>();
  if (type == "single") item.type = ExamItemType::SingleChoice;
  else if (type == "multiple") item.type = ExamItemType::MultipleChoice;
  else if (type == "true_false") item.type = ExamItemType::TrueFalse;
  else throw Error(ErrorCode::InvalidArgument, "unknown item_type '" + type + "'");
  item.options = j.value("options", std::vector<std::string>{});
  const auto& key = j.at("key");
  if (key.is_boolean()) {
    item.key = key.get<bool>() ? "true" : "false";
  } else if (key.is_array()) {
    item.key.clear();
    for (const auto& k : key) item.key += k.get<std::string>();
  } else {
    item.key = key.get<std::string>();
  }
  item.category = j.value("category", Category::Other);
  item.id = j.value("id", std::string());
  if (item.id.empty()) item.id = "exam-" + text::hex64(text::fnv1a64(item.stem)).substr(0, 12);
}

std::vector<ExamItem> read_exam_jsonl(std::istream& in) {
  std::vector<ExamItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      auto item = nlohmann::json::parse(line).get<ExamItem>();
      item.validate();
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, "exam line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return items;
}

std::vector<FewShotExample> load_few_shot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open few-shot file " + path.string());
  std::vector<FewShotExample> out;
  try {
    for (const auto& e : nlohmann::json::parse(in)) {
      out.push_back({e.at("question").get<std::string>(), e.at("answer").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "few-shot file " + path.string() + ": " + e.what());
  }
  return out;
}

std::vector<std::string> parse_question_list(std::string_view response) {
  // "1." "2)" "3、" "-" "*" "•" "Q1:" "问题1：" prefixes.
  static const std::regex kPrefix(
      R"(^\s*(?:(?:Q|q|问题)?\s*[0-9]+\s*(?:\.|\)|、|:|：)|-|\*|•)\s*)", std::regex::ECMAScript);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= response.size()) {
    auto end = response.find('\n', pos);
    if (end == std::string_view::npos) end = response.size();
    std::string line(text::trim(response.substr(pos, end - pos)));
    line = std::regex_replace(line, kPrefix, "", std::regex_constants::format_first_only);
    const auto trimmed = text::trim(line);
    if (!trimmed.empty()) out.emplace_back(trimmed);
    pos = end + 1;
  }
  return out;
}

DatasetForge::DatasetForge(BackendSpec backend, std::shared_ptr<const TemplateStore> templates,
                           ForgeConfig config)
    : backend_(std::move(backend)), templates_(std::move(templates)), config_(std::move(config)) {
  if (!templates_) throw Error(ErrorCode::InvalidConfig, "forge needs templates");
  backend_.validate();
  config_.policy.validate();
  if (config_.max_questions < 1) throw Error(ErrorCode::InvalidConfig, "max_questions must be >= 1");
  for (const auto& name : {config_.question_template, config_.answer_template}) {
    if (!templates_->contains(name)) throw Error(ErrorCode::InvalidConfig, "template '" + name + "' not found");
  }
}

std::string DatasetForge::call(const std::string& template_name, const SlotValues& available,
                               double temperature) const {
  const auto& tmpl = templates_->get(template_name);
  SlotValues slots;
  for (const auto& name : tmpl.required_slots) {
    if (auto found = available.find(name); found != available.end()) slots.insert(*found);
  }
  CompletionParams params{temperature, config_.max_tokens};
  return std::string(text::trim(complete(backend_, "", render(tmpl, slots), params).response));
}

std::vector<std::string> DatasetForge::generate_questions(const Chunk& chunk, std::size_t max_q) const {
  if (text::trim(chunk.text).empty()) throw Error(ErrorCode::InvalidArgument, "empty chunk " + chunk.id);
  std::string examples;
  for (const auto& ex : config_.few_shot) {
    examples += "Q: " + ex.question + "\nA: " + ex.answer + "\n\n";
  }
  std::string response;
  try {
    response = call(config_.question_template,
                    {{"chunk", chunk.text}, {"examples", examples}, {"max_q", std::to_string(max_q)}},
                    config_.question_temperature);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ResponseEmpty) throw;
  }
  auto questions = parse_question_list(response);
  if (questions.empty()) {
    throw Error(ErrorCode::UnparseableResponse, "no questions in response for chunk " + chunk.id);
  }
  if (questions.size() > max_q) questions.resize(max_q);
  return questions;
}

std::string DatasetForge::generate_answer(const Chunk& chunk, std::string_view question) const {
  if (text::trim(question).empty() || text::trim(chunk.text).empty()) {
    throw Error(ErrorCode::InvalidArgument, "generate_answer needs a question and chunk text");
  }
  try {
    return call(config_.answer_template, {{"question", std::string(question)}, {"chunk", chunk.text}},
                config_.answer_temperature);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ResponseEmpty) return {};
    throw;
  }
}

ForgeResult DatasetForge::build_rtd(std::span<const Document> corpus) const {
  ForgeResult result;
  for (const auto& doc : corpus) result.report.per_category[doc.category].total_tokens += doc.token_count;
  const auto chunks = chunk_corpus(corpus, config_.policy);
  if (chunks.empty()) return result;

  struct Outcome {
    std::vector<QAPair> pairs;
    bool skipped = false;
    std::vector<std::string> failures;
  };
  std::vector<Outcome> outcomes(chunks.size());

  const auto work = [&](std::size_t i) {
    const auto& chunk = chunks[i];
    auto& outcome = outcomes[i];
    std::vector<std::string> questions;
    try {
      questions = generate_questions(chunk, config_.max_questions);
    } catch (const Error& e) {
      outcome.skipped = e.code() == ErrorCode::UnparseableResponse;
      outcome.failures.push_back(chunk.id + ": " + e.what());
      return;
    }
    for (std::size_t q = 0; q < questions.size(); ++q) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "-q%02zu", q);
      QAPair pair{chunk.id + suffix, questions[q], {}, chunk.category, chunk.id, {PairFlag::Generated}};
      try {
        pair.answer = generate_answer(chunk, questions[q]);
      } catch (const Error& e) {
        outcome.failures.push_back(pair.id + ": " + e.what());
        continue;
      }
      outcome.pairs.push_back(std::move(pair));
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(config_.parallelism, 1, chunks.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < chunks.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < chunks.size(); i = next++) work(i);
      });
    }
  }

  // Assembly is sequential in (document, ordinal) order regardless of which
  // worker finished first.
  std::vector<QAPair> candidates;
  for (auto& outcome : outcomes) {
    if (outcome.skipped) ++result.report.skipped_chunks;
    for (auto& f : outcome.failures) result.report.failures.push_back(std::move(f));
    std::move(outcome.pairs.begin(), outcome.pairs.end(), std::back_inserter(candidates));
  }
  auto filtered = filter_pairs(candidates, config_.filter);
  for (const auto& pair : filtered.kept) ++result.report.per_category[pair.category].qa_count;
  for (const auto& r : filtered.rejected) ++result.report.rejected[r.reason];
  result.pairs = std::move(filtered.kept);
  result.rejected = std::move(filtered.rejected);
  if (result.pairs.empty()) {
    throw Error(ErrorCode::NoPairsSurvived,
                "no question-answer pairs survived filtering (" + std::to_string(chunks.size()) +
                    " chunks, " + std::to_string(result.rejected.size()) + " rejected)");
  }
  return result;
}

ExamConversion DatasetForge::convert_exam_item(const ExamItem& item) const {
  item.validate();
  ExamConversion conversion;

  std::string options;
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    options += std::string(1, option_letter(i)) + ". " + item.options[i] + "\n";
  }
  std::string key_text;
  const auto keyed = item.keyed_options();
  if (item.type == ExamItemType::TrueFalse) {
    key_text = item.key;
  } else {
    for (const auto idx : keyed) {
      if (!key_text.empty()) key_text += "\n";
      key_text += std::string(1, option_letter(idx)) + ". " + item.options[idx];
    }
  }

  const auto qname = exam_question_template(item.type);
  const std::string question = templates_->contains(qname)
                                   ? std::string(text::trim(render(templates_->get(qname), {{"stem", item.stem}})))
                                   : item.stem;

  std::string answer;
  try {
    answer = call(config_.exam_answer_template,
                  {{"stem", item.stem},
                   {"item_type", std::string(to_string(item.type))},
                   {"options", options},
                   {"key", key_text}},
                  config_.answer_temperature);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ResponseEmpty) throw;
  }
  if (answer.empty()) {
    conversion.reason = RejectReason::MissingAnswer;
    conversion.detail = item.id + ": empty conversion";
    return conversion;
  }
  for (const auto idx : keyed) {
    if (answer.find(item.options[idx]) == std::string::npos) {
      conversion.reason = RejectReason::InvalidAnswer;
      conversion.detail = item.id + ": answer omits keyed option " + std::string(1, option_letter(idx));
      return conversion;
    }
  }
  conversion.pair = QAPair{item.id, question, answer, item.category, "", {PairFlag::ExamConverted}};
  return conversion;
}

std::vector<QAPair> sample_eval_set(std::span<const QAPair> pairs, std::size_t per_category,
                                    std::uint64_t seed) {
  if (per_category == 0) return {};
  std::map<Category, std::vector<QAPair>> by_category;
  for (const auto& p : pairs) by_category[p.category].push_back(p);

  std::mt19937_64 rng(seed);
  std::vector<QAPair> out;
  for (auto& [category, group] : by_category) {
    if (group.size() < per_category) {
      throw Error(ErrorCode::InsufficientCategory,
                  std::string(to_string(category)) + " has " + std::to_string(group.size()) +
                      " pairs, " + std::to_string(per_category) + " requested");
    }
    std::sort(group.begin(), group.end(), [](const QAPair& a, const QAPair& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < per_category; ++i) {
      const auto j = i + uniform_below(rng, group.size() - i);
      std::swap(group[i], group[j]);
    }
    std::move(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(per_category),
              std::back_inserter(out));
  }
  std::sort(out.begin(), out.end(), [](const QAPair& a, const QAPair& b) {
    if (a.category != b.category) return a.category < b.category;
    return a.id < b.id;
  });
  return out;
}

}  // namespace idas
