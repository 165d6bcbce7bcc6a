#include "idas/rag_engine.hpp"

#include <algorithm>

#include "idas/error.hpp"
#include "idas/text.hpp"

namespace idas {

void EngineConfig::validate() const {
  if (top_k < 1) throw Error(ErrorCode::InvalidConfig, "top_k must be >= 1");
  if (!(score_threshold >= 0.0)) throw Error(ErrorCode::InvalidConfig, "score_threshold must be >= 0");
}

GateDecision gate(std::span<const RetrievalHit> hits, double threshold) {
  if (hits.empty() || hits.front().score < threshold) return {};
  GateDecision decision{GateKind::Refine, {}};
  for (const auto& hit : hits) {
    if (hit.score >= threshold) decision.kept.push_back(hit);
  }
  return decision;
}

void to_json(nlohmann::json& j, const AdvisoryAnswer& a) {
  j = nlohmann::json{{"question", a.question},
                     {"draft", a.draft},
                     {"hits", a.hits},
                     {"used_retrieval", a.used_retrieval},
                     {"final", a.final_answer},
                     {"citations", a.citations},
                     {"warnings", a.warnings},
                     {"failed_stage", a.failed_stage}};
}

void from_json(const nlohmann::json& j, AdvisoryAnswer& a) {
  j.at("question").get_to(a.question);
  j.at("draft").get_to(a.draft);
  j.at("hits").get_to(a.hits);
  j.at("used_retrieval").get_to(a.used_retrieval);
  j.at("final").get_to(a.final_answer);
  j.at("citations").get_to(a.citations);
  a.warnings = j.value("warnings", std::vector<std::string>{});
  a.failed_stage = j.value("failed_stage", std::string{});
}

std::string build_context(std::span<const RetrievalHit> hits) {
  std::string out;
  for (const auto& hit : hits) {
    if (!out.empty()) out += "\n\n";
    out += "[" + hit.source_label + "]\n";
    out += text::trim(hit.text);
  }
  return out;
}

std::vector<std::string> distinct_labels(std::span<const RetrievalHit> hits) {
  std::vector<std::string> labels;
  for (const auto& hit : hits) {
    if (std::find(labels.begin(), labels.end(), hit.source_label) == labels.end()) {
      labels.push_back(hit.source_label);
    }
  }
  return labels;
}

std::string attach_citations(std::string out, std::span<const std::string> labels,
                             std::string_view prefix) {
  for (const auto& label : labels) {
    const std::string citation = std::string(prefix) + label;
    if (out.find(citation) != std::string::npos) continue;
    if (!out.empty() && out.back() != '\n') out += '\n';
    out += "(" + citation + ")";
  }
  return out;
}

AdvisoryEngine::AdvisoryEngine(std::shared_ptr<const FlatIndex> index, EmbedderSpec embedder,
                               BackendSpec backend, std::shared_ptr<const TemplateStore> templates,
                               EngineConfig config)
    : index_(std::move(index)),
      embedder_(std::move(embedder)),
      backend_(std::move(backend)),
      templates_(std::move(templates)),
      config_(std::move(config)) {
  if (!index_ || !templates_) throw Error(ErrorCode::InvalidConfig, "engine needs an index and templates");
  config_.validate();
  embedder_.validate();
  backend_.validate();
  const auto check = [&](const std::string& name, std::initializer_list<std::string_view> allowed) {
    if (!templates_->contains(name)) {
      throw Error(ErrorCode::InvalidConfig, "template '" + name + "' not found");
    }
    for (const auto& slot : templates_->get(name).required_slots) {
      if (std::find(allowed.begin(), allowed.end(), slot) == allowed.end()) {
        throw Error(ErrorCode::InvalidConfig,
                    "template '" + name + "' uses unsupported slot {" + slot + "}");
      }
    }
  };
  check(config_.draft_template, {"question"});
  check(config_.refine_template, {"question", "draft", "context"});
}

std::string AdvisoryEngine::call(const std::string& template_name,
                                 const SlotValues& available) const {
  const auto& tmpl = templates_->get(template_name);
  SlotValues slots;
  for (const auto& name : tmpl.required_slots) {
    if (auto found = available.find(name); found != available.end()) slots.insert(*found);
  }
  const auto prompt = render(tmpl, slots);
  CompletionParams params;
  params.temperature = 0.0;
  params.max_tokens = config_.max_tokens;
  return std::string(text::trim(complete(backend_, config_.system_prompt, prompt, params).response));
}

std::string AdvisoryEngine::answer_direct(std::string_view question) const {
  if (text::trim(question).empty()) throw Error(ErrorCode::InvalidArgument, "empty question");
  return call(config_.draft_template, {{"question", std::string(question)}});
}

std::vector<RetrievalHit> AdvisoryEngine::retrieve(std::string_view question) const {
  if (index_->size() == 0) return {};
  const std::string q(question);
  const auto vectors = embed(embedder_, std::span<const std::string>(&q, 1));
  return index_->search(vectors.front(), config_.top_k);
}

RefineResult AdvisoryEngine::refine(std::string_view question, std::string_view draft,
                                    std::span<const RetrievalHit> kept) const {
  if (kept.empty()) throw Error(ErrorCode::InvalidArgument, "refine needs at least one hit");
  const auto response = call(config_.refine_template, {{"question", std::string(question)},
                                                       {"draft", std::string(draft)},
                                                       {"context", build_context(kept)}});
  RefineResult result;
  result.citations = distinct_labels(kept);
  result.final_answer = attach_citations(response, result.citations, config_.citation_prefix);
  return result;
}

AdvisoryAnswer AdvisoryEngine::ask(std::string_view question) const {
  AdvisoryAnswer answer;
  answer.question = std::string(question);
  answer.draft = answer_direct(question);
  answer.final_answer = answer.draft;

  try {
    answer.hits = retrieve(question);
  } catch (const Error& e) {
    answer.failed_stage = "retrieve";
    answer.warnings.push_back(std::string("retrieval failed, answering from draft: ") + e.what());
    return answer;
  }

  auto decision = gate(answer.hits, config_.score_threshold);
  if (decision.kind == GateKind::Passthrough) return answer;

  try {
    auto refined = refine(question, answer.draft, decision.kept);
    answer.final_answer = std::move(refined.final_answer);
    answer.citations = std::move(refined.citations);
    answer.used_retrieval = true;
  } catch (const Error& e) {
    answer.failed_stage = "refine";
    answer.warnings.push_back(std::string("refinement failed, answering from draft: ") + e.what());
  }
  return answer;
}

std::shared_ptr<FlatIndex> build_index(std::span<const Chunk> chunks, const EmbedderSpec& embedder) {
  auto index = std::make_shared<FlatIndex>(embedder.dim);
  if (chunks.empty()) return index;
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.text);
  auto vectors = embed(embedder, texts);
  std::vector<IndexEntry> entries;
  entries.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    entries.push_back({chunks[i].id, std::move(vectors[i]), chunks[i].source_label,
                       chunks[i].category, chunks[i].text});
  }
  index->insert(entries);
  return index;
}

}  // namespace idas
