#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "idas/corpus.hpp"
#include "idas/embedding.hpp"
#include "idas/llm_gateway.hpp"
#include "idas/vindex.hpp"

namespace idas {

struct EngineConfig {
  std::size_t top_k = 5;
  double score_threshold = 0.35;
  std::string draft_template = "draft";
  std::string refine_template = "refine";
  std::string citation_prefix = "Referenced from: ";
  std::string system_prompt;
  int max_tokens = 1024;

  void validate() const;
};

enum class GateKind { Passthrough, Refine };

struct GateDecision {
  GateKind kind = GateKind::Passthrough;
  std::vector<RetrievalHit> kept;  // empty for Passthrough
};

/// Passthrough when there are no hits or the best score is below the
/// threshold; otherwise Refine with every hit scoring at least the threshold.
/// `hits` must already be ranked.
GateDecision gate(std::span<const RetrievalHit> hits, double threshold);

/// The full trace of one question.
struct AdvisoryAnswer {
  std::string question;
  std::string draft;
  std::vector<RetrievalHit> hits;
  bool used_retrieval = false;
  std::string final_answer;          // "final" on the wire
  std::vector<std::string> citations;
  std::vector<std::string> warnings;
  std::string failed_stage;          // "", "retrieve" or "refine"

  bool operator==(const AdvisoryAnswer&) const = default;
};

void to_json(nlohmann::json& j, const AdvisoryAnswer& answer);
void from_json(const nlohmann::json& j, AdvisoryAnswer& answer);

struct RefineResult {
  std::string final_answer;
  std::vector<std::string> citations;
};

/// Kept hits as "[<source_label>]\n<text>" blocks in hit order.
std::string build_context(std::span<const RetrievalHit> hits);

/// Distinct labels in order of first appearance.
std::vector<std::string> distinct_labels(std::span<const RetrievalHit> hits);

/// Appends "(<prefix><label>)" for each label the text does not already cite.
std::string attach_citations(std::string text, std::span<const std::string> labels,
                             std::string_view prefix);

class AdvisoryEngine {
 public:
  /// Throws InvalidConfig if a configured template is missing or asks for
  /// slots the engine cannot supply.
  AdvisoryEngine(std::shared_ptr<const FlatIndex> index, EmbedderSpec embedder,
                 BackendSpec backend, std::shared_ptr<const TemplateStore> templates,
                 EngineConfig config);

  std::string answer_direct(std::string_view question) const;
  std::vector<RetrievalHit> retrieve(std::string_view question) const;
  RefineResult refine(std::string_view question, std::string_view draft,
                      std::span<const RetrievalHit> kept) const;

  /// draft -> retrieve -> gate -> refine. A draft failure propagates;
  /// retrieval and refine failures degrade to the draft and are recorded in
  /// `warnings` / `failed_stage`.
  AdvisoryAnswer ask(std::string_view question) const;

  const EngineConfig& config() const noexcept { return config_; }
  const FlatIndex& index() const noexcept { return *index_; }

 private:
  std::string call(const std::string& template_name, const SlotValues& available) const;

  std::shared_ptr<const FlatIndex> index_;
  EmbedderSpec embedder_;
  BackendSpec backend_;
  std::shared_ptr<const TemplateStore> templates_;
  EngineConfig config_;
};

/// Indexing phase: embeds every chunk with `embedder` and inserts it.
std::shared_ptr<FlatIndex> build_index(std::span<const Chunk> chunks, const EmbedderSpec& embedder);

}  // namespace idas
