#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "idas/corpus.hpp"
#include "idas/dataset_forge.hpp"
#include "idas/embedding.hpp"
#include "idas/metrics.hpp"
#include "idas/vindex.hpp"

namespace idas {

/// Any answering system: question in, answer text out. May throw.
using AnswerFn = std::function<std::string(const std::string& question)>;

struct ExampleScore {
  std::string id;
  Category category = Category::Other;
  ScoreSet scores;
  bool failed = false;
  std::string error;
};

struct MetricReport {
  std::string system_name;
  std::map<Category, ScoreSet> per_category;  // arithmetic means
  std::map<Category, std::size_t> example_count;
  std::size_t failed_count = 0;
  std::vector<ExampleScore> examples;  // (category, id) order; empty unless kept
};

void to_json(nlohmann::json& j, const MetricReport& report);
void from_json(const nlohmann::json& j, MetricReport& report);

struct EvalOptions {
  std::size_t parallelism = 1;
  bool keep_examples = true;
};

/// Scores system(question) against each reference answer. Examples are
/// processed and reduced in (category, id) order; a throwing system scores
/// all-zero for that example and is counted in failed_count.
MetricReport evaluate(std::string system_name, const AnswerFn& system,
                      std::span<const QAPair> eval_set, const EvalOptions& options = {});

struct ComparisonTable {
  std::vector<MetricReport> rows;
  std::string baseline;
  std::string treatment;
  /// treatment - baseline on the 0..1 scale, per category present in both.
  std::map<Category, ScoreSet> delta;
};

/// Throws UnknownSystemName if either name is not among the reports.
ComparisonTable compare(std::span<const MetricReport> reports, const std::string& baseline,
                        const std::string& treatment);

/// Scores to 2 decimals; the delta row in percentage points to 2 decimals.
std::string render_comparison_text(const ComparisonTable& table);
std::string render_comparison_csv(const ComparisonTable& table);

std::string render_report_text(const MetricReport& report);
std::string render_report_csv(const MetricReport& report);
std::string render_examples_csv(const MetricReport& report);

struct SweepSetup {
  EmbedderSpec embedder;
  /// Builds the system under test over a freshly built index.
  std::function<AnswerFn(std::shared_ptr<const FlatIndex>)> engine_factory;
  std::string system_name = "rag";
  std::string source_label_prefix = "../data_source/";
  EvalOptions options;
};

struct SweepResult {
  std::map<std::size_t, MetricReport> reports;
  std::map<std::size_t, std::string> failures;
};

/// For each size: fixed-token chunking (overlap 0), index, evaluate.
/// A failing size is recorded and the sweep continues.
SweepResult chunk_sweep(std::span<const Document> corpus, std::span<const std::size_t> sizes,
                        std::span<const QAPair> eval_set, const SweepSetup& setup);

std::string render_sweep_text(const SweepResult& sweep);
std::string render_sweep_csv(const SweepResult& sweep);
std::string render_sweep_examples_csv(const SweepResult& sweep);

}  // namespace idas
