#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "idas/corpus.hpp"
#include "idas/dataset_forge.hpp"
#include "idas/embedding.hpp"
#include "idas/llm_gateway.hpp"
#include "idas/rag_engine.hpp"
#include "idas/vindex.hpp"

namespace idas {

enum class LogLevel { Error, Warn, Info, Debug };

/// Runtime configuration. Relative paths in the file resolve against the
/// directory holding the file; secrets only ever come from the environment.
struct AppConfig {
  std::filesystem::path corpus_root;
  std::optional<std::filesystem::path> manifest_path;
  ChunkPolicy chunking;
  EmbedderSpec embedder;
  BackendSpec backend;
  EngineConfig engine;
  std::filesystem::path templates_dir;
  std::filesystem::path index_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  LogLevel log_level = LogLevel::Info;
  ForgeConfig forge;
  std::optional<std::filesystem::path> few_shot_path;
  std::size_t eval_parallelism = 1;
};

/// Throws InvalidConfig naming the offending key.
AppConfig parse_app_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
AppConfig load_app_config(const std::filesystem::path& path);

/// Startup checks that need the filesystem: templates present with
/// acceptable slots, corpus root readable, index directory writable.
void validate_app_config(const AppConfig& config, const TemplateStore& templates);

/// The effective configuration for display: no script bodies, no key
/// values, endpoint URLs without credentials or query strings.
nlohmann::json redacted_config(const AppConfig& config);

std::string_view to_string(LogLevel level) noexcept;

// Pipelines shared by the CLI and the service.

CorpusLoad load_configured_corpus(const AppConfig& config);

struct IngestSummary {
  std::size_t documents = 0;
  std::size_t chunks = 0;
  std::map<Category, std::size_t> chunks_per_category;
  std::vector<LoadError> errors;
};

struct IngestOutput {
  IngestSummary summary;
  std::vector<Chunk> chunks;
  std::shared_ptr<FlatIndex> index;
};

/// Loads, chunks and indexes the corpus. Throws NoDocuments when the corpus
/// yields nothing to index. Does not persist.
IngestOutput ingest_corpus(const AppConfig& config);

/// The persisted index when it exists, otherwise a freshly built one.
std::shared_ptr<const FlatIndex> open_index(const AppConfig& config);

std::shared_ptr<const TemplateStore> load_templates(const AppConfig& config);

}  // namespace idas
