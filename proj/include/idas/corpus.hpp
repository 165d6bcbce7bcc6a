#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace idas {

enum class Category { LegalProvision, RailwayRegulation, RailwayExpertise, Other };

inline constexpr std::array<Category, 4> kAllCategories = {
    Category::LegalProvision, Category::RailwayRegulation, Category::RailwayExpertise,
    Category::Other};

/// Stable wire name, e.g. "RailwayRegulation".
std::string_view to_string(Category category) noexcept;
/// Table label, e.g. "Railway Regulation".
std::string_view display_name(Category category) noexcept;
/// Accepts the wire name or the display name; throws Error(InvalidArgument).
Category parse_category(std::string_view name);

void to_json(nlohmann::json& j, Category category);
void from_json(const nlohmann::json& j, Category& category);

struct Document {
  std::string id;
  std::string source_path;  // relative to the corpus root, '/' separated
  Category category = Category::Other;
  std::string title;
  std::string text;
  std::size_t token_count = 0;
};

struct Chunk {
  std::string id;
  std::string document_id;
  std::string source_label;
  Category category = Category::Other;
  std::size_t ordinal = 0;
  std::string text;
  std::size_t token_count = 0;

  bool operator==(const Chunk&) const = default;
};

void to_json(nlohmann::json& j, const Chunk& chunk);
void from_json(const nlohmann::json& j, Chunk& chunk);

enum class ChunkMode { Structural, FixedTokens };

std::vector<std::string> default_boundary_patterns();

struct ChunkPolicy {
  ChunkMode mode = ChunkMode::FixedTokens;
  std::size_t chunk_size = 500;
  std::size_t overlap = 0;
  /// ECMAScript regexes searched against each line (without its newline).
  std::vector<std::string> boundary_patterns = default_boundary_patterns();
  std::string source_label_prefix = "../data_source/";

  /// Throws Error(InvalidArgument) unless 1 <= chunk_size and overlap < chunk_size.
  void validate() const;
};

std::size_t count_tokens(std::string_view text);

std::string document_id_for(std::string_view source_path);

using Manifest = std::map<std::string, Category>;

/// Reads a JSON object mapping relative path -> category name.
Manifest load_manifest(const std::filesystem::path& path);

struct LoadError {
  std::string path;
  std::string message;
};

struct CorpusLoad {
  std::vector<Document> documents;  // sorted by source_path
  std::vector<LoadError> errors;
};

/// Loads every *.txt / *.md file under root_dir (recursively). Per-file
/// failures are collected in `errors`; the remaining files still load.
CorpusLoad load_corpus(const std::filesystem::path& root_dir,
                       const std::optional<Manifest>& manifest = std::nullopt);

std::vector<Chunk> chunk_document(const Document& doc, const ChunkPolicy& policy);
std::vector<Chunk> chunk_corpus(std::span<const Document> docs, const ChunkPolicy& policy);

/// Inverse of chunk_document for one document's chunks in ordinal order:
/// drops the leading `overlap` tokens of every chunk after the first.
std::string reconstruct_text(std::span<const Chunk> chunks, std::size_t overlap);

void write_chunks_jsonl(std::ostream& out, std::span<const Chunk> chunks);
std::vector<Chunk> read_chunks_jsonl(std::istream& in);

}  // namespace idas
