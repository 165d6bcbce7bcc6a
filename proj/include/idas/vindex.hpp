#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "idas/corpus.hpp"
#include "idas/embedding.hpp"

namespace idas {

struct IndexEntry {
  std::string chunk_id;
  EmbeddingVector vector;
  std::string source_label;
  Category category = Category::Other;
  std::string text;
};

struct RetrievalHit {
  std::string chunk_id;
  double score = 0.0;
  std::string source_label;
  std::string text;

  bool operator==(const RetrievalHit&) const = default;
};

/// Total order used everywhere hits are ranked: score descending, then
/// chunk_id ascending.
bool ranks_before(const RetrievalHit& a, const RetrievalHit& b) noexcept;

void to_json(nlohmann::json& j, const RetrievalHit& hit);
void from_json(const nlohmann::json& j, RetrievalHit& hit);

/// Exact top-k cosine index. Vectors are stored L2-normalized in one
/// contiguous dim x n column-major block, so a search is a single
/// matrix-vector product followed by a partial sort.
///
/// Thread-safety: any number of concurrent search/find/persist calls, or one
/// insert. An insert batch is applied atomically with respect to readers.
class FlatIndex {
 public:
  FlatIndex() = default;
  explicit FlatIndex(std::size_t dim) : dim_(dim) {}
  FlatIndex(const FlatIndex&) = delete;
  FlatIndex& operator=(const FlatIndex&) = delete;

  /// Upserts the batch; returns the number of entries applied (replacements
  /// included). The first non-empty insert fixes the dimension. Throws
  /// DimensionMismatch before touching the index if any vector disagrees.
  std::size_t insert(std::span<const IndexEntry> entries);

  /// The min(k, size()) best hits ordered by ranks_before.
  std::vector<RetrievalHit> search(const EmbeddingVector& query, std::size_t k) const;

  std::optional<IndexEntry> find(std::string_view chunk_id) const;
  /// Snapshot in insertion order.
  std::vector<IndexEntry> entries() const;

  std::size_t size() const;
  std::size_t dim() const;

  /// Writes `path` (header + raw vectors) and `path`.meta.jsonl (labels and
  /// texts). Both carry one FNV-1a checksum stored in the header.
  void persist(const std::filesystem::path& path) const;
  /// Throws CorruptIndex on bad magic, truncation, checksum mismatch or a
  /// malformed sidecar; VersionUnsupported on an unknown format version.
  static std::unique_ptr<FlatIndex> load(const std::filesystem::path& path);

  static std::filesystem::path sidecar_path(const std::filesystem::path& path);

 private:
  struct Meta {
    std::string chunk_id;
    std::string source_label;
    Category category;
    std::string text;
  };

  // Readers pass through writer_gate_ before taking the shared lock, so a
  // waiting insert is not starved by a steady stream of searches.
  std::shared_lock<std::shared_mutex> read_lock() const {
    { std::lock_guard gate(writer_gate_); }
    return std::shared_lock(mutex_);
  }

  mutable std::mutex writer_gate_;
  mutable std::shared_mutex mutex_;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::vector<Meta> meta_;
  std::unordered_map<std::string, std::size_t> rows_;
};

}  // namespace idas
