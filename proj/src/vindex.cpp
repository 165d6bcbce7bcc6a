#include "idas/vindex.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

#include "idas/error.hpp"
#include "idas/text.hpp"

namespace idas {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 8> kMagic = {'I', 'D', 'A', 'S', 'V', 'I', 'D', 'X'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderSize = 8 + 4 + 4 + 8 + 8;

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::string_view in, std::size_t pos) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return static_cast<T>(v);
}

// FNV-1a continued over a second buffer.
std::uint64_t checksum(std::string_view vectors, std::string_view meta) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (auto part : {vectors, meta}) {
    for (const char c : part) {
      hash ^= static_cast<unsigned char>(c);
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename onto " + path.string() + ": " + ec.message());
}

[[noreturn]] void corrupt(const fs::path& path, const std::string& why) {
  throw Error(ErrorCode::CorruptIndex, path.string() + ": " + why);
}

}  // namespace

bool ranks_before(const RetrievalHit& a, const RetrievalHit& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.chunk_id < b.chunk_id;
}

void to_json(nlohmann::json& j, const RetrievalHit& hit) {
  j = nlohmann::json{{"chunk_id", hit.chunk_id},
                     {"score", hit.score},
                     {"source_label", hit.source_label},
                     {"text", hit.text}};
}

void from_json(const nlohmann::json& j, RetrievalHit& hit) {
  j.at("chunk_id").get_to(hit.chunk_id);
  j.at("score").get_to(hit.score);
  j.at("source_label").get_to(hit.source_label);
  j.at("text").get_to(hit.text);
}

std::size_t FlatIndex::insert(std::span<const IndexEntry> entries) {
  if (entries.empty()) return 0;

  std::unique_lock lock = [&] {
    std::lock_guard gate(writer_gate_);
    return std::unique_lock(mutex_);
  }();
  const std::size_t dim = dim_ != 0 ? dim_ : static_cast<std::size_t>(entries.front().vector.size());
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "cannot index zero-width vectors");
  for (const auto& e : entries) {
    if (static_cast<std::size_t>(e.vector.size()) != dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "entry " + e.chunk_id + " has dim " + std::to_string(e.vector.size()) +
                      ", index dim is " + std::to_string(dim));
    }
    if (e.chunk_id.empty()) throw Error(ErrorCode::InvalidArgument, "entry without chunk_id");
  }

  dim_ = dim;
  for (const auto& e : entries) {
    EmbeddingVector v = e.vector;
    normalize_or_zero(v);
    std::size_t row = meta_.size();
    if (auto found = rows_.find(e.chunk_id); found != rows_.end()) {
      row = found->second;
      meta_[row] = Meta{e.chunk_id, e.source_label, e.category, e.text};
    } else {
      rows_.emplace(e.chunk_id, row);
      meta_.push_back(Meta{e.chunk_id, e.source_label, e.category, e.text});
      data_.resize(data_.size() + dim_);
    }
    std::copy(v.data(), v.data() + dim_, data_.begin() + static_cast<std::ptrdiff_t>(row * dim_));
  }
  return entries.size();
}

std::vector<RetrievalHit> FlatIndex::search(const EmbeddingVector& query, std::size_t k) const {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  auto lock = read_lock();
  const std::size_t n = meta_.size();
  if (dim_ != 0 && static_cast<std::size_t>(query.size()) != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "query dim " + std::to_string(query.size()) +
                                                  " != index dim " + std::to_string(dim_));
  }
  if (n == 0) return {};

  EmbeddingVector q = query;
  normalize_or_zero(q);
  const Eigen::Map<const Eigen::MatrixXd> vectors(data_.data(), static_cast<Eigen::Index>(dim_),
                                                  static_cast<Eigen::Index>(n));
  const Eigen::VectorXd scores = (vectors.transpose() * q).cwiseMax(-1.0).cwiseMin(1.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t top = std::min(k, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double sa = scores[static_cast<Eigen::Index>(a)];
                      const double sb = scores[static_cast<Eigen::Index>(b)];
                      if (sa != sb) return sa > sb;
                      return meta_[a].chunk_id < meta_[b].chunk_id;
                    });

  std::vector<RetrievalHit> hits;
  hits.reserve(top);
  for (std::size_t i = 0; i < top; ++i) {
    const auto& m = meta_[order[i]];
    hits.push_back({m.chunk_id, scores[static_cast<Eigen::Index>(order[i])], m.source_label, m.text});
  }
  return hits;
}

std::optional<IndexEntry> FlatIndex::find(std::string_view chunk_id) const {
  auto lock = read_lock();
  auto found = rows_.find(std::string(chunk_id));
  if (found == rows_.end()) return std::nullopt;
  const auto row = found->second;
  const auto& m = meta_[row];
  EmbeddingVector v = Eigen::Map<const EmbeddingVector>(
      data_.data() + row * dim_, static_cast<Eigen::Index>(dim_));
  return IndexEntry{m.chunk_id, std::move(v), m.source_label, m.category, m.text};
}

std::vector<IndexEntry> FlatIndex::entries() const {
  auto lock = read_lock();
  std::vector<IndexEntry> out;
  out.reserve(meta_.size());
  for (std::size_t row = 0; row < meta_.size(); ++row) {
    const auto& m = meta_[row];
    EmbeddingVector v = Eigen::Map<const EmbeddingVector>(
        data_.data() + row * dim_, static_cast<Eigen::Index>(dim_));
    out.push_back({m.chunk_id, std::move(v), m.source_label, m.category, m.text});
  }
  return out;
}

std::size_t FlatIndex::size() const {
  auto lock = read_lock();
  return meta_.size();
}

std::size_t FlatIndex::dim() const {
  auto lock = read_lock();
  return dim_;
}

fs::path FlatIndex::sidecar_path(const fs::path& path) {
  auto p = path;
  p += ".meta.jsonl";
  return p;
}

void FlatIndex::persist(const fs::path& path) const {
  std::string vectors;
  std::string meta;
  std::size_t dim = 0;
  std::size_t count = 0;
  {
    auto lock = read_lock();
    dim = dim_;
    count = meta_.size();
    vectors.reserve(data_.size() * sizeof(double));
    for (const double d : data_) put_le(vectors, std::bit_cast<std::uint64_t>(d));
    for (const auto& m : meta_) {
      nlohmann::json line = {{"chunk_id", m.chunk_id},
                             {"source_label", m.source_label},
                             {"category", m.category},
                             {"text", m.text}};
      meta += line.dump();
      meta += '\n';
    }
  }

  std::string header;
  header.append(kMagic.data(), kMagic.size());
  put_le(header, kFormatVersion);
  put_le(header, static_cast<std::uint32_t>(dim));
  put_le(header, static_cast<std::uint64_t>(count));
  put_le(header, checksum(vectors, meta));

  write_file_atomic(sidecar_path(path), meta);
  write_file_atomic(path, header + vectors);
}

std::unique_ptr<FlatIndex> FlatIndex::load(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < kHeaderSize) corrupt(path, "truncated header");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) corrupt(path, "bad magic");
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::VersionUnsupported,
                path.string() + ": format version " + std::to_string(version));
  }
  const auto dim = get_le<std::uint32_t>(bytes, 12);
  const auto count = get_le<std::uint64_t>(bytes, 16);
  const auto stored_sum = get_le<std::uint64_t>(bytes, 24);
  if (count > 0 && dim == 0) corrupt(path, "zero dimension with entries");
  if (bytes.size() - kHeaderSize != count * dim * sizeof(double)) corrupt(path, "vector table size mismatch");

  const auto sidecar = sidecar_path(path);
  std::string meta;
  try {
    meta = read_file(sidecar);
  } catch (const Error&) {
    corrupt(path, "missing sidecar " + sidecar.string());
  }
  const std::string_view vectors(bytes.data() + kHeaderSize, bytes.size() - kHeaderSize);
  if (checksum(vectors, meta) != stored_sum) corrupt(path, "checksum mismatch");

  auto index = std::make_unique<FlatIndex>(dim);
  index->data_.resize(count * dim);
  for (std::size_t i = 0; i < index->data_.size(); ++i) {
    index->data_[i] = std::bit_cast<double>(get_le<std::uint64_t>(vectors, i * sizeof(double)));
  }
  std::istringstream lines(meta);
  std::string line;
  try {
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      Meta m{j.at("chunk_id").get<std::string>(), j.at("source_label").get<std::string>(),
             j.at("category").get<Category>(), j.at("text").get<std::string>()};
      if (!index->rows_.emplace(m.chunk_id, index->meta_.size()).second) {
        corrupt(path, "duplicate chunk_id " + m.chunk_id);
      }
      index->meta_.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    corrupt(path, std::string("malformed sidecar: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptIndex) throw;
    corrupt(path, std::string("malformed sidecar: ") + e.what());
  }
  if (index->meta_.size() != count) corrupt(path, "sidecar entry count mismatch");
  return index;
}

}  // namespace idas
