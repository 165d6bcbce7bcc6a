#include "idas/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>

#include "idas/error.hpp"
#include "idas/text.hpp"

namespace idas {

namespace fs = std::filesystem;

std::string_view to_string(Category category) noexcept {
  switch (category) {
    case Category::LegalProvision: return "LegalProvision";
    case Category::RailwayRegulation: return "RailwayRegulation";
    case Category::RailwayExpertise: return "RailwayExpertise";
    case Category::Other: return "Other";
  }
  return "Other";
}

std::string_view display_name(Category category) noexcept {
  switch (category) {
    case Category::LegalProvision: return "Legal Provision";
    case Category::RailwayRegulation: return "Railway Regulation";
    case Category::RailwayExpertise: return "Railway Expertise";
    case Category::Other: return "Other";
  }
  return "Other";
}

Category parse_category(std::string_view name) {
  for (const auto category : kAllCategories) {
    if (name == to_string(category) || name == display_name(category)) return category;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown category '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, Category category) { j = std::string(to_string(category)); }

void from_json(const nlohmann::json& j, Category& category) {
  category = parse_category(j.get<std::string>());
}

void to_json(nlohmann::json& j, const Chunk& chunk) {
  j = nlohmann::json{{"id", chunk.id},
                     {"document_id", chunk.document_id},
                     {"source_label", chunk.source_label},
                     {"category", chunk.category},
                     {"ordinal", chunk.ordinal},
                     {"text", chunk.text},
                     {"token_count", chunk.token_count}};
}

void from_json(const nlohmann::json& j, Chunk& chunk) {
  j.at("id").get_to(chunk.id);
  j.at("document_id").get_to(chunk.document_id);
  j.at("source_label").get_to(chunk.source_label);
  j.at("category").get_to(chunk.category);
  j.at("ordinal").get_to(chunk.ordinal);
  j.at("text").get_to(chunk.text);
  j.at("token_count").get_to(chunk.token_count);
}

std::vector<std::string> default_boundary_patterns() {
  return {
      // 第三章 / 第十二条 / 第2节 ...
      R"(^\s*第(?:[0-9]|一|二|三|四|五|六|七|八|九|十|百|千|零|〇)+(?:章|节|条|篇|部分))",
      R"(^\s*(?:Chapter|CHAPTER|Article|ARTICLE|Section|SECTION)\s+[0-9IVXLC]+\b)",
      R"(^\s*#{1,6}\s+\S)",
      R"(^\s*[0-9]+(?:\.[0-9]+)+\s+\S)",
      R"(^[A-Z][A-Z0-9 ,:&/()\-]{3,}$)",
  };
}

void ChunkPolicy::validate() const {
  if (chunk_size < 1) throw Error(ErrorCode::InvalidArgument, "chunk_size must be >= 1");
  if (overlap >= chunk_size) {
    throw Error(ErrorCode::InvalidArgument, "overlap must be smaller than chunk_size");
  }
}

std::size_t count_tokens(std::string_view text) { return text::token_spans(text).size(); }

std::string document_id_for(std::string_view source_path) {
  return "doc-" + text::hex64(text::fnv1a64(source_path));
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "manifest " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::InvalidConfig, "manifest must be a JSON object of path -> category");
  }
  Manifest manifest;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) {
      throw Error(ErrorCode::InvalidConfig, "manifest entry '" + key + "' is not a string");
    }
    manifest.emplace(key, parse_category(value.get<std::string>()));
  }
  return manifest;
}

namespace {

bool is_text_file(const fs::path& path) {
  const auto ext = path.extension().string();
  const auto name = path.filename().string();
  return !name.empty() && name.front() != '.' && (ext == ".txt" || ext == ".md");
}

std::string title_of(std::string_view body, const fs::path& path) {
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto end = body.find('\n', pos);
    if (end == std::string_view::npos) end = body.size();
    const auto line = text::trim(body.substr(pos, end - pos));
    if (!line.empty()) return std::string(line);
    pos = end + 1;
  }
  return path.stem().string();
}

std::string chunk_id_for(const std::string& document_id, std::size_t ordinal) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", ordinal);
  return document_id + "-" + buf;
}

Chunk make_chunk(const Document& doc, const ChunkPolicy& policy, std::size_t ordinal,
                 std::string_view body) {
  Chunk chunk;
  chunk.id = chunk_id_for(doc.id, ordinal);
  chunk.document_id = doc.id;
  chunk.source_label = policy.source_label_prefix + doc.source_path;
  chunk.category = doc.category;
  chunk.ordinal = ordinal;
  chunk.text = std::string(body);
  chunk.token_count = count_tokens(body);
  return chunk;
}

std::vector<Chunk> chunk_fixed(const Document& doc, const ChunkPolicy& policy) {
  const std::string_view body = doc.text;
  const auto spans = text::token_spans(body);
  const std::size_t n = spans.size();
  const std::size_t stride = policy.chunk_size - policy.overlap;

  std::vector<Chunk> chunks;
  for (std::size_t start = 0, ordinal = 0; start < n; start += stride, ++ordinal) {
    const std::size_t stop = std::min(start + policy.chunk_size, n);
    // A chunk owns the separators that follow its last token; the first chunk
    // also owns any leading separators.
    const std::size_t begin = ordinal == 0 ? 0 : spans[start].begin;
    const std::size_t end = stop == n ? body.size() : spans[stop].begin;
    chunks.push_back(make_chunk(doc, policy, ordinal, body.substr(begin, end - begin)));
    if (stop == n) break;
  }
  return chunks;
}

std::vector<Chunk> chunk_structural(const Document& doc, const ChunkPolicy& policy) {
  std::vector<std::regex> patterns;
  patterns.reserve(policy.boundary_patterns.size());
  for (const auto& p : policy.boundary_patterns) {
    try {
      patterns.emplace_back(p, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::InvalidArgument, "bad boundary pattern '" + p + "': " + e.what());
    }
  }

  const std::string_view body = doc.text;
  std::vector<std::size_t> starts{0};
  for (std::size_t pos = 0; pos < body.size();) {
    auto nl = body.find('\n', pos);
    const std::size_t next = nl == std::string_view::npos ? body.size() : nl + 1;
    auto line = body.substr(pos, (nl == std::string_view::npos ? body.size() : nl) - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string owned(line);
    const bool boundary = std::any_of(patterns.begin(), patterns.end(), [&](const std::regex& re) {
      return std::regex_search(owned, re);
    });
    if (boundary && pos != 0) starts.push_back(pos);
    pos = next;
  }
  starts.push_back(body.size());

  // Segments without tokens are folded into the following segment (or the
  // previous one at the end) so that no chunk is empty and nothing is lost.
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::size_t pending = 0;
  for (std::size_t i = 0; i + 1 < starts.size(); ++i) {
    const std::size_t end = starts[i + 1];
    if (count_tokens(body.substr(pending, end - pending)) == 0) continue;
    segments.emplace_back(pending, end);
    pending = end;
  }
  if (segments.empty()) return {};
  segments.back().second = body.size();

  std::vector<Chunk> chunks;
  chunks.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto [begin, end] = segments[i];
    chunks.push_back(make_chunk(doc, policy, i, body.substr(begin, end - begin)));
  }
  return chunks;
}

}  // namespace

CorpusLoad load_corpus(const fs::path& root_dir, const std::optional<Manifest>& manifest) {
  std::error_code ec;
  if (!fs::is_directory(root_dir, ec)) {
    throw Error(ErrorCode::Io, "corpus root is not a directory: " + root_dir.string());
  }

  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root_dir, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (it->is_regular_file(ec) && is_text_file(it->path())) files.push_back(it->path());
  }
  if (ec) throw Error(ErrorCode::Io, "cannot walk " + root_dir.string() + ": " + ec.message());

  CorpusLoad result;
  for (const auto& file : files) {
    const std::string rel = fs::relative(file, root_dir).generic_string();
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buf;
    if (!in || !(buf << in.rdbuf())) {
      result.errors.push_back({rel, "unreadable file"});
      continue;
    }
    std::string body = std::move(buf).str();
    if (!text::is_valid_utf8(body)) {
      result.errors.push_back({rel, "not valid UTF-8: " + rel});
      continue;
    }
    if (body.starts_with("\xEF\xBB\xBF")) body.erase(0, 3);

    Document doc;
    doc.id = document_id_for(rel);
    doc.source_path = rel;
    if (manifest) {
      if (auto found = manifest->find(rel); found != manifest->end()) doc.category = found->second;
    }
    doc.title = title_of(body, file);
    doc.token_count = count_tokens(body);
    doc.text = std::move(body);
    result.documents.push_back(std::move(doc));
  }
  std::sort(result.documents.begin(), result.documents.end(),
            [](const Document& a, const Document& b) { return a.source_path < b.source_path; });
  std::sort(result.errors.begin(), result.errors.end(),
            [](const LoadError& a, const LoadError& b) { return a.path < b.path; });
  return result;
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkPolicy& policy) {
  policy.validate();
  if (doc.text.empty()) return {};
  return policy.mode == ChunkMode::FixedTokens ? chunk_fixed(doc, policy)
                                               : chunk_structural(doc, policy);
}

std::vector<Chunk> chunk_corpus(std::span<const Document> docs, const ChunkPolicy& policy) {
  std::vector<Chunk> all;
  for (const auto& doc : docs) {
    auto chunks = chunk_document(doc, policy);
    std::move(chunks.begin(), chunks.end(), std::back_inserter(all));
  }
  return all;
}

std::string reconstruct_text(std::span<const Chunk> chunks, std::size_t overlap) {
  std::string out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const std::string_view body = chunks[i].text;
    if (i == 0 || overlap == 0) {
      out += body;
      continue;
    }
    const auto spans = text::token_spans(body);
    if (spans.size() <= overlap) continue;  // fully overlapped tail
    out += body.substr(spans[overlap].begin);
  }
  return out;
}

void write_chunks_jsonl(std::ostream& out, std::span<const Chunk> chunks) {
  for (const auto& chunk : chunks) out << nlohmann::json(chunk).dump() << '\n';
}

std::vector<Chunk> read_chunks_jsonl(std::istream& in) {
  std::vector<Chunk> chunks;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    chunks.push_back(nlohmann::json::parse(line).get<Chunk>());
  }
  return chunks;
}

}  // namespace idas
