#include "idas/app_config.hpp"

#include <fstream>
#include <system_error>

#include "idas/error.hpp"

namespace idas {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, "config key '" + key + "': " + why);
}

template <typename T>
T get_or(const json& obj, const std::string& section, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(section + "." + key, "wrong type");
  }
}

const json& section_of(const json& root, const char* name) {
  static const json kEmpty = json::object();
  if (!root.contains(name)) return kEmpty;
  const auto& s = root.at(name);
  if (!s.is_object()) bad(name, "must be an object");
  return s;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

ChunkPolicy parse_chunking(const json& s, const std::string& name, ChunkPolicy policy) {
  if (s.contains("mode")) {
    const auto mode = get_or<std::string>(s, name, "mode", "");
    if (mode == "fixed_tokens") policy.mode = ChunkMode::FixedTokens;
    else if (mode == "structural") policy.mode = ChunkMode::Structural;
    else bad(name + ".mode", "expected \"fixed_tokens\" or \"structural\"");
  }
  policy.chunk_size = get_or(s, name, "chunk_size", policy.chunk_size);
  policy.overlap = get_or(s, name, "overlap", policy.overlap);
  policy.boundary_patterns = get_or(s, name, "boundary_patterns", policy.boundary_patterns);
  policy.source_label_prefix = get_or(s, name, "source_label_prefix", policy.source_label_prefix);
  try {
    policy.validate();
  } catch (const Error& e) {
    bad(name, e.what());
  }
  return policy;
}

std::chrono::milliseconds ms(const json& s, const std::string& name, const char* key,
                             std::chrono::milliseconds fallback) {
  return std::chrono::milliseconds(get_or<long long>(s, name, key, fallback.count()));
}

LogLevel parse_level(const std::string& level) {
  if (level == "error") return LogLevel::Error;
  if (level == "warn") return LogLevel::Warn;
  if (level == "info") return LogLevel::Info;
  if (level == "debug") return LogLevel::Debug;
  bad("log_level", "expected error, warn, info or debug");
}

std::string strip_url(const std::string& url) {
  auto out = url;
  if (auto q = out.find_first_of("?#"); q != std::string::npos) out.erase(q);
  const auto scheme = out.find("://");
  const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto at = out.find('@', host_start);
  const auto slash = out.find('/', host_start);
  if (at != std::string::npos && (slash == std::string::npos || at < slash)) {
    out.erase(host_start, at + 1 - host_start);
  }
  return out;
}

}  // namespace

std::string_view to_string(LogLevel level) noexcept {
  switch (level) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
  }
  return "info";
}

AppConfig parse_app_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  AppConfig cfg;

  const auto& corpus = section_of(j, "corpus");
  if (!corpus.contains("root")) bad("corpus.root", "required");
  cfg.corpus_root = resolve(base_dir, get_or<std::string>(corpus, "corpus", "root", ""));
  if (corpus.contains("manifest")) {
    cfg.manifest_path = resolve(base_dir, get_or<std::string>(corpus, "corpus", "manifest", ""));
  }

  cfg.chunking = parse_chunking(section_of(j, "chunking"), "chunking", ChunkPolicy{});

  const auto& emb = section_of(j, "embedder");
  const auto ekind = get_or<std::string>(emb, "embedder", "kind", "hashed");
  if (ekind == "hashed") cfg.embedder.kind = EmbedderKind::Hashed;
  else if (ekind == "remote") cfg.embedder.kind = EmbedderKind::Remote;
  else bad("embedder.kind", "expected \"hashed\" or \"remote\"");
  cfg.embedder.dim = get_or(emb, "embedder", "dim", cfg.embedder.dim);
  cfg.embedder.endpoint_url = get_or(emb, "embedder", "endpoint_url", std::string());
  cfg.embedder.model_name = get_or(emb, "embedder", "model_name", std::string());
  cfg.embedder.api_key_env = get_or(emb, "embedder", "api_key_env", std::string());
  cfg.embedder.timeout = ms(emb, "embedder", "timeout_ms", cfg.embedder.timeout);
  cfg.embedder.max_batch = get_or(emb, "embedder", "max_batch", cfg.embedder.max_batch);
  cfg.embedder.max_retries = get_or(emb, "embedder", "max_retries", cfg.embedder.max_retries);
  cfg.embedder.retry_backoff = ms(emb, "embedder", "retry_backoff_ms", cfg.embedder.retry_backoff);

  const auto& be = section_of(j, "backend");
  const auto bkind = get_or<std::string>(be, "backend", "kind", "scripted");
  if (bkind == "scripted") cfg.backend.kind = BackendKind::Scripted;
  else if (bkind == "remote") cfg.backend.kind = BackendKind::Remote;
  else bad("backend.kind", "expected \"scripted\" or \"remote\"");
  cfg.backend.endpoint_url = get_or(be, "backend", "endpoint_url", std::string());
  cfg.backend.model_name = get_or(be, "backend", "model_name", std::string());
  cfg.backend.api_key_env = get_or(be, "backend", "api_key_env", std::string());
  cfg.backend.timeout = ms(be, "backend", "timeout_ms", cfg.backend.timeout);
  cfg.backend.max_retries = get_or(be, "backend", "max_retries", cfg.backend.max_retries);
  cfg.backend.retry_backoff = ms(be, "backend", "retry_backoff_ms", cfg.backend.retry_backoff);
  if (be.contains("script") && be.contains("script_path")) {
    bad("backend", "give either script or script_path, not both");
  }
  try {
    if (be.contains("script")) cfg.backend.script = parse_script(be.at("script"));
    if (be.contains("script_path")) {
      cfg.backend.script =
          load_script(resolve(base_dir, get_or<std::string>(be, "backend", "script_path", "")));
    }
  } catch (const Error& e) {
    bad("backend.script", e.what());
  }

  const auto& en = section_of(j, "engine");
  cfg.engine.top_k = get_or(en, "engine", "top_k", cfg.engine.top_k);
  cfg.engine.score_threshold = get_or(en, "engine", "score_threshold", cfg.engine.score_threshold);
  cfg.engine.draft_template = get_or(en, "engine", "draft_template", cfg.engine.draft_template);
  cfg.engine.refine_template = get_or(en, "engine", "refine_template", cfg.engine.refine_template);
  cfg.engine.citation_prefix = get_or(en, "engine", "citation_prefix", cfg.engine.citation_prefix);
  cfg.engine.system_prompt = get_or(en, "engine", "system_prompt", cfg.engine.system_prompt);
  cfg.engine.max_tokens = get_or(en, "engine", "max_tokens", cfg.engine.max_tokens);

  if (!j.contains("templates_dir")) bad("templates_dir", "required");
  cfg.templates_dir = resolve(base_dir, get_or<std::string>(j, "", "templates_dir", ""));
  if (!j.contains("index_path")) bad("index_path", "required");
  cfg.index_path = resolve(base_dir, get_or<std::string>(j, "", "index_path", ""));

  const auto& listen = section_of(j, "listen");
  cfg.host = get_or(listen, "listen", "host", cfg.host);
  cfg.port = get_or(listen, "listen", "port", cfg.port);
  if (cfg.port < 0 || cfg.port > 65535) bad("listen.port", "out of range");
  cfg.log_level = parse_level(get_or<std::string>(j, "", "log_level", "info"));

  const auto& fo = section_of(j, "forge");
  if (fo.contains("chunking")) {
    if (!fo.at("chunking").is_object()) bad("forge.chunking", "must be an object");
    cfg.forge.policy = parse_chunking(fo.at("chunking"), "forge.chunking", cfg.forge.policy);
  }
  cfg.forge.policy.source_label_prefix = cfg.chunking.source_label_prefix;
  cfg.forge.max_questions = get_or(fo, "forge", "max_questions", cfg.forge.max_questions);
  cfg.forge.question_template = get_or(fo, "forge", "question_template", cfg.forge.question_template);
  cfg.forge.answer_template = get_or(fo, "forge", "answer_template", cfg.forge.answer_template);
  cfg.forge.exam_answer_template =
      get_or(fo, "forge", "exam_answer_template", cfg.forge.exam_answer_template);
  cfg.forge.question_temperature =
      get_or(fo, "forge", "question_temperature", cfg.forge.question_temperature);
  cfg.forge.answer_temperature = get_or(fo, "forge", "answer_temperature", cfg.forge.answer_temperature);
  cfg.forge.max_tokens = get_or(fo, "forge", "max_tokens", cfg.forge.max_tokens);
  cfg.forge.parallelism = get_or(fo, "forge", "parallelism", cfg.forge.parallelism);
  cfg.forge.filter.duplicate_threshold =
      get_or(fo, "forge", "duplicate_threshold", cfg.forge.filter.duplicate_threshold);
  cfg.forge.filter.min_question_tokens =
      get_or(fo, "forge", "min_question_tokens", cfg.forge.filter.min_question_tokens);
  cfg.forge.filter.min_answer_tokens =
      get_or(fo, "forge", "min_answer_tokens", cfg.forge.filter.min_answer_tokens);
  if (fo.contains("few_shot_path")) {
    cfg.few_shot_path = resolve(base_dir, get_or<std::string>(fo, "forge", "few_shot_path", ""));
    try {
      cfg.forge.few_shot = load_few_shot(*cfg.few_shot_path);
    } catch (const Error& e) {
      bad("forge.few_shot_path", e.what());
    }
  }

  const auto& ev = section_of(j, "eval");
  cfg.eval_parallelism = get_or(ev, "eval", "parallelism", cfg.eval_parallelism);

  try {
    cfg.embedder.validate();
    cfg.backend.validate();
    cfg.engine.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  if (cfg.forge.max_questions < 1) bad("forge.max_questions", "must be >= 1");
  if (cfg.forge.parallelism < 1) bad("forge.parallelism", "must be >= 1");
  if (cfg.eval_parallelism < 1) bad("eval.parallelism", "must be >= 1");
  return cfg;
}

AppConfig load_app_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_app_config(j, base);
}

void validate_app_config(const AppConfig& cfg, const TemplateStore& templates) {
  for (const auto& name : {cfg.engine.draft_template, cfg.engine.refine_template,
                           cfg.forge.question_template, cfg.forge.answer_template,
                           cfg.forge.exam_answer_template}) {
    if (!templates.contains(name)) {
      throw Error(ErrorCode::InvalidConfig,
                  "template '" + name + "' not found in " + cfg.templates_dir.string());
    }
  }
  std::error_code ec;
  if (!fs::is_directory(cfg.corpus_root, ec)) {
    throw Error(ErrorCode::InvalidConfig, "corpus.root is not a directory: " + cfg.corpus_root.string());
  }
  if (cfg.manifest_path && !fs::is_regular_file(*cfg.manifest_path, ec)) {
    throw Error(ErrorCode::InvalidConfig, "corpus.manifest not found: " + cfg.manifest_path->string());
  }
  if (cfg.few_shot_path && !fs::is_regular_file(*cfg.few_shot_path, ec)) {
    throw Error(ErrorCode::InvalidConfig, "forge.few_shot_path not found: " + cfg.few_shot_path->string());
  }
  auto dir = cfg.index_path.parent_path();
  if (dir.empty()) dir = ".";
  fs::create_directories(dir, ec);
  const auto probe = dir / ".idas-write-probe";
  {
    std::ofstream out(probe);
    if (!out) throw Error(ErrorCode::InvalidConfig, "index directory not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

json redacted_config(const AppConfig& cfg) {
  const auto key_state = [](const std::string& env) {
    json k{{"api_key_env", env}};
    k["api_key_set"] = !env.empty() && std::getenv(env.c_str()) != nullptr;
    return k;
  };
  json embedder{{"kind", cfg.embedder.kind == EmbedderKind::Hashed ? "hashed" : "remote"},
                {"dim", cfg.embedder.dim}};
  if (cfg.embedder.kind == EmbedderKind::Remote) {
    embedder["endpoint_url"] = strip_url(cfg.embedder.endpoint_url);
    embedder["model_name"] = cfg.embedder.model_name;
    embedder.update(key_state(cfg.embedder.api_key_env));
  }
  json backend{{"kind", to_string(cfg.backend.kind)}};
  if (cfg.backend.kind == BackendKind::Remote) {
    backend["endpoint_url"] = strip_url(cfg.backend.endpoint_url);
    backend["model_name"] = cfg.backend.model_name;
    backend.update(key_state(cfg.backend.api_key_env));
  } else {
    backend["script_rules"] = cfg.backend.script.rules.size();
  }
  return json{
      {"chunking",
       {{"mode", cfg.chunking.mode == ChunkMode::FixedTokens ? "fixed_tokens" : "structural"},
        {"chunk_size", cfg.chunking.chunk_size},
        {"overlap", cfg.chunking.overlap},
        {"source_label_prefix", cfg.chunking.source_label_prefix}}},
      {"embedder", embedder},
      {"backend", backend},
      {"engine",
       {{"top_k", cfg.engine.top_k},
        {"score_threshold", cfg.engine.score_threshold},
        {"draft_template", cfg.engine.draft_template},
        {"refine_template", cfg.engine.refine_template},
        {"citation_prefix", cfg.engine.citation_prefix}}},
      {"listen", {{"host", cfg.host}, {"port", cfg.port}}},
      {"log_level", to_string(cfg.log_level)},
  };
}

CorpusLoad load_configured_corpus(const AppConfig& cfg) {
  std::optional<Manifest> manifest;
  if (cfg.manifest_path) manifest = load_manifest(*cfg.manifest_path);
  return load_corpus(cfg.corpus_root, manifest);
}

IngestOutput ingest_corpus(const AppConfig& cfg) {
  auto corpus = load_configured_corpus(cfg);
  IngestOutput out;
  out.summary.documents = corpus.documents.size();
  out.summary.errors = std::move(corpus.errors);
  out.chunks = chunk_corpus(corpus.documents, cfg.chunking);
  if (out.chunks.empty()) {
    throw Error(ErrorCode::NoDocuments, "no documents to index under " + cfg.corpus_root.string());
  }
  out.summary.chunks = out.chunks.size();
  for (const auto& c : out.chunks) ++out.summary.chunks_per_category[c.category];
  out.index = build_index(out.chunks, cfg.embedder);
  return out;
}

std::shared_ptr<const FlatIndex> open_index(const AppConfig& cfg) {
  std::error_code ec;
  if (fs::exists(cfg.index_path, ec)) return FlatIndex::load(cfg.index_path);
  return ingest_corpus(cfg).index;
}

std::shared_ptr<const TemplateStore> load_templates(const AppConfig& cfg) {
  return std::make_shared<const TemplateStore>(TemplateStore::load_dir(cfg.templates_dir));
}

}  // namespace idas
