#include "idas/embedding.hpp"

#include <cstdlib>
#include <map>

#include <nlohmann/json.hpp>

#include "idas/http.hpp"
#include "idas/text.hpp"

namespace idas {

namespace {

void add_feature(EmbeddingVector& v, std::string_view key) {
  const std::uint64_t h = text::fnv1a64(key);
  const auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(v.size()));
  v[bucket] += (h >> 63) ? -1.0 : 1.0;
}

std::vector<EmbeddingVector> embed_remote_batch(const EmbedderSpec& spec,
                                                std::span<const std::string> batch) {
  nlohmann::json request = {{"model", spec.model_name}, {"input", batch}};
  std::map<std::string, std::string> headers;
  if (!spec.api_key_env.empty()) {
    if (const char* key = std::getenv(spec.api_key_env.c_str())) {
      headers["Authorization"] = std::string("Bearer ") + key;
    }
  }
  const auto body = request.dump();
  const auto response = http::with_retries(spec.max_retries, spec.retry_backoff, [&] {
    return http::post_json(spec.endpoint_url, body, headers, spec.timeout);
  });
  if (response.status != 200) {
    throw Error(ErrorCode::RemoteUnavailable,
                "embedding endpoint returned " + std::to_string(response.status) + ": " +
                    response.body.substr(0, 200));
  }

  std::vector<EmbeddingVector> out(batch.size());
  std::vector<bool> seen(batch.size(), false);
  try {
    const auto doc = nlohmann::json::parse(response.body);
    const auto& data = doc.at("data");
    for (std::size_t pos = 0; pos < data.size(); ++pos) {
      const auto& item = data[pos];
      const std::size_t index = item.contains("index") ? item.at("index").get<std::size_t>() : pos;
      const auto values = item.at("embedding").get<std::vector<double>>();
      if (index >= batch.size()) {
        throw Error(ErrorCode::RemoteUnavailable, "embedding index out of range");
      }
      if (values.size() != spec.dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    "endpoint returned dim " + std::to_string(values.size()) + ", expected " +
                        std::to_string(spec.dim));
      }
      EmbeddingVector v = Eigen::Map<const EmbeddingVector>(values.data(),
                                                            static_cast<Eigen::Index>(values.size()));
      normalize_or_zero(v);
      out[index] = std::move(v);
      seen[index] = true;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::RemoteUnavailable, std::string("malformed embedding response: ") + e.what());
  }
  for (bool s : seen) {
    if (!s) throw Error(ErrorCode::RemoteUnavailable, "embedding response is missing inputs");
  }
  return out;
}

}  // namespace

EmbeddingVector hashed_embed(std::string_view body, std::size_t dim) {
  if (dim < 8) throw Error(ErrorCode::InvalidArgument, "embedding dim must be >= 8");
  EmbeddingVector v = EmbeddingVector::Zero(static_cast<Eigen::Index>(dim));
  const auto tokens = text::folded_tokens(body);
  std::string key;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    key = "1\x1f" + tokens[i];
    add_feature(v, key);
    if (i + 1 < tokens.size()) {
      key = "2\x1f" + tokens[i] + "\x1f" + tokens[i + 1];
      add_feature(v, key);
    }
  }
  normalize_or_zero(v);
  return v;
}

void EmbedderSpec::validate() const {
  if (dim < 8) throw Error(ErrorCode::InvalidConfig, "embedder dim must be >= 8");
  if (max_batch < 1) throw Error(ErrorCode::InvalidConfig, "embedder max_batch must be >= 1");
  if (kind == EmbedderKind::Remote && endpoint_url.empty()) {
    throw Error(ErrorCode::InvalidConfig, "remote embedder needs endpoint_url");
  }
}

std::vector<EmbeddingVector> embed(const EmbedderSpec& spec, std::span<const std::string> texts) {
  spec.validate();
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  if (spec.kind == EmbedderKind::Hashed) {
    for (const auto& t : texts) out.push_back(hashed_embed(t, spec.dim));
    return out;
  }
  for (std::size_t begin = 0; begin < texts.size(); begin += spec.max_batch) {
    const auto count = std::min(spec.max_batch, texts.size() - begin);
    auto batch = embed_remote_batch(spec, texts.subspan(begin, count));
    std::move(batch.begin(), batch.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace idas
