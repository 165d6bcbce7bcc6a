#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "idas/error.hpp"

namespace idas {

template <typename Scalar>
using Embedding = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Unit L2 norm, or exactly all-zero for texts without features.
using EmbeddingVector = Embedding<double>;

/// Cosine similarity in [-1, 1]; 0 when either side is all-zero.
/// Symmetric bit-for-bit: cosine(a, b) == cosine(b, a).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a,
                                 const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with dims " +
                                                  std::to_string(a.size()) + " and " +
                                                  std::to_string(b.size()));
  }
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  const Scalar c = a.dot(b) / (na * nb);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

/// Normalizes in place; leaves an all-zero vector untouched.
template <typename Derived>
void normalize_or_zero(Eigen::MatrixBase<Derived>& v) {
  const auto n = v.norm();
  if (n > 0) v /= n;
}

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

/// Signed feature hashing over case-folded unigrams and bigrams of the corpus
/// token rule. Feature keys are "1\x1f<tok>" and "2\x1f<a>\x1f<b>"; with
/// h = FNV-1a-64(key) the bucket is h % dim and the sign is -1 iff bit 63 of h
/// is set. The accumulated vector is L2-normalized.
EmbeddingVector hashed_embed(std::string_view text, std::size_t dim);

enum class EmbedderKind { Remote, Hashed };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::Hashed;
  std::size_t dim = kDefaultEmbeddingDim;
  std::string endpoint_url;  // full URL of the embeddings route
  std::string model_name;
  std::string api_key_env;   // name of the env var holding the bearer token
  std::chrono::milliseconds timeout{30'000};
  std::size_t max_batch = 64;
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{200};

  /// Throws Error(InvalidConfig) unless dim >= 8 and max_batch >= 1.
  void validate() const;
};

/// One normalized vector per input, in input order. Remote requests are
/// batched by max_batch; a response with the wrong width raises
/// DimensionMismatch, transport failures after retries RemoteUnavailable.
std::vector<EmbeddingVector> embed(const EmbedderSpec& spec, std::span<const std::string> texts);

}  // namespace idas
