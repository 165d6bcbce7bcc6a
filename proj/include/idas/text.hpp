#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers and the shared token rule used by chunking, embedding and
// metrics: one CJK character is one token, one maximal run of other
// letters/digits is one token, everything else separates tokens.
namespace idas::text {

struct CodePoint {
  char32_t value;
  std::size_t length;  // bytes consumed; invalid bytes decode as U+FFFD, length 1
};

CodePoint decode_at(std::string_view text, std::size_t pos) noexcept;
void append_utf8(std::string& out, char32_t cp);
bool is_valid_utf8(std::string_view text) noexcept;

bool is_cjk(char32_t cp) noexcept;
bool is_word_char(char32_t cp) noexcept;
char32_t fold_case(char32_t cp) noexcept;

struct TokenSpan {
  std::size_t begin;  // byte offsets into the source text
  std::size_t end;
};

std::vector<TokenSpan> token_spans(std::string_view text);

/// Token strings, case-folded.
std::vector<std::string> folded_tokens(std::string_view text);

std::string fold_case(std::string_view text);
std::string_view trim(std::string_view text) noexcept;

/// FNV-1a, 64 bit. Stable across platforms; used for ids and feature hashing.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t value);

}  // namespace idas::text
