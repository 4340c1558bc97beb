#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace refineloop {

/// Splits on runs of ASCII whitespace. Engine "tokens" are these pieces.
std::vector<std::string> tokenize_ws(std::string_view text);

std::size_t count_ws_tokens(std::string_view text);

/// Cuts `text` right after its `budget`-th whitespace token, keeping the
/// original separators of the retained prefix. Returns `text` unchanged when
/// it has at most `budget` tokens.
std::string truncate_ws_tokens(std::string_view text, std::size_t budget);

/// BM25 tokenizer: lowercase, split on non-alphanumeric, no stemming.
std::vector<std::string> tokenize_alnum(std::string_view text);

/// QA answer normalization: lowercase, strip punctuation characters, drop the
/// articles {a, an, the} as whole words, collapse whitespace, trim.
std::string normalize_answer(std::string_view text);

/// Whitespace tokens of normalize_answer(text).
std::vector<std::string> normalized_words(std::string_view text);

std::string to_lower_ascii(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with(std::string_view text, std::string_view prefix);

/// Deterministic 64-bit mix for deriving sub-seeds (splitmix64 step).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace refineloop
