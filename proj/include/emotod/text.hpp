#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules. ASCII case folding only.
namespace emotod::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

/// Trim and collapse every whitespace run to a single space.
std::string collapse_whitespace(std::string_view s);

/// Split on whitespace runs, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);

/// Split on an exact separator; keeps empty pieces.
std::vector<std::string> split(std::string_view s, std::string_view sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_icase(std::string_view s, std::size_t pos, std::string_view needle);

/// Lowercased whitespace tokens; the tokenization shared by all text metrics.
std::vector<std::string> metric_tokens(std::string_view s);

/// UTF-8 decode to code points. Invalid bytes decode to themselves.
std::u32string decode_utf8(std::string_view s);

/// 64-bit FNV-1a. Stable across platforms, used for replay keys and checksums.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t v);

}  // namespace emotod::text
