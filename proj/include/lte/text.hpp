#pragma once

#include <string>
#include <string_view>
#include <vector>

// UTF-8 text helpers shared by the embedder, metrics and mock backend.
// All functions are locale-independent.
namespace lte::text {

/// Split on Unicode White_Space; empty tokens are dropped.
std::vector<std::string> split_whitespace(std::string_view s);

/// Per-code-point simple lowercase mapping.
std::string to_lower(std::string_view s);

/// Split into UTF-8 encoded code points (invalid bytes become U+FFFD).
std::vector<std::string> code_points(std::string_view s);

/// NFC, casefold, collapse whitespace runs to one space, strip
/// leading/trailing whitespace and punctuation.
std::string normalize_for_match(std::string_view s);

/// Replace CR/LF sequences by single spaces.
std::string flatten_newlines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

} // namespace lte::text
