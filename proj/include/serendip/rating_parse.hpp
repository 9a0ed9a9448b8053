#pragma once

#include <optional>
#include <string_view>

namespace serendip::prompting {

/// Extracts the first standalone digit in 1..5 from an LLM reply, tolerating
/// surrounding whitespace and punctuation ("Rating: 5." -> 5). Digits glued
/// to other alphanumerics ("10", "x3") do not count. Empty result means the
/// reply carries no parseable rating.
std::optional<int> parse_rating(std::string_view reply);

}  // namespace serendip::prompting
