#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace framelogic::text {

/// Scores below this are reported as no match.
inline constexpr double kFuzzyThreshold = 0.5;

/// ASCII lower-casing; other bytes pass through unchanged.
std::string lower(std::string_view s);

/// Trim, lower-case and collapse internal whitespace runs to a single space.
std::string normalize(std::string_view s);

std::vector<std::string> tokenize(std::string_view s);

/// Case-insensitive substring test (needle inside haystack).
bool contains_ci(std::string_view haystack, std::string_view needle);

/// Byte-level Levenshtein distance (unit insert/delete/substitute costs).
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - edits / max(|a|, |b|); 1 for two empty strings.
double similarity(std::string_view a, std::string_view b);

/// Match score of a query against a piece of text:
///   1.0 if the query is a case-insensitive substring of the text; otherwise
///   the best similarity() over token windows of the text whose length is
///   within one token of the query's, zeroed when below kFuzzyThreshold.
double match_score(std::string_view query, std::string_view text);

/// Detector query variants: the query itself, its naive plural (trailing
/// "s") and its head noun with leading modifiers dropped. Normalized,
/// deduplicated, in that order.
std::vector<std::string> query_variants(std::string_view query);

}  // namespace framelogic::text
