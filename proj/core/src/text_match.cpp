#include "framelogic/text_match.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>

namespace framelogic::text {

namespace {

// Words that end the leading noun phrase ("man in suit" -> "man").
constexpr std::array<std::string_view, 12> kConnectors = {
    "in", "on", "with", "of", "at", "near", "under", "by", "from", "to", "and", "holding"};

bool is_connector(std::string_view word) {
  return std::find(kConnectors.begin(), kConnectors.end(), word) != kConnectors.end();
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (auto i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const auto start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) tokens.emplace_back(s.substr(start, i - start));
  }
  return tokens;
}

std::string normalize(std::string_view s) {
  auto tokens = tokenize(lower(s));
  return join(tokens, 0, tokens.size());
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  return lower(haystack).find(lower(needle)) != std::string::npos;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({above + 1, row[j - 1] + 1, diagonal + cost});
      diagonal = above;
    }
  }
  return row[b.size()];
}

double similarity(std::string_view a, std::string_view b) {
  const auto longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

double match_score(std::string_view query, std::string_view text) {
  const auto q = normalize(query);
  const auto t = normalize(text);
  if (q.empty() || t.empty()) return 0.0;
  if (t.find(q) != std::string::npos) return 1.0;

  const auto q_tokens = tokenize(q).size();
  const auto t_tokens = tokenize(t);
  const auto min_len = std::max<std::size_t>(1, q_tokens > 0 ? q_tokens - 1 : 1);
  const auto max_len = std::min(t_tokens.size(), q_tokens + 1);

  double best = 0.0;
  for (auto len = min_len; len <= max_len; ++len) {
    for (std::size_t start = 0; start + len <= t_tokens.size(); ++start) {
      best = std::max(best, similarity(q, join(t_tokens, start, start + len)));
    }
  }
  return best >= kFuzzyThreshold ? best : 0.0;
}

std::vector<std::string> query_variants(std::string_view query) {
  std::vector<std::string> variants;
  auto push = [&](std::string v) {
    if (!v.empty() && std::find(variants.begin(), variants.end(), v) == variants.end()) {
      variants.push_back(std::move(v));
    }
  };

  const auto base = normalize(query);
  push(base);
  push(base.empty() ? std::string{} : base + "s");

  const auto tokens = tokenize(base);
  std::size_t head_end = 0;
  while (head_end < tokens.size() && !is_connector(tokens[head_end])) ++head_end;
  if (head_end > 0) push(tokens[head_end - 1]);
  return variants;
}

}  // namespace framelogic::text
