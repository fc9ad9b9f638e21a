#include "framelogic/expert_kind.hpp"

#include <cctype>

namespace framelogic {

namespace {

constexpr std::array<std::string_view, kExpertCount> kNames = {"CLIP", "OVD", "OCR", "ASR",
                                                               "CLAP"};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(a[i])) !=
        std::toupper(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(ExpertKind kind) { return kNames[index_of(kind)]; }

std::optional<ExpertKind> parse_expert(std::string_view name) {
  for (auto kind : kAllExperts) {
    if (iequals(name, kNames[index_of(kind)])) return kind;
  }
  return std::nullopt;
}

std::optional<ExpertSet> ExpertSet::parse(std::string_view csv) {
  ExpertSet set;
  while (true) {
    auto comma = csv.find(',');
    auto item = trim(csv.substr(0, comma));
    if (!item.empty()) {
      auto kind = parse_expert(item);
      if (!kind) return std::nullopt;
      set.insert(*kind);
    }
    if (comma == std::string_view::npos) break;
    csv.remove_prefix(comma + 1);
  }
  return set;
}

std::string ExpertSet::to_string() const {
  std::string out;
  for (auto kind : kAllExperts) {
    if (!contains(kind)) continue;
    if (!out.empty()) out += ',';
    out += framelogic::to_string(kind);
  }
  return out;
}

}  // namespace framelogic
