#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace framelogic {

/// Per-frame scoring channel a leaf predicate is routed to.
enum class ExpertKind : std::uint8_t { Clip = 0, Ovd, Ocr, Asr, Clap };

inline constexpr std::size_t kExpertCount = 5;

inline constexpr std::array<ExpertKind, kExpertCount> kAllExperts = {
    ExpertKind::Clip, ExpertKind::Ovd, ExpertKind::Ocr, ExpertKind::Asr, ExpertKind::Clap};

constexpr std::size_t index_of(ExpertKind kind) { return static_cast<std::size_t>(kind); }

/// Upper-case wire name ("CLIP", "OVD", ...).
std::string_view to_string(ExpertKind kind);

/// Case-insensitive lookup of a wire name.
std::optional<ExpertKind> parse_expert(std::string_view name);

/// Experts whose artifacts do not depend on the query and can be cached per video.
constexpr bool is_query_independent(ExpertKind kind) { return kind != ExpertKind::Ovd; }

/// Small value-type set of experts.
class ExpertSet {
 public:
  constexpr ExpertSet() = default;

  static constexpr ExpertSet all() {
    ExpertSet s;
    s.bits_ = (1u << kExpertCount) - 1;
    return s;
  }

  constexpr ExpertSet& insert(ExpertKind kind) {
    bits_ |= 1u << index_of(kind);
    return *this;
  }
  constexpr bool contains(ExpertKind kind) const { return (bits_ >> index_of(kind)) & 1u; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const {
    std::size_t n = 0;
    for (auto k : kAllExperts) n += contains(k) ? 1 : 0;
    return n;
  }

  /// Parses a comma-separated list such as "CLIP,OVD,asr".
  static std::optional<ExpertSet> parse(std::string_view csv);
  std::string to_string() const;

  friend constexpr bool operator==(ExpertSet, ExpertSet) = default;

 private:
  std::uint32_t bits_ = 0;
};

/// Fixed-size table keyed by expert.
template <typename T>
struct ExpertMap {
  std::array<T, kExpertCount> values{};

  T& operator[](ExpertKind kind) { return values[index_of(kind)]; }
  const T& operator[](ExpertKind kind) const { return values[index_of(kind)]; }
};

}  // namespace framelogic
