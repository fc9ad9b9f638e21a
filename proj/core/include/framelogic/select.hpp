#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "framelogic/compose.hpp"

namespace framelogic {

/// Peak-and-spread parameters. Defaults derive from the budget K:
/// peaks = window = min_distance = floor(sqrt K), neighbors = floor(sqrt(K) / 2).
struct PassParams {
  std::size_t budget = 16;
  std::size_t peaks = 4;
  std::size_t neighbors = 2;
  std::size_t window = 4;
  std::size_t min_distance = 4;

  static PassParams for_budget(std::size_t budget);
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

enum class SelectionPhase { Peak, Neighbor, Fill };

std::string_view to_string(SelectionPhase phase);

struct SelectedFrame {
  std::size_t frame = 0;
  SelectionPhase phase = SelectionPhase::Fill;

  friend bool operator==(const SelectedFrame&, const SelectedFrame&) = default;
};

struct SelectionResult {
  /// Ascending by frame; min(K, T) distinct entries.
  std::vector<SelectedFrame> frames;
  /// Leaf scores at the selected frames (columns follow `frames`).
  AttributionMatrix attribution;

  std::vector<std::size_t> indices() const;
};

/// Integer square root (floor).
std::size_t isqrt(std::size_t n);

/// Strict interior local maxima, visited by descending score (ties: lower
/// frame first), kept when at least `min_distance` away from every kept
/// peak; at most `max_peaks` are returned, in selection order.
std::vector<std::size_t> find_peaks(std::span<const double> curve, std::size_t max_peaks,
                                    std::size_t min_distance);

SelectionResult pass_select(const SatisfactionCurve& curve, const AttributionMatrix& attribution,
                            const PassParams& params);

/// K highest-scoring frames (ties: lower frame first), all labelled Fill.
SelectionResult topk_select(const SatisfactionCurve& curve, std::size_t budget,
                            const AttributionMatrix* attribution = nullptr);

/// Evenly spaced frames round(i (T-1) / (K-1)); K = 1 picks the centre frame.
SelectionResult uniform_select(std::size_t frame_count, std::size_t budget,
                               const AttributionMatrix* attribution = nullptr);

}  // namespace framelogic
