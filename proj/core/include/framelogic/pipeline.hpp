#pragma once

#include <optional>
#include <string_view>

#include "framelogic/compose.hpp"
#include "framelogic/experts.hpp"
#include "framelogic/select.hpp"
#include "framelogic/signal.hpp"
#include "framelogic/tree.hpp"

namespace framelogic {

struct PassOverrides {
  std::optional<std::size_t> peaks;
  std::optional<std::size_t> neighbors;
  std::optional<std::size_t> window;
  std::optional<std::size_t> min_distance;
};

/// Every tunable of one query evaluation.
struct EngineConfig {
  NormalizationParams normalization;
  SmoothingParams smoothing;
  ComposeParams compose;
  std::size_t budget = 16;
  PassOverrides pass_overrides;
  LeafScoringOptions scoring;

  PassParams pass_params() const;
  void validate() const;
};

struct ProcessedLeaves {
  LeafSignals raw;
  LeafSignals normalized;
  LeafSignals smoothed;
};

/// Joint per-expert normalization (statistics over the distinct queries of
/// each expert group) followed by per-expert smoothing.
ProcessedLeaves process_leaves(const LogicTree& tree, LeafSignals raw, const EngineConfig& config);

struct QueryResult {
  ProcessedLeaves leaves;
  Evaluation evaluation;
  SelectionResult selection;
};

/// Leaves -> normalize -> smooth -> compose -> PASS.
QueryResult run_query(const LogicTree& tree, const ExpertBundle& bundle, const OvdSource* ovd,
                      const EngineConfig& config, ProviderCounters& counters);

enum class SelectorKind { Uniform, TopK, Pass };

std::string_view to_string(SelectorKind kind);
std::optional<SelectorKind> parse_selector(std::string_view name);

/// Applies a selector to an evaluated curve with budget K.
SelectionResult select_frames(SelectorKind kind, const Evaluation& evaluation, std::size_t budget,
                              const EngineConfig& config);

}  // namespace framelogic
