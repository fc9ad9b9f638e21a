#include "framelogic/pipeline.hpp"

#include <map>

#include "framelogic/text_match.hpp"

namespace framelogic {

PassParams EngineConfig::pass_params() const {
  auto params = PassParams::for_budget(budget);
  if (pass_overrides.peaks) params.peaks = *pass_overrides.peaks;
  if (pass_overrides.neighbors) params.neighbors = *pass_overrides.neighbors;
  if (pass_overrides.window) params.window = *pass_overrides.window;
  if (pass_overrides.min_distance) params.min_distance = *pass_overrides.min_distance;
  return params;
}

void EngineConfig::validate() const {
  normalization.validate();
  smoothing.validate();
  if (!(compose.kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  pass_params().validate();
}

ProcessedLeaves process_leaves(const LogicTree& tree, LeafSignals raw, const EngineConfig& config) {
  ProcessedLeaves out;
  for (const auto& [expert, ids] : leaves_by_expert(tree)) {
    std::map<std::string, std::size_t> slot_of_query;
    std::vector<Signal> distinct;
    std::vector<std::size_t> slot_of_leaf;
    for (auto id : ids) {
      auto it = raw.find(id);
      if (it == raw.end()) {
        throw ComposeError(ComposeError::Kind::MissingLeafSignal,
                           "no raw signal for leaf " + std::to_string(id.value));
      }
      const auto key = text::normalize(tree.leaf(id).query);
      auto [slot, inserted] = slot_of_query.emplace(key, distinct.size());
      if (inserted) distinct.push_back(it->second);
      slot_of_leaf.push_back(slot->second);
    }

    const auto normalized = normalize_joint(distinct, config.normalization);
    std::vector<Signal> smoothed;
    smoothed.reserve(normalized.size());
    for (const auto& n : normalized) smoothed.push_back(smooth(n, expert, config.smoothing));

    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto id = ids[i];
      const auto slot = slot_of_leaf[i];
      out.normalized.emplace(id, Signal{normalized[slot].values, SignalStage::Normalized, id});
      out.smoothed.emplace(id, Signal{smoothed[slot].values, SignalStage::Smoothed, id});
    }
  }
  out.raw = std::move(raw);
  return out;
}

QueryResult run_query(const LogicTree& tree, const ExpertBundle& bundle, const OvdSource* ovd,
                      const EngineConfig& config, ProviderCounters& counters) {
  config.validate();
  auto raw = evaluate_leaves(tree, bundle, ovd, counters, config.scoring);
  auto leaves = process_leaves(tree, std::move(raw), config);
  auto evaluation = evaluate(tree, leaves.smoothed, config.compose);
  auto selection = pass_select(evaluation.curve, evaluation.attribution, config.pass_params());
  return QueryResult{std::move(leaves), std::move(evaluation), std::move(selection)};
}

std::string_view to_string(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::Uniform: return "uniform";
    case SelectorKind::TopK: return "topk";
    case SelectorKind::Pass: return "pass";
  }
  return "pass";
}

std::optional<SelectorKind> parse_selector(std::string_view name) {
  if (name == "uniform") return SelectorKind::Uniform;
  if (name == "topk") return SelectorKind::TopK;
  if (name == "pass") return SelectorKind::Pass;
  return std::nullopt;
}

SelectionResult select_frames(SelectorKind kind, const Evaluation& evaluation, std::size_t budget,
                              const EngineConfig& config) {
  switch (kind) {
    case SelectorKind::Uniform:
      return uniform_select(evaluation.curve.size(), budget, &evaluation.attribution);
    case SelectorKind::TopK:
      return topk_select(evaluation.curve, budget, &evaluation.attribution);
    case SelectorKind::Pass: {
      auto cfg = config;
      cfg.budget = budget;
      return pass_select(evaluation.curve, evaluation.attribution, cfg.pass_params());
    }
  }
  return {};
}

}  // namespace framelogic
