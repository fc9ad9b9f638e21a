#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "framelogic/experts.hpp"
#include "framelogic/pipeline.hpp"
#include "framelogic/tree.hpp"

namespace framelogic::bench {

inline constexpr int kScriptFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

/// Inclusive frame interval.
struct FrameInterval {
  std::size_t first = 0;
  std::size_t last = 0;

  bool contains(std::size_t t) const { return t >= first && t <= last; }
  friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

struct ScriptEvent {
  ExpertKind expert = ExpertKind::Clip;
  std::string query;
  FrameInterval support;
  double amplitude = 1.0;
  /// Shift of the emitted signal relative to `support`; audio experts only.
  std::int64_t modality_offset = 0;
  /// Counted as ground truth when true; distractors are false.
  bool target = true;

  friend bool operator==(const ScriptEvent&, const ScriptEvent&) = default;
};

struct EventScript {
  std::string id;
  std::size_t frame_count = 0;
  double frame_rate = 1.0;
  double noise_level = 0.0;  // std-dev of additive Gaussian background noise
  double baseline = 0.0;     // background level of score-table rows
  std::uint64_t seed = 0;
  std::vector<ScriptEvent> events;
  /// Matched logic tree (JSON) for this script, if supplied.
  std::optional<std::string> tree;

  /// Throws BenchError(InvalidScript).
  void validate() const;

  friend bool operator==(const EventScript&, const EventScript&) = default;
};

struct GroundTruth {
  std::string script_id;
  std::vector<FrameInterval> events;
};

struct SyntheticVideo {
  ExpertBundle bundle;
  OvdSource ovd;
  GroundTruth truth;
};

class BenchError : public std::runtime_error {
 public:
  enum class Kind { InvalidScript, Format, Pipeline };

  BenchError(Kind kind, std::string script_id, const std::string& message)
      : std::runtime_error(script_id.empty() ? message : "script " + script_id + ": " + message),
        kind_(kind),
        script_id_(std::move(script_id)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& script_id() const noexcept { return script_id_; }

 private:
  Kind kind_;
  std::string script_id_;
};

/// Seeded noise source: std::mt19937_64 words, 53-bit uniforms in [0, 1),
/// Box-Muller (cosine branch only, one word pair per sample).
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}
  double uniform();
  double gaussian(double stddev);

 private:
  std::mt19937_64 engine_;
};

/// Deterministic bundle + detector source + ground truth for a script.
SyntheticVideo generate(const EventScript& script);

/// Tree used for a script: its own `tree` when present, otherwise the
/// distinct (expert, query) pairs of its target events (a leaf, or an OR).
LogicTree matched_tree(const EventScript& script, const ParseOptions& options = {});

struct TreeTemplate {
  std::string name;
  std::function<LogicTree(const EventScript&)> build;
};

TreeTemplate matched_template();

struct ScriptOutcome {
  std::string script_id;
  std::string tree_template;
  SelectorKind selector = SelectorKind::Pass;
  std::size_t budget = 0;
  std::size_t events_total = 0;
  std::size_t events_hit = 0;
  std::size_t frames_selected = 0;
  std::size_t frames_relevant = 0;

  friend bool operator==(const ScriptOutcome&, const ScriptOutcome&) = default;
};

struct RecallCell {
  std::string tree_template;
  SelectorKind selector = SelectorKind::Pass;
  std::size_t budget = 0;
  std::size_t scripts = 0;
  std::size_t events_total = 0;
  std::size_t events_hit = 0;
  /// events_hit / events_total (0 when there are no events).
  double recall = 0.0;
  /// Share of selected frames that fall inside a ground-truth support.
  double relevant_fraction = 0.0;

  friend bool operator==(const RecallCell&, const RecallCell&) = default;
};

struct RecallReport {
  std::vector<RecallCell> cells;
  /// Stable-sorted by script id; then template, selector, budget in input order.
  std::vector<ScriptOutcome> outcomes;

  const RecallCell* find(std::string_view tree_template, SelectorKind selector,
                         std::size_t budget) const;

  friend bool operator==(const RecallReport&, const RecallReport&) = default;
};

inline const std::vector<SelectorKind> kDefaultSelectors = {SelectorKind::Uniform,
                                                            SelectorKind::TopK, SelectorKind::Pass};
inline const std::vector<std::size_t> kDefaultBudgets = {8, 16, 32, 64};

/// Full pipeline per script x template x selector x budget.
RecallReport run_benchmark(const std::vector<EventScript>& scripts,
                           const std::vector<TreeTemplate>& templates,
                           const std::vector<SelectorKind>& selectors,
                           const std::vector<std::size_t>& budgets,
                           const EngineConfig& config = {});

/// Outcome of one selection against ground truth.
ScriptOutcome score_selection(const GroundTruth& truth, const SelectionResult& selection);

// --- formats ---------------------------------------------------------------

std::string script_to_json(const EventScript& script);
EventScript script_from_json(std::string_view document);
std::string suite_to_json(const std::vector<EventScript>& scripts);
/// Accepts a suite document {"format_version", "scripts": [...]} or a single script.
std::vector<EventScript> suite_from_json(std::string_view document);

std::string truth_to_json(const GroundTruth& truth);
std::string report_to_json(const RecallReport& report);
RecallReport report_from_json(std::string_view document);

/// Built-in suite of multimodal scripts: each has 1-3 target moments seen by
/// the detector and mentioned in speech (with a 0-2 frame lag), plus
/// weak detector decoys and unrelated CLIP activity.
std::vector<EventScript> demo_suite(std::size_t count = 50, std::uint64_t seed = 2024);

}  // namespace framelogic::bench
