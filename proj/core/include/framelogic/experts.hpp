#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "framelogic/expert_kind.hpp"
#include "framelogic/signal.hpp"
#include "framelogic/tree.hpp"

namespace framelogic {

inline constexpr int kBundleFormatVersion = 1;

/// Where a bundle's artifacts came from.
enum class ProviderKind { FileBacked, Synthetic };

std::string_view to_string(ProviderKind kind);

struct ScoreRow {
  std::string query;
  std::vector<double> values;

  friend bool operator==(const ScoreRow&, const ScoreRow&) = default;
};

/// Per-frame scores for a set of text queries (CLIP / CLAP similarity rows,
/// or per-query detector confidences).
struct ScoreTable {
  ExpertKind expert = ExpertKind::Clip;
  std::vector<ScoreRow> rows;

  /// Case-insensitive exact lookup on the normalized query text.
  const ScoreRow* find(std::string_view query) const;

  friend bool operator==(const ScoreTable&, const ScoreTable&) = default;
};

struct TranscriptSegment {
  double start = 0.0;  // seconds
  double end = 0.0;
  std::string text;

  friend bool operator==(const TranscriptSegment&, const TranscriptSegment&) = default;
};

struct OcrFrameText {
  std::size_t frame = 0;
  std::vector<std::string> detections;

  friend bool operator==(const OcrFrameText&, const OcrFrameText&) = default;
};

/// Query-independent artifacts for one video.
struct ExpertBundle {
  std::string video_id;
  std::size_t frame_count = 0;
  double frame_rate = 1.0;
  ProviderKind provider = ProviderKind::FileBacked;

  std::optional<ScoreTable> clip;
  std::optional<ScoreTable> clap;
  std::optional<std::vector<TranscriptSegment>> transcript;
  std::optional<std::vector<OcrFrameText>> ocr;

  /// True when the bundle carries the artifact section for a cacheable expert.
  bool has_artifacts(ExpertKind kind) const;

  /// Throws BundleError on any invariant violation.
  void validate() const;

  friend bool operator==(const ExpertBundle&, const ExpertBundle&) = default;
};

/// Query-conditioned detector output for one video. Never cached.
struct OvdSource {
  std::string video_id;
  std::vector<ScoreRow> entries;

  friend bool operator==(const OvdSource&, const OvdSource&) = default;
};

class BundleError : public std::runtime_error {
 public:
  enum class Kind { Io, Format, InconsistentLength, MissingRow, MissingArtifact };

  BundleError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// A leaf could not be scored; carries the leaf and the underlying cause.
class LeafEvaluationError : public std::runtime_error {
 public:
  LeafEvaluationError(const Leaf& leaf, BundleError::Kind cause, const std::string& message);

  LeafId leaf() const noexcept { return leaf_; }
  BundleError::Kind cause() const noexcept { return cause_; }

 private:
  LeafId leaf_;
  BundleError::Kind cause_;
};

// --- serialization ---------------------------------------------------------

std::string bundle_to_json(const ExpertBundle& bundle);
ExpertBundle bundle_from_json(std::string_view document);
ExpertBundle load_bundle(const std::filesystem::path& path);
void save_bundle(const ExpertBundle& bundle, const std::filesystem::path& path);

std::string ovd_to_json(const OvdSource& source);
OvdSource ovd_from_json(std::string_view document);
OvdSource load_ovd_source(const std::filesystem::path& path);
void save_ovd_source(const OvdSource& source, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// --- per-leaf scoring ------------------------------------------------------

/// Optional replacement for the edit-distance fallback used when a spoken
/// query is not a literal substring of a segment.
using SemanticScorer = std::function<double(std::string_view query, std::string_view text)>;

/// CLIP / CLAP row lookup. Throws BundleError (MissingArtifact, MissingRow).
Signal score_embedding_leaf(const ExpertBundle& bundle, ExpertKind expert, std::string_view query);

/// Per-frame max confidence over the query's variants; zeros when the source
/// is null or carries no matching entry.
Signal score_ovd_leaf(const OvdSource* source, std::string_view query, std::size_t frame_count);

/// Fraction of frame t's interval [t/fps, (t+1)/fps) covered by [start, end).
double frame_overlap(double start, double end, std::size_t frame, double frame_rate);

Signal score_asr_leaf(std::span<const TranscriptSegment> transcript, std::string_view query,
                      std::size_t frame_count, double frame_rate,
                      const SemanticScorer& fallback = {});

Signal score_ocr_leaf(std::span<const OcrFrameText> ocr, std::string_view query,
                      std::size_t frame_count);

// --- tree-level extraction -------------------------------------------------

struct ProviderStats {
  /// Batched provider calls: one per expert group per evaluated tree.
  ExpertMap<std::uint64_t> invocations;
  /// Distinct (expert, query) rows actually scored.
  ExpertMap<std::uint64_t> rows_scored;
};

class ProviderCounters {
 public:
  void record_invocation(ExpertKind kind) { invocations_[index_of(kind)].fetch_add(1); }
  void record_row(ExpertKind kind) { rows_[index_of(kind)].fetch_add(1); }
  ProviderStats snapshot() const;

 private:
  std::array<std::atomic<std::uint64_t>, kExpertCount> invocations_{};
  std::array<std::atomic<std::uint64_t>, kExpertCount> rows_{};
};

using LeafSignals = std::map<LeafId, Signal>;

struct LeafScoringOptions {
  SemanticScorer asr_fallback;
};

/// Scores every leaf of `tree`. Experts absent from the tree are never
/// invoked; duplicate (expert, query) leaves share one computation.
LeafSignals evaluate_leaves(const LogicTree& tree, const ExpertBundle& bundle,
                            const OvdSource* ovd, ProviderCounters& counters,
                            const LeafScoringOptions& options = {});

}  // namespace framelogic
