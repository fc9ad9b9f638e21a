#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "framelogic/expert_kind.hpp"
#include "framelogic/tree.hpp"

namespace framelogic {

enum class SignalStage { Raw, Normalized, Smoothed };

/// Per-frame score series for one leaf.
///   Raw        - finite, any range
///   Normalized - in (0, 1)
///   Smoothed   - in [0, 1]
struct Signal {
  std::vector<double> values;
  SignalStage stage = SignalStage::Raw;
  LeafId source_leaf;

  std::size_t size() const { return values.size(); }
};

class SignalError : public std::runtime_error {
 public:
  enum class Kind { EmptyInput, LengthMismatch, StageMismatch, MissingBandwidth, InvalidParams };

  SignalError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct NormalizationParams {
  double gamma = 3.0;   // sigmoid sharpness
  double delta = 1e-6;  // MAD stabilizer

  void validate() const;
};

enum class SmoothingMode {
  /// Truncated Gaussian whose in-bounds weights are rescaled to sum to 1 at
  /// every position. Preserves constants at the timeline ends.
  Renormalized,
  /// Analytic Gaussian density summed over in-bounds frames without
  /// rescaling; output is clamped to [0, 1].
  StrictDensity,
};

std::string_view to_string(SmoothingMode mode);
std::optional<SmoothingMode> parse_smoothing_mode(std::string_view name);

struct SmoothingParams {
  /// Bandwidth in frames per expert; 0 disables smoothing.
  ExpertMap<std::optional<double>> sigma_by_expert{{0.5, 0.5, 0.5, 1.5, 2.0}};
  SmoothingMode mode = SmoothingMode::Renormalized;

  void validate() const;
};

/// Median of a non-empty sample (mean of the two middle values for even sizes).
double median(std::vector<double> values);

/// Unscaled median absolute deviation around `center`.
double median_absolute_deviation(std::span<const double> values, double center);

/// Robust sigmoid normalization with statistics pooled over every input.
/// All inputs must be Raw and of equal length; outputs keep input order.
std::vector<Signal> normalize_joint(std::span<const Signal> signals,
                                    const NormalizationParams& params = {});

/// Kernel truncation radius in frames: ceil(4 sigma).
std::size_t kernel_radius(double sigma);

/// Gaussian smoothing with the expert's bandwidth. Input must be Normalized.
Signal smooth(const Signal& signal, ExpertKind expert, const SmoothingParams& params = {});

/// Same as smooth() with an explicit bandwidth.
std::vector<double> gaussian_smooth(std::span<const double> values, double sigma,
                                    SmoothingMode mode = SmoothingMode::Renormalized);

}  // namespace framelogic
