#include "framelogic/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace framelogic {

namespace {

// Keeps normalized scores inside the open unit interval when the sigmoid
// saturates in double precision.
constexpr double kOpenLow = std::numeric_limits<double>::min();
const double kOpenHigh = std::nextafter(1.0, 0.0);

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void NormalizationParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw SignalError(SignalError::Kind::InvalidParams, "gamma must be a finite value > 0");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw SignalError(SignalError::Kind::InvalidParams, "delta must be a finite value > 0");
  }
}

std::string_view to_string(SmoothingMode mode) {
  return mode == SmoothingMode::Renormalized ? "renormalized" : "strict-eq2";
}

std::optional<SmoothingMode> parse_smoothing_mode(std::string_view name) {
  if (name == "renormalized") return SmoothingMode::Renormalized;
  if (name == "strict-eq2" || name == "strict") return SmoothingMode::StrictDensity;
  return std::nullopt;
}

void SmoothingParams::validate() const {
  for (auto kind : kAllExperts) {
    const auto& sigma = sigma_by_expert[kind];
    if (sigma && (!(*sigma >= 0.0) || !std::isfinite(*sigma))) {
      throw SignalError(SignalError::Kind::InvalidParams,
                        "bandwidth for " + std::string(to_string(kind)) +
                            " must be a finite value >= 0");
    }
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw SignalError(SignalError::Kind::EmptyInput, "median of empty sample");
  const auto n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return lower + (upper - lower) / 2.0;
}

double median_absolute_deviation(std::span<const double> values, double center) {
  std::vector<double> deviations;
  deviations.reserve(values.size());
  for (double v : values) deviations.push_back(std::abs(v - center));
  return median(std::move(deviations));
}

std::vector<Signal> normalize_joint(std::span<const Signal> signals,
                                    const NormalizationParams& params) {
  params.validate();
  if (signals.empty()) {
    throw SignalError(SignalError::Kind::EmptyInput, "normalize_joint: no signals");
  }
  const auto length = signals.front().size();
  if (length == 0) {
    throw SignalError(SignalError::Kind::EmptyInput, "normalize_joint: empty signal");
  }

  std::vector<double> pooled;
  pooled.reserve(length * signals.size());
  for (const auto& s : signals) {
    if (s.size() != length) {
      throw SignalError(SignalError::Kind::LengthMismatch,
                        "normalize_joint: signals differ in length (" + std::to_string(length) +
                            " vs " + std::to_string(s.size()) + ")");
    }
    if (s.stage != SignalStage::Raw) {
      throw SignalError(SignalError::Kind::StageMismatch, "normalize_joint: input is not Raw");
    }
    pooled.insert(pooled.end(), s.values.begin(), s.values.end());
  }

  const double center = median(pooled);
  const double scale = median_absolute_deviation(pooled, center) + params.delta;

  std::vector<Signal> out;
  out.reserve(signals.size());
  for (const auto& s : signals) {
    Signal n{std::vector<double>(length), SignalStage::Normalized, s.source_leaf};
    for (std::size_t t = 0; t < length; ++t) {
      const double z = params.gamma * (s.values[t] - center) / scale;
      n.values[t] = std::clamp(sigmoid(z), kOpenLow, kOpenHigh);
    }
    out.push_back(std::move(n));
  }
  return out;
}

std::size_t kernel_radius(double sigma) {
  if (!(sigma > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(4.0 * sigma));
}

std::vector<double> gaussian_smooth(std::span<const double> values, double sigma,
                                    SmoothingMode mode) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw SignalError(SignalError::Kind::InvalidParams, "bandwidth must be a finite value >= 0");
  }
  std::vector<double> out(values.begin(), values.end());
  if (sigma == 0.0 || values.empty()) return out;

  const auto radius = static_cast<std::ptrdiff_t>(kernel_radius(sigma));
  const double density = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  std::vector<double> kernel(static_cast<std::size_t>(radius) + 1);
  for (std::ptrdiff_t d = 0; d <= radius; ++d) {
    const double w = std::exp(-static_cast<double>(d * d) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(d)] = mode == SmoothingMode::StrictDensity ? density * w : w;
  }

  const auto n = static_cast<std::ptrdiff_t>(values.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto lo = std::max<std::ptrdiff_t>(0, t - radius);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, t + radius);
    if (mode == SmoothingMode::StrictDensity) {
      double acc = 0.0;
      for (auto s = lo; s <= hi; ++s) {
        acc += kernel[static_cast<std::size_t>(std::abs(t - s))] * values[static_cast<std::size_t>(s)];
      }
      out[static_cast<std::size_t>(t)] = std::clamp(acc, 0.0, 1.0);
      continue;
    }
    // Weighted mean written as centre + mean offset so constant windows are
    // reproduced bit-exactly; the result is kept inside the window's range.
    const double centre = values[static_cast<std::size_t>(t)];
    double offset = 0.0;
    double norm = 0.0;
    double lowest = centre;
    double highest = centre;
    for (auto s = lo; s <= hi; ++s) {
      const double w = kernel[static_cast<std::size_t>(std::abs(t - s))];
      const double x = values[static_cast<std::size_t>(s)];
      offset += w * (x - centre);
      norm += w;
      lowest = std::min(lowest, x);
      highest = std::max(highest, x);
    }
    const double v = std::clamp(centre + offset / norm, lowest, highest);
    out[static_cast<std::size_t>(t)] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

Signal smooth(const Signal& signal, ExpertKind expert, const SmoothingParams& params) {
  if (signal.stage != SignalStage::Normalized) {
    throw SignalError(SignalError::Kind::StageMismatch, "smooth: input is not Normalized");
  }
  const auto& sigma = params.sigma_by_expert[expert];
  if (!sigma) {
    throw SignalError(SignalError::Kind::MissingBandwidth,
                      "no smoothing bandwidth configured for " + std::string(to_string(expert)));
  }
  return Signal{gaussian_smooth(signal.values, *sigma, params.mode), SignalStage::Smoothed,
                signal.source_leaf};
}

}  // namespace framelogic
