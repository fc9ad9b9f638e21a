#include "framelogic/select.hpp"

#include <algorithm>
#include <numeric>

namespace framelogic {

namespace {

// Descending score, then ascending frame.
void rank(std::vector<std::size_t>& frames, std::span<const double> curve) {
  std::sort(frames.begin(), frames.end(), [&](std::size_t a, std::size_t b) {
    if (curve[a] != curve[b]) return curve[a] > curve[b];
    return a < b;
  });
}

SelectionResult finish(std::vector<SelectedFrame> frames, const AttributionMatrix* attribution) {
  std::sort(frames.begin(), frames.end(),
            [](const SelectedFrame& a, const SelectedFrame& b) { return a.frame < b.frame; });
  SelectionResult result{std::move(frames), {}};
  if (attribution && attribution->cols() > 0) {
    result.attribution = attribution->restrict_to(result.indices());
  }
  return result;
}

}  // namespace

std::size_t isqrt(std::size_t n) {
  std::size_t r = 0;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

PassParams PassParams::for_budget(std::size_t budget) {
  const auto root = isqrt(budget);
  return PassParams{budget, root, root / 2, root, root};
}

void PassParams::validate() const {
  if (budget < 1) throw std::invalid_argument("PASS: budget K must be >= 1");
  if (peaks < 1) throw std::invalid_argument("PASS: number of peaks must be >= 1");
  if (window < 1) throw std::invalid_argument("PASS: window must be >= 1");
  if (min_distance < 1) throw std::invalid_argument("PASS: minimum peak distance must be >= 1");
}

std::string_view to_string(SelectionPhase phase) {
  switch (phase) {
    case SelectionPhase::Peak: return "peak";
    case SelectionPhase::Neighbor: return "neighbor";
    case SelectionPhase::Fill: return "fill";
  }
  return "fill";
}

std::vector<std::size_t> SelectionResult::indices() const {
  std::vector<std::size_t> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.frame);
  return out;
}

std::vector<std::size_t> find_peaks(std::span<const double> curve, std::size_t max_peaks,
                                    std::size_t min_distance) {
  std::vector<std::size_t> candidates;
  for (std::size_t t = 1; t + 1 < curve.size(); ++t) {
    if (curve[t] > curve[t - 1] && curve[t] > curve[t + 1]) candidates.push_back(t);
  }
  rank(candidates, curve);

  std::vector<std::size_t> peaks;
  for (auto t : candidates) {
    if (peaks.size() >= max_peaks) break;
    const bool separated = std::all_of(peaks.begin(), peaks.end(), [&](std::size_t p) {
      return (t > p ? t - p : p - t) >= min_distance;
    });
    if (separated) peaks.push_back(t);
  }
  return peaks;
}

SelectionResult pass_select(const SatisfactionCurve& curve, const AttributionMatrix& attribution,
                            const PassParams& params) {
  params.validate();
  const auto n = curve.size();
  const auto budget = std::min(params.budget, n);

  std::vector<bool> taken(n, false);
  std::vector<SelectedFrame> chosen;
  chosen.reserve(budget);
  auto take = [&](std::size_t t, SelectionPhase phase) {
    taken[t] = true;
    chosen.push_back({t, phase});
  };

  // Peaks.
  const auto peaks = find_peaks(curve.values, std::min(params.peaks, budget), params.min_distance);
  for (auto p : peaks) take(p, SelectionPhase::Peak);

  // Neighbours around each peak, in peak selection order.
  const auto half = params.window / 2;
  for (auto p : peaks) {
    std::vector<std::size_t> window;
    const auto lo = p >= half ? p - half : 0;
    const auto hi = std::min(n - 1, p + half);
    for (auto t = lo; t <= hi; ++t) {
      if (!taken[t]) window.push_back(t);
    }
    rank(window, curve.values);
    for (std::size_t i = 0; i < window.size() && i < params.neighbors && chosen.size() < budget;
         ++i) {
      take(window[i], SelectionPhase::Neighbor);
    }
  }

  // Greedy fill.
  if (chosen.size() < budget) {
    std::vector<std::size_t> rest;
    rest.reserve(n - chosen.size());
    for (std::size_t t = 0; t < n; ++t) {
      if (!taken[t]) rest.push_back(t);
    }
    rank(rest, curve.values);
    for (std::size_t i = 0; chosen.size() < budget; ++i) take(rest[i], SelectionPhase::Fill);
  }

  return finish(std::move(chosen), &attribution);
}

SelectionResult topk_select(const SatisfactionCurve& curve, std::size_t budget,
                            const AttributionMatrix* attribution) {
  std::vector<std::size_t> order(curve.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rank(order, curve.values);
  order.resize(std::min(budget, order.size()));

  std::vector<SelectedFrame> frames;
  for (auto t : order) frames.push_back({t, SelectionPhase::Fill});
  return finish(std::move(frames), attribution);
}

SelectionResult uniform_select(std::size_t frame_count, std::size_t budget,
                               const AttributionMatrix* attribution) {
  const auto k = std::min(budget, frame_count);
  std::vector<std::size_t> targets;
  if (k == 1) {
    targets.push_back(frame_count / 2);
  } else if (k > 1) {
    const auto span = frame_count - 1;
    const auto steps = k - 1;
    for (std::size_t i = 0; i < k; ++i) {
      targets.push_back((2 * i * span + steps) / (2 * steps));  // round half up
    }
  }

  std::vector<bool> taken(frame_count, false);
  std::vector<SelectedFrame> frames;
  for (auto target : targets) {
    auto pick = target;
    // Nearest unused frame, lower side first on ties.
    for (std::size_t d = 0; taken[pick]; ++d) {
      if (target >= d && !taken[target - d]) {
        pick = target - d;
      } else if (target + d < frame_count && !taken[target + d]) {
        pick = target + d;
      }
    }
    taken[pick] = true;
    frames.push_back({pick, SelectionPhase::Fill});
  }
  return finish(std::move(frames), attribution);
}

}  // namespace framelogic
