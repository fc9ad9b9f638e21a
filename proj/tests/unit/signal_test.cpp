#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "framelogic/signal.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace fl = framelogic;

namespace {

fl::Signal raw(std::vector<double> v) { return {std::move(v), fl::SignalStage::Raw, {}}; }
fl::Signal normalized(std::vector<double> v) { return {std::move(v), fl::SignalStage::Normalized, {}}; }

}  // namespace

TEST(RobustStats, MedianAndMad) {
  EXPECT_DOUBLE_EQ(fl::median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(fl::median({4.0, 1.0, 3.0, 2.0}), 2.5);
  const std::vector<double> x{1, 1, 2, 2, 4, 6, 9};
  EXPECT_DOUBLE_EQ(fl::median_absolute_deviation(x, fl::median(x)), 1.0);
  EXPECT_THROW(fl::median({}), fl::SignalError);
}

TEST(NormalizeJoint, ConstantSignalIsExactlyHalf) {
  const auto out = fl::normalize_joint(std::vector<fl::Signal>{raw(std::vector<double>(9, 0.42))});
  for (double v : out[0].values) EXPECT_EQ(v, 0.5);
  EXPECT_EQ(out[0].stage, fl::SignalStage::Normalized);
}

TEST(NormalizeJoint, SpikeOnZerosMatchesHighPrecisionOracle) {
  const std::vector<double> x{0, 0, 0, 1, 0};
  const auto got = fl::normalize_joint(std::vector<fl::Signal>{raw(x)})[0].values;
  const auto want = oracle::normalize_high_precision({x})[0];
  for (std::size_t t = 0; t < x.size(); ++t) EXPECT_NEAR(got[t], want[t], 1e-12);
  EXPECT_EQ(got[0], 0.5);
  EXPECT_LT(got[3], 1.0);  // kept inside the open interval
  EXPECT_GT(got[3], 1.0 - 1e-15);
}

TEST(NormalizeJoint, RandomSignalsMatchHighPrecisionOracle) {
  gen::Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::vector<double>> signals;
    std::vector<fl::Signal> inputs;
    const auto n = rng.between(1, 60);
    for (std::size_t s = 0, k = rng.between(1, 3); s < k; ++s) {
      signals.push_back(rng.curve(n));
      inputs.push_back(raw(signals.back()));
    }
    const double gamma = rng.range(0.5, 5.0);
    const auto got = fl::normalize_joint(inputs, {gamma, 1e-6});
    const auto want = oracle::normalize_high_precision(signals, gamma, 1e-6);
    for (std::size_t s = 0; s < signals.size(); ++s) {
      for (std::size_t t = 0; t < n; ++t) {
        EXPECT_NEAR(got[s].values[t], want[s][t], 1e-12);
        EXPECT_GT(got[s].values[t], 0.0);
        EXPECT_LT(got[s].values[t], 1.0);
      }
    }
  }
}

TEST(NormalizeJoint, ConstantPairKeepsRelativeMagnitude) {
  const auto out = fl::normalize_joint(std::vector<fl::Signal>{
      raw(std::vector<double>(6, 0.9)), raw(std::vector<double>(6, 0.2))});
  const double a = out[0].values[0];
  const double b = out[1].values[0];
  for (double v : out[0].values) EXPECT_EQ(v, a);
  for (double v : out[1].values) EXPECT_EQ(v, b);
  EXPECT_GT(a, 0.5);
  EXPECT_LT(b, 0.5);

  // Independent normalization would erase the difference.
  const auto alone_a = fl::normalize_joint(std::vector<fl::Signal>{raw(std::vector<double>(6, 0.9))});
  const auto alone_b = fl::normalize_joint(std::vector<fl::Signal>{raw(std::vector<double>(6, 0.2))});
  EXPECT_EQ(alone_a[0].values[0], alone_b[0].values[0]);
}

TEST(NormalizeJoint, PermutationOfInputsPermutesOutputs) {
  gen::Rng rng(43);
  for (int i = 0; i < 50; ++i) {
    const auto n = rng.between(1, 30);
    const auto a = raw(rng.curve(n)), b = raw(rng.curve(n)), c = raw(rng.curve(n));
    const auto abc = fl::normalize_joint(std::vector<fl::Signal>{a, b, c});
    const auto cab = fl::normalize_joint(std::vector<fl::Signal>{c, a, b});
    EXPECT_EQ(abc[0].values, cab[1].values);
    EXPECT_EQ(abc[1].values, cab[2].values);
    EXPECT_EQ(abc[2].values, cab[0].values);
  }
}

TEST(NormalizeJoint, Errors) {
  EXPECT_THROW(fl::normalize_joint(std::vector<fl::Signal>{}), fl::SignalError);
  EXPECT_THROW(fl::normalize_joint(std::vector<fl::Signal>{raw({})}), fl::SignalError);
  try {
    fl::normalize_joint(std::vector<fl::Signal>{raw({1, 2}), raw({1, 2, 3})});
    FAIL();
  } catch (const fl::SignalError& e) {
    EXPECT_EQ(e.kind(), fl::SignalError::Kind::LengthMismatch);
  }
  EXPECT_THROW(fl::normalize_joint(std::vector<fl::Signal>{normalized({0.5})}), fl::SignalError);
  EXPECT_THROW(fl::normalize_joint(std::vector<fl::Signal>{raw({1})}, {0.0, 1e-6}), fl::SignalError);
  EXPECT_THROW(fl::normalize_joint(std::vector<fl::Signal>{raw({1})}, {3.0, 0.0}), fl::SignalError);
}

TEST(Smoothing, KernelRadius) {
  EXPECT_EQ(fl::kernel_radius(0.0), 0u);
  EXPECT_EQ(fl::kernel_radius(0.5), 2u);
  EXPECT_EQ(fl::kernel_radius(1.5), 6u);
  EXPECT_EQ(fl::kernel_radius(2.0), 8u);
  EXPECT_EQ(fl::kernel_radius(0.3), 2u);
}

TEST(Smoothing, ImpulseAtCentreIsSymmetricBell) {
  std::vector<double> impulse(21, 0.0);
  impulse[10] = 1.0;
  const auto y = fl::gaussian_smooth(impulse, 1.5);
  const auto want = oracle::smooth_truncated(impulse, 1.5);
  for (std::size_t t = 0; t < y.size(); ++t) EXPECT_NEAR(y[t], want[t], 1e-12);
  for (std::size_t d = 1; d <= 10; ++d) EXPECT_DOUBLE_EQ(y[10 - d], y[10 + d]);
  EXPECT_EQ(std::max_element(y.begin(), y.end()) - y.begin(), 10);

  // Positions 4, 5, 15, 16 see a truncated window and renormalize over it,
  // so the total mass is slightly above 1 rather than exactly 1.
  const double mass = std::accumulate(y.begin(), y.end(), 0.0);
  EXPECT_NEAR(mass, std::accumulate(want.begin(), want.end(), 0.0), 1e-12);
  EXPECT_NEAR(mass, 1.0, 1e-5);
}

TEST(Smoothing, InteriorImpulseConservesMass) {
  std::vector<double> impulse(61, 0.0);
  impulse[30] = 1.0;
  for (double sigma : {0.5, 1.5, 2.0}) {
    const auto y = fl::gaussian_smooth(impulse, sigma);
    EXPECT_NEAR(std::accumulate(y.begin(), y.end(), 0.0), 1.0, 1e-9) << sigma;
  }
}

TEST(Smoothing, RandomSignalsMatchOracleAndStayInRange) {
  gen::Rng rng(47);
  for (int i = 0; i < 300; ++i) {
    const auto x = rng.curve(rng.between(1, 80));
    const double sigma = rng.range(0.1, 4.0);
    const auto y = fl::gaussian_smooth(x, sigma);
    const auto want = oracle::smooth_truncated(x, sigma);
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    for (std::size_t t = 0; t < x.size(); ++t) {
      EXPECT_NEAR(y[t], want[t], 1e-12);
      EXPECT_GE(y[t], *lo);
      EXPECT_LE(y[t], *hi);
    }
  }
}

TEST(Smoothing, ConstantsPreservedExactlyIncludingBoundaries) {
  for (double c : {0.5, 0.123456789, 1.0 - 1e-16}) {
    const auto y = fl::gaussian_smooth(std::vector<double>(7, c), 2.0);
    for (double v : y) EXPECT_EQ(v, c);
  }
}

TEST(Smoothing, StrictDensityModeUsesUnnormalizedKernel) {
  std::vector<double> impulse(21, 0.0);
  impulse[10] = 1.0;
  const double sigma = 1.5;
  const auto y = fl::gaussian_smooth(impulse, sigma, fl::SmoothingMode::StrictDensity);
  for (int t = 0; t < 21; ++t) {
    const double d = t - 10;
    const double g = std::abs(d) <= 6
                         ? std::exp(-d * d / (2 * sigma * sigma)) / (std::sqrt(2 * M_PI) * sigma)
                         : 0.0;
    EXPECT_NEAR(y[static_cast<std::size_t>(t)], g, 1e-15);
  }
  // Constants are attenuated at the boundary in this mode.
  const auto c = fl::gaussian_smooth(std::vector<double>(21, 0.5), sigma, fl::SmoothingMode::StrictDensity);
  EXPECT_LT(c.front(), c[10]);
}

TEST(Smoothing, SmoothUsesPerExpertBandwidth) {
  std::vector<double> impulse(21, 0.0);
  impulse[10] = 1.0;
  const fl::SmoothingParams params;
  const auto asr = fl::smooth(normalized(impulse), fl::ExpertKind::Asr, params);
  EXPECT_EQ(asr.stage, fl::SignalStage::Smoothed);
  EXPECT_EQ(asr.values, fl::gaussian_smooth(impulse, 1.5));
  const auto clip = fl::smooth(normalized(impulse), fl::ExpertKind::Clip, params);
  EXPECT_EQ(clip.values, fl::gaussian_smooth(impulse, 0.5));

  fl::SmoothingParams off;
  off.sigma_by_expert[fl::ExpertKind::Clap] = 0.0;
  EXPECT_EQ(fl::smooth(normalized(impulse), fl::ExpertKind::Clap, off).values, impulse);
}

TEST(Smoothing, Errors) {
  fl::SmoothingParams params;
  params.sigma_by_expert[fl::ExpertKind::Ocr].reset();
  try {
    fl::smooth(normalized({0.5}), fl::ExpertKind::Ocr, params);
    FAIL();
  } catch (const fl::SignalError& e) {
    EXPECT_EQ(e.kind(), fl::SignalError::Kind::MissingBandwidth);
  }
  EXPECT_THROW(fl::smooth(raw({0.5}), fl::ExpertKind::Clip), fl::SignalError);
  EXPECT_THROW(fl::gaussian_smooth(std::vector<double>{0.5}, -1.0), fl::SignalError);
}

TEST(Smoothing, ModeNames) {
  EXPECT_EQ(fl::parse_smoothing_mode("renormalized"), fl::SmoothingMode::Renormalized);
  EXPECT_EQ(fl::parse_smoothing_mode("strict-eq2"), fl::SmoothingMode::StrictDensity);
  EXPECT_FALSE(fl::parse_smoothing_mode("box"));
  EXPECT_EQ(fl::to_string(fl::SmoothingMode::StrictDensity), "strict-eq2");
}
