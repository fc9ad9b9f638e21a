#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "framelogic/experts.hpp"
#include "framelogic/tree.hpp"

namespace framelogic {

using Curve = std::vector<double>;

class ComposeError : public std::runtime_error {
 public:
  enum class Kind { LengthMismatch, Arity, MissingLeafSignal, InvalidParams };

  ComposeError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Root output of a tree evaluation; every value in [0, 1].
struct SatisfactionCurve {
  Curve values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t t) const { return values[t]; }
};

/// Processed leaf scores, one row per leaf id, one column per frame.
class AttributionMatrix {
 public:
  AttributionMatrix() = default;
  AttributionMatrix(std::vector<Curve> rows, std::vector<std::size_t> columns);

  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return columns_.size(); }
  const Curve& row(LeafId id) const { return rows_.at(id.value); }
  double at(LeafId id, std::size_t col) const { return rows_.at(id.value).at(col); }
  /// Frame index of each column.
  const std::vector<std::size_t>& frames() const { return columns_; }

  /// Sub-matrix holding only the given frames (in the given order).
  AttributionMatrix restrict_to(std::span<const std::size_t> frames) const;

 private:
  std::vector<Curve> rows_;
  std::vector<std::size_t> columns_;
};

struct Evaluation {
  SatisfactionCurve curve;
  AttributionMatrix attribution;
};

struct ComposeParams {
  double kappa = 2.0;  // RIGHT_AFTER decay per frame
};

/// Product t-norm folded left to right.
Curve op_and(std::span<const Curve> children);
/// Probabilistic sum folded left to right.
Curve op_or(std::span<const Curve> children);
/// Ordered sequence over children given earliest first.
Curve op_seq(std::span<const Curve> children);
/// Cause/effect adjacency with exponential decay; clamped to [0, 1].
Curve op_right_after(const Curve& cause, const Curve& effect, double kappa = 2.0);

/// Bottom-up evaluation of `tree` over smoothed leaf signals.
Evaluation evaluate(const LogicTree& tree, const LeafSignals& leaf_signals,
                    const ComposeParams& params = {});

}  // namespace framelogic
