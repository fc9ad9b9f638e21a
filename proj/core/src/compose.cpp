#include "framelogic/compose.hpp"

#include <algorithm>
#include <cmath>

namespace framelogic {

namespace {

std::size_t common_length(std::span<const Curve> curves, const char* op) {
  const auto n = curves.front().size();
  for (const auto& c : curves) {
    if (c.size() != n) {
      throw ComposeError(ComposeError::Kind::LengthMismatch,
                         std::string(op) + ": children differ in length");
    }
  }
  return n;
}

void require_children(std::span<const Curve> curves, std::size_t minimum, const char* op) {
  if (curves.size() < minimum) {
    throw ComposeError(ComposeError::Kind::Arity, std::string(op) + " needs at least " +
                                                      std::to_string(minimum) + " children");
  }
}

}  // namespace

AttributionMatrix::AttributionMatrix(std::vector<Curve> rows, std::vector<std::size_t> columns)
    : rows_(std::move(rows)), columns_(std::move(columns)) {}

AttributionMatrix AttributionMatrix::restrict_to(std::span<const std::size_t> frames) const {
  std::vector<std::size_t> index_of_frame;
  std::vector<Curve> rows(rows_.size());
  for (auto frame : frames) {
    auto it = std::find(columns_.begin(), columns_.end(), frame);
    if (it == columns_.end()) throw std::out_of_range("attribution: frame not in matrix");
    index_of_frame.push_back(static_cast<std::size_t>(it - columns_.begin()));
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    rows[r].reserve(frames.size());
    for (auto c : index_of_frame) rows[r].push_back(rows_[r][c]);
  }
  return AttributionMatrix(std::move(rows), {frames.begin(), frames.end()});
}

Curve op_and(std::span<const Curve> children) {
  require_children(children, 2, "AND");
  const auto n = common_length(children, "AND");
  Curve out = children.front();
  for (std::size_t i = 1; i < children.size(); ++i) {
    for (std::size_t t = 0; t < n; ++t) out[t] = out[t] * children[i][t];
  }
  return out;
}

Curve op_or(std::span<const Curve> children) {
  require_children(children, 2, "OR");
  const auto n = common_length(children, "OR");
  Curve out = children.front();
  for (std::size_t i = 1; i < children.size(); ++i) {
    for (std::size_t t = 0; t < n; ++t) {
      const double a = out[t];
      const double b = children[i][t];
      out[t] = std::clamp(a + b - a * b, 0.0, 1.0);
    }
  }
  return out;
}

Curve op_seq(std::span<const Curve> children) {
  require_children(children, 2, "SEQ");
  const auto n = common_length(children, "SEQ");
  const auto steps = children.size();
  if (n == 0) return {};

  // has_occurred[j][t] = max_{s<t} u_j(s); yet_to_occur[j][t] = max_{s>t} u_j(s).
  // Empty ranges are 0.
  std::vector<Curve> has_occurred(steps, Curve(n, 0.0));
  std::vector<Curve> yet_to_occur(steps, Curve(n, 0.0));
  for (std::size_t j = 0; j < steps; ++j) {
    const auto& u = children[j];
    for (std::size_t t = 1; t < n; ++t) {
      has_occurred[j][t] = std::max(has_occurred[j][t - 1], u[t - 1]);
    }
    for (std::size_t t = n - 1; t-- > 0;) {
      yet_to_occur[j][t] = std::max(yet_to_occur[j][t + 1], u[t + 1]);
    }
  }

  Curve out(n, 0.0);
  std::vector<double> before(steps);
  std::vector<double> after(steps);
  for (std::size_t t = 0; t < n; ++t) {
    before[0] = 1.0;
    for (std::size_t l = 1; l < steps; ++l) before[l] = before[l - 1] * has_occurred[l - 1][t];
    after[steps - 1] = 1.0;
    for (std::size_t l = steps - 1; l-- > 0;) after[l] = after[l + 1] * yet_to_occur[l + 1][t];

    double best = 0.0;
    for (std::size_t l = 0; l < steps; ++l) {
      best = std::max(best, children[l][t] * before[l] * after[l]);
    }
    out[t] = best;
  }
  return out;
}

Curve op_right_after(const Curve& cause, const Curve& effect, double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw ComposeError(ComposeError::Kind::InvalidParams, "RIGHT_AFTER: kappa must be > 0");
  }
  if (cause.size() != effect.size()) {
    throw ComposeError(ComposeError::Kind::LengthMismatch,
                       "RIGHT_AFTER: cause and effect differ in length");
  }
  const auto n = cause.size();
  const double decay = std::exp(-kappa);

  // past[t]   = sum_{s<t} cause(s)  e^{-kappa (t-s)}
  // future[t] = sum_{s>t} effect(s) e^{-kappa (s-t)}
  Curve past(n, 0.0);
  Curve future(n, 0.0);
  for (std::size_t t = 1; t < n; ++t) past[t] = (past[t - 1] + cause[t - 1]) * decay;
  for (std::size_t t = n - 1; n > 0 && t-- > 0;) future[t] = (future[t + 1] + effect[t + 1]) * decay;

  Curve out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double s_effect = effect[t] * past[t];
    const double s_cause = cause[t] * future[t];
    out[t] = std::clamp(std::max(s_effect, s_cause), 0.0, 1.0);
  }
  return out;
}

namespace {

class Evaluator {
 public:
  Evaluator(const LogicTree& tree, const LeafSignals& signals, const ComposeParams& params)
      : tree_(tree), signals_(signals), params_(params) {}

  Evaluation run() {
    std::vector<Curve> rows;
    rows.reserve(tree_.leaf_count());
    for (const auto& leaf : tree_.leaves()) rows.push_back(leaf_curve(leaf.id));

    const auto length = rows.empty() ? 0 : rows.front().size();
    for (const auto& row : rows) {
      if (row.size() != length) {
        throw ComposeError(ComposeError::Kind::LengthMismatch, "leaf signals differ in length");
      }
    }

    Curve root = visit(0);
    std::vector<std::size_t> frames(length);
    for (std::size_t t = 0; t < length; ++t) frames[t] = t;
    return Evaluation{SatisfactionCurve{std::move(root)},
                      AttributionMatrix(std::move(rows), std::move(frames))};
  }

 private:
  const Curve& leaf_curve(LeafId id) const {
    auto it = signals_.find(id);
    if (it == signals_.end()) {
      const auto& leaf = tree_.leaf(id);
      throw ComposeError(ComposeError::Kind::MissingLeafSignal,
                         "no signal for leaf " + std::to_string(id.value) + " (" +
                             std::string(to_string(leaf.expert)) + ": \"" + leaf.query + "\")");
    }
    return it->second.values;
  }

  Curve visit(NodeIndex index) const {
    const auto& node = tree_.node(index);
    if (node.is_leaf()) return leaf_curve(node.leaf);

    std::vector<Curve> children;
    children.reserve(node.children.size());
    for (auto child : node.children) children.push_back(visit(child));

    switch (*node.op) {
      case OperatorKind::And: return op_and(children);
      case OperatorKind::Or: return op_or(children);
      case OperatorKind::Seq: return op_seq(children);
      case OperatorKind::RightAfter:
        if (children.size() != 2) {
          throw ComposeError(ComposeError::Kind::Arity, "RIGHT_AFTER needs exactly 2 children");
        }
        return op_right_after(children[0], children[1], params_.kappa);
    }
    return {};
  }

  const LogicTree& tree_;
  const LeafSignals& signals_;
  const ComposeParams& params_;
};

}  // namespace

Evaluation evaluate(const LogicTree& tree, const LeafSignals& leaf_signals,
                    const ComposeParams& params) {
  return Evaluator(tree, leaf_signals, params).run();
}

}  // namespace framelogic
