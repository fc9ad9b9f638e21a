#include <gtest/gtest.h>

#include <cmath>

#include "framelogic/compose.hpp"
#include "framelogic/tree.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace fl = framelogic;
using nlohmann::json;

namespace {

fl::Curve impulse(std::size_t n, std::size_t at) {
  fl::Curve c(n, 0.0);
  c[at] = 1.0;
  return c;
}

fl::LeafSignals signals_for(const fl::LogicTree& tree, const std::vector<fl::Curve>& rows) {
  fl::LeafSignals out;
  for (const auto& leaf : tree.leaves()) {
    out.emplace(leaf.id, fl::Signal{rows.at(leaf.id.value), fl::SignalStage::Smoothed, leaf.id});
  }
  return out;
}

/// Recursive evaluation straight from the JSON document; leaves are consumed
/// in document order.
fl::Curve naive_eval(const json& node, const std::vector<fl::Curve>& leaves, std::size_t& next,
                     double kappa) {
  if (!node.contains("children")) return leaves.at(next++);
  std::vector<fl::Curve> kids;
  for (const auto& child : node["children"]) kids.push_back(naive_eval(child, leaves, next, kappa));
  const auto n = kids.front().size();
  const auto op = node["op"].get<std::string>();
  if (op == "SEQ") return oracle::seq_brute_force(kids);
  if (op == "RIGHT_AFTER") return oracle::right_after_direct(kids[0], kids[1], kappa);
  fl::Curve out(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> column;
    for (const auto& k : kids) column.push_back(k[t]);
    out[t] = op == "AND" ? oracle::product(column) : oracle::or_closed_form(column);
  }
  return out;
}

}  // namespace

TEST(OpAnd, Examples) {
  const std::vector<fl::Curve> two{{0.5}, {0.8}};
  EXPECT_DOUBLE_EQ(fl::op_and(two)[0], 0.4);
  const fl::Curve a{0.1, 0.7, 0.3};
  const std::vector<fl::Curve> with_ones{a, {1, 1, 1}};
  EXPECT_EQ(fl::op_and(with_ones), a);
  const std::vector<fl::Curve> three{{0.5}, {0.5}, {0.5}};
  EXPECT_EQ(fl::op_and(three)[0], 0.125);
}

TEST(OpOr, Examples) {
  const std::vector<fl::Curve> two{{0.5}, {0.8}};
  EXPECT_DOUBLE_EQ(fl::op_or(two)[0], 0.9);
  const fl::Curve a{0.1, 0.7, 0.3};
  const std::vector<fl::Curve> with_zeros{a, {0, 0, 0}};
  EXPECT_EQ(fl::op_or(with_zeros), a);
  const std::vector<fl::Curve> three{{0.5}, {0.5}, {0.5}};
  EXPECT_EQ(fl::op_or(three)[0], 0.875);
}

TEST(OpAndOr, AssociativityAndBounds) {
  gen::Rng rng(67);
  for (int i = 0; i < 500; ++i) {
    const auto n = rng.between(1, 20);
    const auto a = rng.curve(n), b = rng.curve(n), c = rng.curve(n);
    const std::vector<fl::Curve> ab{a, b}, bc{b, c};
    const std::vector<fl::Curve> left_and{fl::op_and(ab), c}, right_and{a, fl::op_and(bc)};
    const std::vector<fl::Curve> left_or{fl::op_or(ab), c}, right_or{a, fl::op_or(bc)};
    const auto l_and = fl::op_and(left_and), r_and = fl::op_and(right_and);
    const auto l_or = fl::op_or(left_or), r_or = fl::op_or(right_or);
    for (std::size_t t = 0; t < n; ++t) {
      EXPECT_NEAR(l_and[t], r_and[t], 1e-15);
      EXPECT_NEAR(l_or[t], r_or[t], 1e-15);
      EXPECT_LE(l_and[t], std::min({a[t], b[t], c[t]}));
      EXPECT_GE(l_or[t], std::max({a[t], b[t], c[t]}) - 1e-15);
      EXPECT_LE(l_or[t], 1.0);
    }
  }
}

TEST(OpSeq, ImpulsesInOrderSelectBothSteps) {
  const std::vector<fl::Curve> in_order{impulse(10, 2), impulse(10, 7)};
  const auto out = fl::op_seq(in_order);
  EXPECT_EQ(out, oracle::seq_brute_force(in_order));
  for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(out[t], (t == 2 || t == 7) ? 1.0 : 0.0) << t;

  const std::vector<fl::Curve> reversed{impulse(10, 7), impulse(10, 2)};
  EXPECT_EQ(fl::op_seq(reversed), fl::Curve(10, 0.0));
}

TEST(OpSeq, ZeroChildZeroesOutput) {
  gen::Rng rng(71);
  const std::vector<fl::Curve> kids{rng.continuous_curve(12), fl::Curve(12, 0.0), rng.continuous_curve(12)};
  EXPECT_EQ(fl::op_seq(kids), fl::Curve(12, 0.0));
}

TEST(OpSeq, MatchesBruteForce) {
  gen::Rng rng(73);
  for (int i = 0; i < 300; ++i) {
    const auto n = rng.between(1, 25);
    std::vector<fl::Curve> kids;
    for (std::size_t k = 0, m = rng.between(2, 4); k < m; ++k) kids.push_back(rng.curve(n));
    const auto got = fl::op_seq(kids);
    const auto want = oracle::seq_brute_force(kids);
    for (std::size_t t = 0; t < n; ++t) EXPECT_NEAR(got[t], want[t], 1e-15);
  }
}

TEST(OpRightAfter, ImpulseExample) {
  const auto out = fl::op_right_after(impulse(10, 3), impulse(10, 5), 2.0);
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_NEAR(out[t], (t == 3 || t == 5) ? std::exp(-4.0) : 0.0, 1e-17) << t;
  }
  EXPECT_NEAR(out[5], 0.018316, 1e-6);
}

TEST(OpRightAfter, DecayLaw) {
  const auto near = fl::op_right_after(impulse(20, 5), impulse(20, 6), 2.0);
  const auto far = fl::op_right_after(impulse(20, 5), impulse(20, 7), 2.0);
  EXPECT_NEAR(far[7] / near[6], std::exp(-2.0), 1e-15);
}

TEST(OpRightAfter, ZeroCurveAndOracle) {
  gen::Rng rng(79);
  EXPECT_EQ(fl::op_right_after(rng.continuous_curve(8), fl::Curve(8, 0.0)), fl::Curve(8, 0.0));
  EXPECT_EQ(fl::op_right_after(fl::Curve(8, 0.0), rng.continuous_curve(8)), fl::Curve(8, 0.0));
  for (int i = 0; i < 300; ++i) {
    const auto n = rng.between(1, 40);
    const auto cause = rng.curve(n), effect = rng.curve(n);
    const double kappa = rng.range(0.05, 4.0);
    const auto got = fl::op_right_after(cause, effect, kappa);
    const auto want = oracle::right_after_direct(cause, effect, kappa);
    for (std::size_t t = 0; t < n; ++t) {
      EXPECT_NEAR(got[t], want[t], 1e-12);
      EXPECT_GE(got[t], 0.0);
      EXPECT_LE(got[t], 1.0);
    }
  }
}

TEST(Operators, Errors) {
  auto kind = [](auto&& fn) {
    try {
      fn();
    } catch (const fl::ComposeError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "expected ComposeError";
    return fl::ComposeError::Kind::InvalidParams;
  };
  const std::vector<fl::Curve> one{{0.5}};
  const std::vector<fl::Curve> ragged{{0.5}, {0.5, 0.5}};
  EXPECT_EQ(kind([&] { fl::op_and(one); }), fl::ComposeError::Kind::Arity);
  EXPECT_EQ(kind([&] { fl::op_or(ragged); }), fl::ComposeError::Kind::LengthMismatch);
  EXPECT_EQ(kind([&] { fl::op_seq(ragged); }), fl::ComposeError::Kind::LengthMismatch);
  EXPECT_EQ(kind([&] { fl::op_right_after({0.5}, {0.5, 0.5}); }), fl::ComposeError::Kind::LengthMismatch);
  EXPECT_EQ(kind([&] { fl::op_right_after({0.5}, {0.5}, 0.0); }), fl::ComposeError::Kind::InvalidParams);
}

TEST(Evaluate, SingleLeafCurveEqualsSignal) {
  const auto tree = fl::parse_tree(R"({"expert":"CLIP","query":"dog"})");
  const fl::Curve x{0.1, 0.9, 0.4};
  const auto ev = fl::evaluate(tree, signals_for(tree, {x}));
  EXPECT_EQ(ev.curve.values, x);
  EXPECT_EQ(ev.attribution.rows(), 1u);
  EXPECT_EQ(ev.attribution.frames(), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Evaluate, ConstantComposition) {
  const fl::Curve half(5, 0.5);
  // AND(a, OR(b, c)) = 0.5 * (1 - 0.5^2).
  const auto two = fl::parse_tree(R"({"op":"AND","children":[{"expert":"CLIP","query":"a"},
      {"op":"OR","children":[{"expert":"ASR","query":"b"},{"expert":"OCR","query":"c"}]}]})");
  for (double v : fl::evaluate(two, signals_for(two, {half, half, half})).curve.values) {
    EXPECT_EQ(v, oracle::product({0.5, oracle::or_closed_form({0.5, 0.5})}));
    EXPECT_EQ(v, 0.375);
  }
  // AND(a, OR(b, c, d)) = 0.5 * (1 - 0.5^3).
  const auto three = fl::parse_tree(R"({"op":"AND","children":[{"expert":"CLIP","query":"a"},
      {"op":"OR","children":[{"expert":"ASR","query":"b"},{"expert":"OCR","query":"c"},{"expert":"OVD","query":"d"}]}]})");
  for (double v : fl::evaluate(three, signals_for(three, {half, half, half, half})).curve.values) {
    EXPECT_EQ(v, 0.4375);
  }
}

TEST(Evaluate, MultipleChoicePatternPeaksWhereContextAndOptionCoFire) {
  const auto doc = json::parse(R"({"op":"AND","children":[
      {"op":"AND","children":[{"expert":"CLIP","query":"kitchen"},{"expert":"ASR","query":"recipe"}]},
      {"op":"OR","children":[{"expert":"OVD","query":"knife"},{"expert":"OVD","query":"pan"},
                             {"expert":"OVD","query":"spoon"},{"expert":"OVD","query":"bowl"}]}]})");
  const auto tree = fl::parse_tree(doc.dump());
  ASSERT_EQ(tree.leaf_count(), 6u);
  const std::size_t n = 30;
  std::vector<fl::Curve> rows(6, fl::Curve(n, 0.05));
  for (std::size_t t = 10; t < 20; ++t) rows[0][t] = rows[1][t] = 0.9;  // shared context
  rows[3][15] = 0.9;                                                    // option 2 inside
  rows[4][25] = 0.9;                                                    // option 3 outside
  const auto ev = fl::evaluate(tree, signals_for(tree, rows));
  std::size_t next = 0;
  const auto want = naive_eval(doc, rows, next, 2.0);
  for (std::size_t t = 0; t < n; ++t) EXPECT_NEAR(ev.curve[t], want[t], 1e-15);
  EXPECT_EQ(std::max_element(ev.curve.values.begin(), ev.curve.values.end()) - ev.curve.values.begin(), 15);
}

TEST(Evaluate, MatchesNaiveRecursionOnRandomTrees) {
  gen::Rng rng(83);
  for (int i = 0; i < 1000; ++i) {
    const auto doc = gen::random_tree(rng, gen::random_expert_subset(rng));
    const auto tree = fl::parse_tree(doc.dump());
    const auto n = rng.between(1, 16);
    std::vector<fl::Curve> rows;
    for (std::size_t l = 0; l < tree.leaf_count(); ++l) rows.push_back(rng.curve(n));
    const double kappa = rng.range(0.5, 3.0);
    const auto ev = fl::evaluate(tree, signals_for(tree, rows), {kappa});
    std::size_t next = 0;
    const auto want = naive_eval(doc, rows, next, kappa);
    ASSERT_EQ(next, rows.size());
    for (std::size_t t = 0; t < n; ++t) {
      EXPECT_NEAR(ev.curve[t], want[t], 1e-12);
      EXPECT_GE(ev.curve[t], 0.0);
      EXPECT_LE(ev.curve[t], 1.0);
    }
    // Attribution rows are the leaf inputs, bit for bit.
    for (std::size_t l = 0; l < rows.size(); ++l) {
      EXPECT_EQ(ev.attribution.row({static_cast<std::uint32_t>(l)}), rows[l]);
    }
  }
}

TEST(Evaluate, MissingOrRaggedLeafSignals) {
  const auto tree = fl::parse_tree(
      R"({"op":"OR","children":[{"expert":"CLIP","query":"a"},{"expert":"CLIP","query":"b"}]})");
  fl::LeafSignals partial{{fl::LeafId{0}, fl::Signal{{0.5}, fl::SignalStage::Smoothed, {0}}}};
  try {
    fl::evaluate(tree, partial);
    FAIL();
  } catch (const fl::ComposeError& e) {
    EXPECT_EQ(e.kind(), fl::ComposeError::Kind::MissingLeafSignal);
  }
  EXPECT_THROW(fl::evaluate(tree, signals_for(tree, {{0.5}, {0.5, 0.5}})), fl::ComposeError);
}

TEST(Attribution, RestrictToSelectsColumns) {
  const fl::AttributionMatrix m({{0.1, 0.2, 0.3, 0.4}, {1, 2, 3, 4}}, {0, 1, 2, 3});
  const std::vector<std::size_t> frames{3, 1};
  const auto sub = m.restrict_to(frames);
  EXPECT_EQ(sub.cols(), 2u);
  EXPECT_EQ(sub.row({0}), (fl::Curve{0.4, 0.2}));
  EXPECT_EQ(sub.at({1}, 0), 4.0);
  const std::vector<std::size_t> bad{9};
  EXPECT_THROW(m.restrict_to(bad), std::out_of_range);
}
