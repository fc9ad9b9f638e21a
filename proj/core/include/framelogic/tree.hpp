#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "framelogic/expert_kind.hpp"

namespace framelogic {

enum class OperatorKind : std::uint8_t { And, Or, Seq, RightAfter };

std::string_view to_string(OperatorKind op);
std::optional<OperatorKind> parse_operator(std::string_view name);

/// Dense pre-order index of a leaf; row key of the attribution matrix.
struct LeafId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(LeafId, LeafId) = default;
};

struct Leaf {
  LeafId id;
  ExpertKind expert = ExpertKind::Clip;
  std::string query;  // trimmed, original case
  std::string path;   // JSON path of the node in the source document
};

using NodeIndex = std::uint32_t;

struct TreeNode {
  std::optional<OperatorKind> op;  // empty for leaves
  std::vector<NodeIndex> children;
  LeafId leaf;  // meaningful only when is_leaf()
  std::string path;

  bool is_leaf() const { return !op.has_value(); }
};

/// Validated, immutable query program. Node 0 is the root; nodes are stored
/// in depth-first pre-order so leaf ids follow node order.
class LogicTree {
 public:
  const TreeNode& root() const { return nodes_.front(); }
  const TreeNode& node(NodeIndex i) const { return nodes_.at(i); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  const std::vector<Leaf>& leaves() const { return leaves_; }
  const Leaf& leaf(LeafId id) const { return leaves_.at(id.value); }
  std::size_t leaf_count() const { return leaves_.size(); }

  /// A bare leaf has depth 1.
  std::size_t depth() const { return depth_; }
  ExpertSet experts_used() const;

 private:
  friend class TreeParser;
  std::vector<TreeNode> nodes_;
  std::vector<Leaf> leaves_;
  std::size_t depth_ = 0;
};

struct ParseOptions {
  ExpertSet active_experts = ExpertSet::all();
  bool strict_schema = true;  // reject unknown object keys
  std::size_t max_depth = 64;
  std::size_t max_leaves = 4096;
};

enum class TreeErrorKind { Syntax, Schema, Arity, InactiveExpert, EmptyQuery, Limit };

std::string_view to_string(TreeErrorKind kind);

class TreeError : public std::runtime_error {
 public:
  TreeError(TreeErrorKind kind, std::string path, const std::string& message);

  TreeErrorKind kind() const noexcept { return kind_; }
  /// JSON path of the offending node ("$" for the document root).
  const std::string& path() const noexcept { return path_; }

 private:
  TreeErrorKind kind_;
  std::string path_;
};

/// Parses and validates a logic-tree document. Throws TreeError.
LogicTree parse_tree(std::string_view document, const ParseOptions& options = {});

/// Canonical compact JSON; leaves are written with an explicit "op":"LEAF".
std::string serialize_tree(const LogicTree& tree);

/// Leaf ids grouped by expert, pre-order within each group. Experts without
/// leaves have no entry.
std::map<ExpertKind, std::vector<LeafId>> leaves_by_expert(const LogicTree& tree);

}  // namespace framelogic
