#include "framelogic/tree.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "json.hpp"

namespace framelogic {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kOperatorNames = {"AND", "OR", "SEQ", "RIGHT_AFTER"};
constexpr std::string_view kLeafOp = "LEAF";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(OperatorKind op) {
  return kOperatorNames[static_cast<std::size_t>(op)];
}

std::optional<OperatorKind> parse_operator(std::string_view name) {
  auto key = upper(name);
  for (std::size_t i = 0; i < kOperatorNames.size(); ++i) {
    if (key == kOperatorNames[i]) return static_cast<OperatorKind>(i);
  }
  return std::nullopt;
}

std::string_view to_string(TreeErrorKind kind) {
  switch (kind) {
    case TreeErrorKind::Syntax: return "SyntaxError";
    case TreeErrorKind::Schema: return "SchemaError";
    case TreeErrorKind::Arity: return "ArityError";
    case TreeErrorKind::InactiveExpert: return "InactiveExpertError";
    case TreeErrorKind::EmptyQuery: return "EmptyQueryError";
    case TreeErrorKind::Limit: return "LimitError";
  }
  return "TreeError";
}

TreeError::TreeError(TreeErrorKind kind, std::string path, const std::string& message)
    : std::runtime_error(std::string(framelogic::to_string(kind)) + " at " + path + ": " +
                         message),
      kind_(kind),
      path_(std::move(path)) {}

ExpertSet LogicTree::experts_used() const {
  ExpertSet set;
  for (const auto& leaf : leaves_) set.insert(leaf.expert);
  return set;
}

class TreeParser {
 public:
  explicit TreeParser(const ParseOptions& options) : options_(options) {}

  LogicTree run(std::string_view document) {
    json doc = json::parse(document.begin(), document.end(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
      throw TreeError(TreeErrorKind::Syntax, "$", "document is not valid JSON");
    }
    visit(doc, "$", 1);
    return std::move(tree_);
  }

 private:
  [[noreturn]] static void fail(TreeErrorKind kind, const std::string& path,
                                const std::string& message) {
    throw TreeError(kind, path, message);
  }

  NodeIndex visit(const json& node, const std::string& path, std::size_t depth) {
    if (depth > options_.max_depth) {
      fail(TreeErrorKind::Limit, path,
           "tree depth exceeds limit " + std::to_string(options_.max_depth));
    }
    if (!node.is_object()) fail(TreeErrorKind::Schema, path, "node must be a JSON object");

    const bool has_children = node.contains("children");
    const bool has_expert = node.contains("expert");
    const bool has_query = node.contains("query");

    if (options_.strict_schema) {
      for (const auto& item : node.items()) {
        const auto& key = item.key();
        if (key != "op" && key != "children" && key != "expert" && key != "query") {
          fail(TreeErrorKind::Schema, path, "unknown field \"" + key + "\"");
        }
      }
    }

    std::optional<OperatorKind> op;
    bool explicit_leaf = false;
    if (auto it = node.find("op"); it != node.end()) {
      if (!it->is_string()) fail(TreeErrorKind::Schema, path, "\"op\" must be a string");
      const auto& name = it->get_ref<const std::string&>();
      if (upper(name) == kLeafOp) {
        explicit_leaf = true;
      } else {
        op = parse_operator(name);
        if (!op) fail(TreeErrorKind::Schema, path, "unknown op \"" + name + "\"");
      }
    } else if (!has_expert && !has_query) {
      fail(TreeErrorKind::Schema, path, "node has neither \"op\" nor leaf fields");
    }

    if (op) return visit_internal(node, *op, path, depth, has_expert || has_query);
    if (has_children) {
      fail(TreeErrorKind::Schema, path,
           explicit_leaf ? "LEAF node must not carry \"children\""
                         : "node mixes leaf fields with \"children\" and has no \"op\"");
    }
    return visit_leaf(node, path, depth);
  }

  NodeIndex visit_internal(const json& node, OperatorKind op, const std::string& path,
                           std::size_t depth, bool has_leaf_fields) {
    if (has_leaf_fields) {
      fail(TreeErrorKind::Schema, path,
           std::string(to_string(op)) + " node must not carry \"expert\" or \"query\"");
    }
    auto it = node.find("children");
    if (it == node.end()) fail(TreeErrorKind::Schema, path, "missing \"children\"");
    if (!it->is_array()) fail(TreeErrorKind::Schema, path, "\"children\" must be an array");

    const auto n = it->size();
    if (op == OperatorKind::RightAfter && n != 2) {
      fail(TreeErrorKind::Arity, path,
           "RIGHT_AFTER requires exactly 2 children [cause, effect], got " + std::to_string(n));
    }
    if (op != OperatorKind::RightAfter && n < 2) {
      fail(TreeErrorKind::Arity, path,
           std::string(to_string(op)) + " requires at least 2 children, got " +
               std::to_string(n));
    }

    const auto index = static_cast<NodeIndex>(tree_.nodes_.size());
    tree_.nodes_.push_back(TreeNode{op, {}, {}, path});
    tree_.depth_ = std::max(tree_.depth_, depth);

    std::vector<NodeIndex> children;
    children.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      children.push_back(
          visit((*it)[i], path + ".children[" + std::to_string(i) + "]", depth + 1));
    }
    tree_.nodes_[index].children = std::move(children);
    return index;
  }

  NodeIndex visit_leaf(const json& node, const std::string& path, std::size_t depth) {
    auto expert_it = node.find("expert");
    auto query_it = node.find("query");
    if (expert_it == node.end()) fail(TreeErrorKind::Schema, path, "leaf is missing \"expert\"");
    if (query_it == node.end()) fail(TreeErrorKind::Schema, path, "leaf is missing \"query\"");
    if (!expert_it->is_string()) fail(TreeErrorKind::Schema, path, "\"expert\" must be a string");
    if (!query_it->is_string()) fail(TreeErrorKind::Schema, path, "\"query\" must be a string");

    const auto& expert_name = expert_it->get_ref<const std::string&>();
    auto expert = parse_expert(expert_name);
    if (!expert) fail(TreeErrorKind::Schema, path, "unknown expert \"" + expert_name + "\"");
    if (!options_.active_experts.contains(*expert)) {
      fail(TreeErrorKind::InactiveExpert, path,
           "expert " + std::string(to_string(*expert)) + " is not in the active set {" +
               options_.active_experts.to_string() + "}");
    }

    auto query = trim(query_it->get_ref<const std::string&>());
    if (query.empty()) fail(TreeErrorKind::EmptyQuery, path, "leaf query is empty");

    if (tree_.leaves_.size() >= options_.max_leaves) {
      fail(TreeErrorKind::Limit, path,
           "leaf count exceeds limit " + std::to_string(options_.max_leaves));
    }

    LeafId id{static_cast<std::uint32_t>(tree_.leaves_.size())};
    tree_.leaves_.push_back(Leaf{id, *expert, std::string(query), path});
    const auto index = static_cast<NodeIndex>(tree_.nodes_.size());
    tree_.nodes_.push_back(TreeNode{std::nullopt, {}, id, path});
    tree_.depth_ = std::max(tree_.depth_, depth);
    return index;
  }

  const ParseOptions& options_;
  LogicTree tree_;
};

LogicTree parse_tree(std::string_view document, const ParseOptions& options) {
  return TreeParser(options).run(document);
}

namespace {

json to_json(const LogicTree& tree, NodeIndex index) {
  const auto& node = tree.node(index);
  if (node.is_leaf()) {
    const auto& leaf = tree.leaf(node.leaf);
    return json{{"op", kLeafOp}, {"expert", to_string(leaf.expert)}, {"query", leaf.query}};
  }
  json children = json::array();
  for (auto child : node.children) children.push_back(to_json(tree, child));
  return json{{"op", to_string(*node.op)}, {"children", std::move(children)}};
}

}  // namespace

std::string serialize_tree(const LogicTree& tree) { return to_json(tree, 0).dump(); }

std::map<ExpertKind, std::vector<LeafId>> leaves_by_expert(const LogicTree& tree) {
  std::map<ExpertKind, std::vector<LeafId>> groups;
  for (const auto& leaf : tree.leaves()) groups[leaf.expert].push_back(leaf.id);
  return groups;
}

}  // namespace framelogic
