#pragma once

// Context extensions on top of a plain usage graph: field/parameter scoping of
// data nodes, linking of field initializers, and supertype context nodes.

#include <set>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "apiguard/graph.hpp"

namespace apiguard {

struct EaugContext {
  std::vector<std::string> supertypes;
  std::vector<Eaug> initializer_graphs;
  std::set<std::string> param_names;
  std::set<std::string> field_names;

  bool empty() const {
    return supertypes.empty() && initializer_graphs.empty() && param_names.empty() &&
           field_names.empty();
  }
  friend bool operator==(const EaugContext&, const EaugContext&) = default;
};

class InvalidGraph : public Error {
 public:
  explicit InvalidGraph(std::vector<Violation> violations)
      : Error("invalid graph: " + describe(violations)), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

inline constexpr std::string_view kInitializerPrefix = "init:";
inline constexpr std::string_view kSyntheticEntryId = "@entry";

namespace detail {

inline bool from_initializer(const Node& n) { return n.id.starts_with(kInitializerPrefix); }

class GraphBuilder {
 public:
  explicit GraphBuilder(Eaug g) : g_(std::move(g)) {
    for (const Node& n : g_.nodes) ids_.insert(n.id);
    for (const Edge& e : g_.edges) edges_.emplace(e.src, e.dst, e.kind);
  }

  bool has_node(const std::string& id) const { return ids_.contains(id); }

  void add_node(Node n) {
    if (ids_.insert(n.id).second) g_.nodes.push_back(std::move(n));
  }
  void add_edge(const std::string& src, const std::string& dst, EdgeKind kind) {
    if (edges_.emplace(src, dst, kind).second) g_.edges.push_back({src, dst, kind});
  }
  Eaug& graph() { return g_; }

 private:
  Eaug g_;
  std::unordered_set<std::string> ids_;
  std::set<std::tuple<std::string, std::string, EdgeKind>> edges_;
};

}  // namespace detail

// Idempotent for a fixed context: every added node and edge has a stable id,
// and re-adding an existing one is a no-op.
inline Eaug apply_eaug_extensions(const Eaug& g, const EaugContext& ctx) {
  if (auto v = validate_graph(g); !v.empty()) throw InvalidGraph(std::move(v));
  for (const auto& name : ctx.param_names) {
    if (ctx.field_names.contains(name))
      throw Error("context name '" + name + "' is both a parameter and a field");
  }
  if (ctx.empty()) return g;

  detail::GraphBuilder b(g);

  // Method-side source actions: no incoming order edge from another method action.
  std::vector<std::string> method_sources;
  {
    std::unordered_set<std::string> method_actions;
    for (const Node& n : g.nodes)
      if (n.kind == NodeKind::Action && !detail::from_initializer(n)) method_actions.insert(n.id);
    std::unordered_set<std::string> has_pred;
    for (const Edge& e : g.edges)
      if (e.kind == EdgeKind::Order && method_actions.contains(e.src) &&
          method_actions.contains(e.dst))
        has_pred.insert(e.dst);
    for (const Node& n : g.nodes)
      if (method_actions.contains(n.id) && !has_pred.contains(n.id)) method_sources.push_back(n.id);
  }

  for (std::size_t k = 0; k < ctx.initializer_graphs.size(); ++k) {
    const Eaug& init = ctx.initializer_graphs[k];
    if (auto v = validate_graph(init); !v.empty()) throw InvalidGraph(std::move(v));
    const std::string prefix = std::string(kInitializerPrefix) + std::to_string(k) + "/";
    for (Node n : init.nodes) {
      n.id = prefix + n.id;
      b.add_node(std::move(n));
    }
    for (const Edge& e : init.edges) b.add_edge(prefix + e.src, prefix + e.dst, e.kind);

    std::unordered_set<std::string> has_succ;
    for (const Edge& e : init.edges) {
      if (e.kind != EdgeKind::Order) continue;
      auto dst = node_index(init, e.dst);
      if (dst && init.nodes[*dst].kind == NodeKind::Action) has_succ.insert(e.src);
    }
    for (const Node& n : init.nodes) {
      if (n.kind != NodeKind::Action || has_succ.contains(n.id)) continue;
      for (const auto& target : method_sources) b.add_edge(prefix + n.id, target, EdgeKind::Order);
    }
  }

  if (!ctx.supertypes.empty()) {
    std::string entry_id;
    for (const Node& n : b.graph().nodes)
      if (n.kind == NodeKind::MethodEntry) entry_id = n.id;
    if (entry_id.empty()) {
      entry_id = std::string(kSyntheticEntryId);
      b.add_node({entry_id, NodeKind::MethodEntry, "<entry>", DataScope::None, std::nullopt});
    }
    for (const auto& type : ctx.supertypes) {
      const std::string id = std::string(kSupertypePrefix) + type;
      b.add_node({id, NodeKind::Data, type, DataScope::None, std::nullopt});
      b.add_edge(id, entry_id, EdgeKind::Order);
    }
  }

  for (Node& n : b.graph().nodes) {
    if (n.kind != NodeKind::Data || n.id.starts_with(kSupertypePrefix)) continue;
    const std::string& name = n.var ? *n.var : n.label;
    if (ctx.param_names.contains(name)) n.scope = DataScope::Param;
    else if (ctx.field_names.contains(name)) n.scope = DataScope::Field;
  }
  return std::move(b.graph());
}

}  // namespace apiguard
