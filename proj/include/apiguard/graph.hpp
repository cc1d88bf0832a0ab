#pragma once

// Extended API usage graph: a directed, labeled multigraph describing how one
// method uses one API.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "apiguard/error.hpp"

namespace apiguard {

enum class NodeKind : std::uint8_t { Action, Data, Condition, MethodEntry };
enum class DataScope : std::uint8_t { Local, Field, Param, None };
enum class EdgeKind : std::uint8_t { Recv, Param, Def, Order, Sel, Sync, Throw, Handle };

inline constexpr std::array<std::string_view, 4> kNodeKindNames{"action", "data", "condition",
                                                                "entry"};
inline constexpr std::array<std::string_view, 4> kScopeNames{"local", "field", "param", "none"};
inline constexpr std::array<std::string_view, 8> kEdgeKindNames{
    "recv", "param", "def", "order", "sel", "sync", "throw", "handle"};

inline std::string_view to_string(NodeKind k) { return kNodeKindNames[static_cast<int>(k)]; }
inline std::string_view to_string(DataScope s) { return kScopeNames[static_cast<int>(s)]; }
inline std::string_view to_string(EdgeKind k) { return kEdgeKindNames[static_cast<int>(k)]; }

namespace detail {
template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<std::string_view, N>& names,
                std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  throw Error("unknown " + std::string(what) + " '" + std::string(text) + "'");
}
}  // namespace detail

inline NodeKind parse_node_kind(std::string_view s) {
  return detail::parse_enum<NodeKind>(s, kNodeKindNames, "node kind");
}
inline DataScope parse_scope(std::string_view s) {
  return detail::parse_enum<DataScope>(s, kScopeNames, "data scope");
}
inline EdgeKind parse_edge_kind(std::string_view s) {
  return detail::parse_enum<EdgeKind>(s, kEdgeKindNames, "edge kind");
}

// The part of a node that participates in matching and canonical codes.
struct NodeLabel {
  NodeKind kind = NodeKind::Action;
  std::string label;
  DataScope scope = DataScope::None;

  friend auto operator<=>(const NodeLabel& a, const NodeLabel& b) {
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    if (auto c = a.label.compare(b.label); c != 0) return c <=> 0;
    return a.scope <=> b.scope;
  }
  friend bool operator==(const NodeLabel&, const NodeLabel&) = default;
};

// "param:PrintWriter", "field:String", "get", ...
inline std::string render(const NodeLabel& l) {
  switch (l.scope) {
    case DataScope::Field: return "field:" + l.label;
    case DataScope::Param: return "param:" + l.label;
    default: return l.label;
  }
}

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Action;
  std::string label;
  DataScope scope = DataScope::None;
  // Source-level variable name for data nodes, used only to resolve
  // field/parameter names. Never part of matching.
  std::optional<std::string> var;

  NodeLabel node_label() const { return {kind, label, scope}; }
  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  std::string src;
  std::string dst;
  EdgeKind kind = EdgeKind::Order;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Eaug {
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  bool empty() const { return nodes.empty(); }
  friend bool operator==(const Eaug&, const Eaug&) = default;
};

// Node ids with this prefix are supertype context nodes.
inline constexpr std::string_view kSupertypePrefix = "super:";

struct Violation {
  std::string code;
  std::string detail;
};

inline std::vector<Violation> validate_graph(const Eaug& g) {
  std::vector<Violation> out;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t entries = 0;
  std::optional<std::size_t> entry;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const Node& n = g.nodes[i];
    if (!index.emplace(n.id, i).second) out.push_back({"duplicate node id", n.id});
    if (n.kind == NodeKind::MethodEntry) {
      ++entries;
      entry = i;
    }
    if (n.kind != NodeKind::Data && n.scope != DataScope::None)
      out.push_back({"scope on non-data node", n.id});
  }
  if (entries > 1) out.push_back({"multiple entries", std::to_string(entries) + " entry nodes"});

  std::set<std::tuple<std::string, std::string, EdgeKind>> seen;
  for (const Edge& e : g.edges) {
    if (!index.contains(e.src) || !index.contains(e.dst)) {
      out.push_back({"dangling edge", e.src + " -> " + e.dst});
      continue;
    }
    if (!seen.emplace(e.src, e.dst, e.kind).second)
      out.push_back({"duplicate parallel edge",
                     e.src + " -" + std::string(to_string(e.kind)) + "-> " + e.dst});
  }

  for (const Node& n : g.nodes) {
    if (!n.id.starts_with(kSupertypePrefix)) continue;
    bool linked = false;
    if (n.kind == NodeKind::Data && entry) {
      const std::string& entry_id = g.nodes[*entry].id;
      linked = std::any_of(g.edges.begin(), g.edges.end(), [&](const Edge& e) {
        return (e.src == n.id && e.dst == entry_id) || (e.dst == n.id && e.src == entry_id);
      });
    }
    if (!linked) out.push_back({"unlinked supertype node", n.id});
  }
  return out;
}

inline std::string describe(const std::vector<Violation>& vs) {
  std::string s;
  for (const auto& v : vs) {
    if (!s.empty()) s += "; ";
    s += v.code + " (" + v.detail + ")";
  }
  return s;
}

inline std::optional<std::size_t> node_index(const Eaug& g, std::string_view id) {
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i].id == id) return i;
  return std::nullopt;
}

// Weakly connected (direction ignored). The empty graph is not connected.
inline bool is_connected(const Eaug& g) {
  if (g.nodes.empty()) return false;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) index.emplace(g.nodes[i].id, i);
  std::vector<std::vector<std::size_t>> adj(g.nodes.size());
  for (const Edge& e : g.edges) {
    auto s = index.find(e.src), d = index.find(e.dst);
    if (s == index.end() || d == index.end()) return false;
    adj[s->second].push_back(d->second);
    adj[d->second].push_back(s->second);
  }
  std::vector<bool> seen(g.nodes.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == g.nodes.size();
}

// One line per node and edge; used by the feature table and error messages.
inline std::string render(const Eaug& g) {
  std::string s;
  for (const Node& n : g.nodes) {
    s += n.id + " [" + std::string(to_string(n.kind)) + "] " + render(n.node_label()) + "\n";
  }
  for (const Edge& e : g.edges) {
    s += e.src + " -" + std::string(to_string(e.kind)) + "-> " + e.dst + "\n";
  }
  return s;
}

}  // namespace apiguard
