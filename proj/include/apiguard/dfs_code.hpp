#pragma once

// Canonical form of connected usage-graph patterns: minimum DFS codes over a
// directed, edge-labeled multigraph.
//
// A code is built over the undirected skeleton of the graph; every tuple also
// records whether the stored edge points along the DFS tuple (from -> to) or
// against it. Parallel edges are allowed, so a backward tuple may connect the
// rightmost vertex to its own DFS parent.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "apiguard/graph.hpp"

namespace apiguard {

enum class EdgeDirection : std::uint8_t { Along, Against };

// ---------------------------------------------------------------------------
// Integer-labelled internals shared by the canonicalizer and the miner.

// Interns node labels so that integer order equals NodeLabel order.
class LabelIndex {
 public:
  LabelIndex() = default;
  explicit LabelIndex(std::vector<NodeLabel> labels) : labels_(std::move(labels)) {
    std::sort(labels_.begin(), labels_.end());
    labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  }

  template <typename Graphs>
  static LabelIndex from_graphs(const Graphs& graphs) {
    std::vector<NodeLabel> all;
    for (const Eaug& g : graphs)
      for (const Node& n : g.nodes) all.push_back(n.node_label());
    return LabelIndex(std::move(all));
  }

  std::optional<int> find(const NodeLabel& l) const {
    auto it = std::lower_bound(labels_.begin(), labels_.end(), l);
    if (it == labels_.end() || *it != l) return std::nullopt;
    return static_cast<int>(it - labels_.begin());
  }
  const NodeLabel& at(int i) const { return labels_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return labels_.size(); }

 private:
  std::vector<NodeLabel> labels_;
};

struct AdjEdge {
  int to;
  int kind;
  int dir;  // 0: the stored edge leaves this vertex
  int eid;
};

struct IndexedGraph {
  std::vector<int> vlabel;
  std::vector<std::vector<AdjEdge>> adj;
  int edge_count = 0;

  int vertex_count() const { return static_cast<int>(vlabel.size()); }
};

// Vertices whose label is unknown to `index` get label -1.
inline IndexedGraph index_graph(const Eaug& g, const LabelIndex& index) {
  IndexedGraph out;
  std::unordered_map<std::string, int> pos;
  for (const Node& n : g.nodes) {
    pos.emplace(n.id, out.vertex_count());
    out.vlabel.push_back(index.find(n.node_label()).value_or(-1));
  }
  out.adj.resize(g.nodes.size());
  for (const Edge& e : g.edges) {
    const int s = pos.at(e.src), d = pos.at(e.dst), k = static_cast<int>(e.kind);
    out.adj[s].push_back({d, k, 0, out.edge_count});
    out.adj[d].push_back({s, k, 1, out.edge_count});
    ++out.edge_count;
  }
  return out;
}

struct CodeEdge {
  int from = 0;
  int to = 0;
  int from_label = 0;
  int kind = 0;
  int to_label = 0;
  int dir = 0;  // 0: along (stored src is `from`), 1: against

  bool forward() const { return from < to; }
  friend bool operator==(const CodeEdge&, const CodeEdge&) = default;
};

// gSpan order on tuples occupying the same position of two codes.
inline int compare(const CodeEdge& a, const CodeEdge& b) {
  if (a.from != b.from || a.to != b.to) {
    const bool af = a.forward(), bf = b.forward();
    bool less;
    if (af && bf) less = a.to < b.to || (a.to == b.to && a.from > b.from);
    else if (!af && !bf) less = a.from < b.from || (a.from == b.from && a.to < b.to);
    else if (!af) less = a.from < b.to;
    else less = a.to <= b.from;
    return less ? -1 : 1;
  }
  auto cmp = [](int x, int y) { return x < y ? -1 : (x > y ? 1 : 0); };
  if (int c = cmp(a.from_label, b.from_label)) return c;
  if (int c = cmp(a.kind, b.kind)) return c;
  if (int c = cmp(a.to_label, b.to_label)) return c;
  return cmp(a.dir, b.dir);
}

struct CodeEdgeLess {
  bool operator()(const CodeEdge& a, const CodeEdge& b) const { return compare(a, b) < 0; }
};

using CodeSeq = std::vector<CodeEdge>;

inline int compare(std::span<const CodeEdge> a, std::span<const CodeEdge> b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i)
    if (int c = compare(a[i], b[i])) return c;
  return a.size() < b.size() ? -1 : (a.size() > b.size() ? 1 : 0);
}

inline int vertex_count(std::span<const CodeEdge> code) {
  int n = 0;
  for (const CodeEdge& e : code) n = std::max({n, e.from + 1, e.to + 1});
  return n;
}

// DFS indices on the rightmost path, rightmost vertex first.
inline std::vector<int> rightmost_path(std::span<const CodeEdge> code) {
  std::vector<int> path;
  int expect = -1;
  for (std::size_t i = code.size(); i-- > 0;) {
    const CodeEdge& e = code[i];
    if (!e.forward()) continue;
    if (path.empty()) {
      path.push_back(e.to);
      path.push_back(e.from);
      expect = e.from;
    } else if (e.to == expect) {
      path.push_back(e.from);
      expect = e.from;
    }
  }
  if (path.empty()) path.push_back(0);
  return path;
}

inline IndexedGraph graph_of(std::span<const CodeEdge> code) {
  IndexedGraph g;
  const int n = vertex_count(code);
  g.vlabel.assign(static_cast<std::size_t>(n), -1);
  g.adj.resize(static_cast<std::size_t>(n));
  for (const CodeEdge& e : code) {
    g.vlabel[e.from] = e.from_label;
    g.vlabel[e.to] = e.to_label;
    const int src = e.dir == 0 ? e.from : e.to;
    const int dst = e.dir == 0 ? e.to : e.from;
    g.adj[src].push_back({dst, e.kind, 0, g.edge_count});
    g.adj[dst].push_back({src, e.kind, 1, g.edge_count});
    ++g.edge_count;
  }
  return g;
}

namespace detail {

// Greedy construction of the minimum code over all embeddings at once. At each
// step every surviving partial embedding proposes its legal next tuples; the
// smallest one is appended and embeddings that cannot produce it are dropped.
class MinCodeSearch {
 public:
  explicit MinCodeSearch(const IndexedGraph& g) : g_(g) {}

  // Returns the minimum code. With `probe`, stops as soon as the minimum
  // diverges from it and returns the (shorter or different) prefix built so far.
  CodeSeq run(const CodeSeq* probe = nullptr) {
    CodeSeq code;
    std::vector<Embedding> live;
    CodeEdge best{};
    bool have = false;
    for (int v = 0; v < g_.vertex_count(); ++v) {
      for (const AdjEdge& a : g_.adj[v]) {
        CodeEdge t{0, 1, g_.vlabel[v], a.kind, g_.vlabel[a.to], a.dir};
        int c = have ? compare(t, best) : -1;
        if (c < 0) {
          best = t;
          have = true;
          live.clear();
        }
        if (c <= 0) live.push_back(start(v, a));
      }
    }
    if (!have) return code;
    code.push_back(best);
    if (probe && !matches(*probe, code)) return code;

    while (static_cast<int>(code.size()) < g_.edge_count) {
      const std::vector<int> rmpath = rightmost_path(code);
      const int rightmost = rmpath.front();
      const int next = static_cast<int>(code.size()) == 0 ? 0 : vertex_count(code);
      have = false;
      std::vector<Embedding> survivors;
      for (Embedding& emb : live) {
        for (auto& [t, grown] : extensions(emb, rmpath, rightmost, next)) {
          int c = have ? compare(t, best) : -1;
          if (c < 0) {
            best = t;
            have = true;
            survivors.clear();
          }
          if (c <= 0) survivors.push_back(std::move(grown));
        }
      }
      if (!have) break;  // disconnected remainder
      code.push_back(best);
      live = std::move(survivors);
      if (probe && !matches(*probe, code)) return code;
    }
    return code;
  }

 private:
  struct Embedding {
    std::vector<int> vmap;     // dfs index -> graph vertex
    std::vector<int> inverse;  // graph vertex -> dfs index or -1
    std::vector<char> used;    // per graph edge
  };

  Embedding start(int v, const AdjEdge& a) const {
    Embedding e;
    e.vmap = {v, a.to};
    e.inverse.assign(static_cast<std::size_t>(g_.vertex_count()), -1);
    e.inverse[v] = 0;
    e.inverse[a.to] = 1;
    e.used.assign(static_cast<std::size_t>(g_.edge_count), 0);
    e.used[a.eid] = 1;
    return e;
  }

  static bool matches(const CodeSeq& probe, const CodeSeq& built) {
    const std::size_t k = built.size() - 1;
    return k < probe.size() && probe[k] == built[k];
  }

  std::vector<std::pair<CodeEdge, Embedding>> extensions(const Embedding& emb,
                                                         const std::vector<int>& rmpath,
                                                         int rightmost, int next) const {
    std::vector<std::pair<CodeEdge, Embedding>> out;
    const int vr = emb.vmap[rightmost];
    // Backward edges from the rightmost vertex to the rightmost path.
    for (const AdjEdge& a : g_.adj[vr]) {
      if (emb.used[a.eid]) continue;
      const int j = emb.inverse[a.to];
      if (j < 0 || std::find(rmpath.begin(), rmpath.end(), j) == rmpath.end()) continue;
      Embedding grown = emb;
      grown.used[a.eid] = 1;
      out.emplace_back(CodeEdge{rightmost, j, g_.vlabel[vr], a.kind, g_.vlabel[a.to], a.dir},
                       std::move(grown));
    }
    // Forward edges from any rightmost-path vertex to an undiscovered vertex.
    for (int i : rmpath) {
      const int vi = emb.vmap[i];
      for (const AdjEdge& a : g_.adj[vi]) {
        if (emb.used[a.eid] || emb.inverse[a.to] >= 0) continue;
        Embedding grown = emb;
        grown.used[a.eid] = 1;
        grown.vmap.push_back(a.to);
        grown.inverse[a.to] = next;
        out.emplace_back(CodeEdge{i, next, g_.vlabel[vi], a.kind, g_.vlabel[a.to], a.dir},
                         std::move(grown));
      }
    }
    return out;
  }

  const IndexedGraph& g_;
};

}  // namespace detail

inline CodeSeq min_code(const IndexedGraph& g) { return detail::MinCodeSearch(g).run(); }

// True when `code` is the minimum code of the graph it describes.
inline bool is_min(const CodeSeq& code) {
  if (code.empty()) return true;
  const IndexedGraph g = graph_of(code);
  const CodeSeq built = detail::MinCodeSearch(g).run(&code);
  return built.size() == code.size() && built.back() == code.back();
}

// ---------------------------------------------------------------------------
// Public, label-carrying representation.

struct DfsEdge {
  int from = 0;
  int to = 0;
  NodeLabel from_label;
  EdgeKind kind = EdgeKind::Order;
  NodeLabel to_label;
  EdgeDirection dir = EdgeDirection::Along;

  friend bool operator==(const DfsEdge&, const DfsEdge&) = default;
};

// Minimum DFS code of a connected pattern. A single-vertex pattern has no
// tuples and carries its label in `vertex`.
struct DfsCode {
  std::vector<DfsEdge> edges;
  std::optional<NodeLabel> vertex;

  std::size_t edge_count() const { return edges.size(); }
  friend bool operator==(const DfsCode&, const DfsCode&) = default;
};

inline int compare(const DfsEdge& a, const DfsEdge& b) {
  if (a.from != b.from || a.to != b.to) {
    CodeEdge x{a.from, a.to, 0, 0, 0, 0}, y{b.from, b.to, 0, 0, 0, 0};
    return compare(x, y);
  }
  if (auto c = a.from_label <=> b.from_label; c != 0) return c < 0 ? -1 : 1;
  if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
  if (auto c = a.to_label <=> b.to_label; c != 0) return c < 0 ? -1 : 1;
  if (a.dir != b.dir) return a.dir < b.dir ? -1 : 1;
  return 0;
}

// Single-vertex codes sort before edge codes; edge codes compare tuple-wise
// with a proper prefix being smaller.
inline int compare(const DfsCode& a, const DfsCode& b) {
  const bool av = a.edges.empty(), bv = b.edges.empty();
  if (av != bv) return av ? -1 : 1;
  if (av) {
    const NodeLabel empty{};
    auto c = a.vertex.value_or(empty) <=> b.vertex.value_or(empty);
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  const std::size_t n = std::min(a.edges.size(), b.edges.size());
  for (std::size_t i = 0; i < n; ++i)
    if (int c = compare(a.edges[i], b.edges[i])) return c;
  return a.edges.size() < b.edges.size() ? -1 : (a.edges.size() > b.edges.size() ? 1 : 0);
}

inline bool operator<(const DfsCode& a, const DfsCode& b) { return compare(a, b) < 0; }

inline DfsCode to_public(const CodeSeq& code, const LabelIndex& index) {
  DfsCode out;
  out.edges.reserve(code.size());
  for (const CodeEdge& e : code) {
    out.edges.push_back({e.from, e.to, index.at(e.from_label), static_cast<EdgeKind>(e.kind),
                         index.at(e.to_label),
                         e.dir == 0 ? EdgeDirection::Along : EdgeDirection::Against});
  }
  return out;
}

inline DfsCode single_vertex_code(const NodeLabel& label) { return {{}, label}; }

// Pattern graph with node ids "0", "1", ... in DFS order.
inline Eaug graph_of(const DfsCode& code) {
  Eaug g;
  if (code.edges.empty()) {
    if (code.vertex) g.nodes.push_back({"0", code.vertex->kind, code.vertex->label,
                                        code.vertex->scope, std::nullopt});
    return g;
  }
  std::vector<std::optional<NodeLabel>> labels;
  auto put = [&](int i, const NodeLabel& l) {
    if (static_cast<int>(labels.size()) <= i) labels.resize(static_cast<std::size_t>(i) + 1);
    labels[i] = l;
  };
  for (const DfsEdge& e : code.edges) {
    put(e.from, e.from_label);
    put(e.to, e.to_label);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const NodeLabel& l = labels[i].value();
    g.nodes.push_back({std::to_string(i), l.kind, l.label, l.scope, std::nullopt});
  }
  for (const DfsEdge& e : code.edges) {
    const int src = e.dir == EdgeDirection::Along ? e.from : e.to;
    const int dst = e.dir == EdgeDirection::Along ? e.to : e.from;
    g.edges.push_back({std::to_string(src), std::to_string(dst), e.kind});
  }
  return g;
}

// Canonical code of a connected graph. A lone vertex yields a single-vertex
// code; empty, disconnected, or edgeless multi-vertex graphs are rejected.
inline DfsCode min_dfs_code(const Eaug& g) {
  if (g.nodes.size() == 1 && g.edges.empty()) return single_vertex_code(g.nodes[0].node_label());
  if (g.edges.empty() || !is_connected(g)) throw Error("not canonicalizable");
  const LabelIndex index = LabelIndex::from_graphs(std::span<const Eaug>(&g, 1));
  const CodeSeq code = min_code(index_graph(g, index));
  return to_public(code, index);
}

}  // namespace apiguard
