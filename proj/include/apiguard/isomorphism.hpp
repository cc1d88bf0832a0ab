#pragma once

// Label-preserving subgraph monomorphism (non-induced): an injective node map
// that keeps node kind, label, and scope, and maps every pattern edge onto a
// target edge of the same kind and direction.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "apiguard/graph.hpp"

namespace apiguard {

// Adjacency in matrix form; per ordered pair a bitmask of edge kinds.
class PreparedGraph {
 public:
  PreparedGraph() = default;
  explicit PreparedGraph(const Eaug& g) {
    const std::size_t n = g.nodes.size();
    labels_.reserve(n);
    std::unordered_map<std::string, int> pos;
    for (const Node& node : g.nodes) {
      pos.emplace(node.id, static_cast<int>(labels_.size()));
      labels_.push_back(node.node_label());
    }
    mask_.assign(n * n, 0);
    out_.assign(n, 0);
    in_.assign(n, 0);
    neighbors_.resize(n);
    for (const Edge& e : g.edges) {
      const int s = pos.at(e.src), d = pos.at(e.dst);
      std::uint8_t& m = mask_[static_cast<std::size_t>(s) * n + static_cast<std::size_t>(d)];
      const std::uint8_t bit = static_cast<std::uint8_t>(1u << static_cast<int>(e.kind));
      if (m & bit) continue;
      m |= bit;
      ++out_[s];
      ++in_[d];
      neighbors_[s].push_back(d);
      neighbors_[d].push_back(s);
      ++edges_;
    }
    for (auto& nb : neighbors_) {
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
  }

  int size() const { return static_cast<int>(labels_.size()); }
  int edge_count() const { return edges_; }
  const NodeLabel& label(int v) const { return labels_[v]; }
  std::uint8_t mask(int s, int d) const {
    return mask_[static_cast<std::size_t>(s) * labels_.size() + static_cast<std::size_t>(d)];
  }
  int out_degree(int v) const { return out_[v]; }
  int in_degree(int v) const { return in_[v]; }
  const std::vector<int>& neighbors(int v) const { return neighbors_[v]; }

 private:
  std::vector<NodeLabel> labels_;
  std::vector<std::uint8_t> mask_;
  std::vector<int> out_, in_;
  std::vector<std::vector<int>> neighbors_;
  int edges_ = 0;
};

namespace detail {

class Matcher {
 public:
  Matcher(const PreparedGraph& p, const PreparedGraph& t) : p_(p), t_(t) {}

  std::optional<std::vector<int>> find() {
    const int n = p_.size();
    if (n == 0) return std::vector<int>{};
    if (n > t_.size() || p_.edge_count() > t_.edge_count()) return std::nullopt;

    candidates_.assign(static_cast<std::size_t>(n), {});
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < t_.size(); ++v) {
        if (t_.label(v) == p_.label(u) && t_.out_degree(v) >= p_.out_degree(u) &&
            t_.in_degree(v) >= p_.in_degree(u))
          candidates_[u].push_back(v);
      }
      if (candidates_[u].empty()) return std::nullopt;
    }
    order_ = matching_order();
    map_.assign(static_cast<std::size_t>(n), -1);
    taken_.assign(static_cast<std::size_t>(t_.size()), 0);
    if (extend(0)) return map_;
    return std::nullopt;
  }

 private:
  // Most constrained first, then stay connected to what is already placed.
  std::vector<int> matching_order() const {
    const int n = p_.size();
    std::vector<int> order;
    std::vector<char> placed(static_cast<std::size_t>(n), 0);
    while (static_cast<int>(order.size()) < n) {
      int best = -1;
      int best_links = -1;
      for (int u = 0; u < n; ++u) {
        if (placed[u]) continue;
        int links = 0;
        for (int w : p_.neighbors(u)) links += placed[w];
        if (best < 0 || links > best_links ||
            (links == best_links && candidates_[u].size() < candidates_[best].size())) {
          best = u;
          best_links = links;
        }
      }
      placed[best] = 1;
      order.push_back(best);
    }
    return order;
  }

  bool consistent(int u, int v) const {
    for (int w : p_.neighbors(u)) {
      const int tw = map_[w];
      if (tw < 0) continue;
      const std::uint8_t fwd = p_.mask(u, w), bwd = p_.mask(w, u);
      if ((t_.mask(v, tw) & fwd) != fwd || (t_.mask(tw, v) & bwd) != bwd) return false;
    }
    // Self loops.
    const std::uint8_t self = p_.mask(u, u);
    return (t_.mask(v, v) & self) == self;
  }

  bool extend(std::size_t depth) {
    if (depth == order_.size()) return true;
    const int u = order_[depth];
    for (int v : candidates_[u]) {
      if (taken_[v] || !consistent(u, v)) continue;
      map_[u] = v;
      taken_[v] = 1;
      if (extend(depth + 1)) return true;
      map_[u] = -1;
      taken_[v] = 0;
    }
    return false;
  }

  const PreparedGraph& p_;
  const PreparedGraph& t_;
  std::vector<std::vector<int>> candidates_;
  std::vector<int> order_;
  std::vector<int> map_;
  std::vector<char> taken_;
};

}  // namespace detail

// Pattern node index -> target node index, if an embedding exists.
inline std::optional<std::vector<int>> find_embedding(const PreparedGraph& pattern,
                                                      const PreparedGraph& target) {
  return detail::Matcher(pattern, target).find();
}

inline bool is_subgraph(const PreparedGraph& pattern, const PreparedGraph& target) {
  return find_embedding(pattern, target).has_value();
}

inline bool is_subgraph(const Eaug& pattern, const Eaug& target) {
  return is_subgraph(PreparedGraph(pattern), PreparedGraph(target));
}

}  // namespace apiguard
