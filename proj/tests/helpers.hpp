#pragma once

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "apiguard/graph.hpp"
#include "apiguard/rng.hpp"

namespace testing {

using apiguard::DataScope;
using apiguard::Eaug;
using apiguard::EdgeKind;
using apiguard::NodeKind;

struct N {
  std::string id;
  NodeKind kind;
  std::string label;
  DataScope scope = DataScope::None;
};
struct E {
  std::string src, dst;
  EdgeKind kind;
};

inline Eaug make_graph(const std::vector<N>& nodes, const std::vector<E>& edges) {
  Eaug g;
  for (const auto& n : nodes) g.nodes.push_back({n.id, n.kind, n.label, n.scope, std::nullopt});
  for (const auto& e : edges) g.edges.push_back({e.src, e.dst, e.kind});
  return g;
}

// Small connected random multigraph. Labels come from a tiny alphabet so that
// repeated labels, automorphisms, and parallel edges are common.
inline Eaug random_graph(apiguard::Rng& rng, int max_nodes, int max_edges, int label_count = 3,
                         int kind_count = 2) {
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_nodes)));
  Eaug g;
  for (int i = 0; i < n; ++i) {
    const bool data = rng.chance(0.3);
    g.nodes.push_back({std::to_string(i), data ? NodeKind::Data : NodeKind::Action,
                       std::string(1, static_cast<char>('a' + rng.below(label_count))),
                       data ? DataScope::Local : DataScope::None, std::nullopt});
  }
  std::set<std::tuple<int, int, int>> used;
  auto add = [&](int s, int d) {
    const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(kind_count)));
    if (!used.emplace(s, d, k).second) return false;
    const EdgeKind kinds[] = {EdgeKind::Order, EdgeKind::Def, EdgeKind::Recv, EdgeKind::Sel};
    g.edges.push_back({std::to_string(s), std::to_string(d), kinds[k % 4]});
    return true;
  };
  // Spanning tree first, then extra edges.
  for (int i = 1; i < n && static_cast<int>(g.edges.size()) < max_edges; ++i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
    if (rng.chance(0.5)) add(i, j);
    else add(j, i);
  }
  if (static_cast<int>(g.edges.size()) < n - 1) {
    // Not enough edge budget to connect everything: drop unreachable nodes.
    g.nodes.resize(g.edges.size() + 1);
  }
  const int extra = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_edges) + 1));
  for (int tries = 0; tries < 20 && static_cast<int>(g.edges.size()) < max_edges &&
                      static_cast<int>(g.edges.size()) < n - 1 + extra;
       ++tries) {
    const int s = static_cast<int>(rng.below(g.nodes.size()));
    const int d = static_cast<int>(rng.below(g.nodes.size()));
    if (s != d) add(s, d);
  }
  return g;
}

inline Eaug permute(const Eaug& g, apiguard::Rng& rng) {
  std::vector<std::size_t> perm(g.nodes.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  Eaug out;
  std::vector<std::string> rename(g.nodes.size());
  for (std::size_t i = 0; i < perm.size(); ++i) rename[perm[i]] = "p" + std::to_string(i);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    auto n = g.nodes[perm[i]];
    n.id = rename[perm[i]];
    out.nodes.push_back(n);
  }
  auto id_of = [&](const std::string& id) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      if (g.nodes[i].id == id) return rename[i];
    return std::string();
  };
  for (const auto& e : g.edges) out.edges.push_back({id_of(e.src), id_of(e.dst), e.kind});
  rng.shuffle(out.edges);
  return out;
}

}  // namespace testing
