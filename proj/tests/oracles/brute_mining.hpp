#pragma once

// Test oracle: frequent patterns by listing every connected edge subset of
// every graph, canonicalizing each with the DFS enumeration oracle, and
// counting distinct supporting graphs.

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <vector>

#include "apiguard/dfs_code.hpp"
#include "oracles/dfs_enumeration.hpp"

namespace oracle {

struct SeqLess {
  bool operator()(const apiguard::CodeSeq& a, const apiguard::CodeSeq& b) const {
    return apiguard::compare(std::span<const apiguard::CodeEdge>(a),
                             std::span<const apiguard::CodeEdge>(b)) < 0;
  }
};

struct BruteMining {
  std::map<int, std::set<std::size_t>> vertices;                  // label -> graphs
  std::map<apiguard::CodeSeq, std::set<std::size_t>, SeqLess> edges;  // code -> graphs
  apiguard::LabelIndex index;
};

inline BruteMining mine_by_enumeration(std::span<const apiguard::Eaug> graphs, int max_edges) {
  using namespace apiguard;
  BruteMining out;
  out.index = LabelIndex::from_graphs(graphs);
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const IndexedGraph g = index_graph(graphs[gi], out.index);
    for (int l : g.vlabel) out.vertices[l].insert(gi);
    // Flat edge list.
    struct Flat {
      int s, d, kind;
    };
    std::vector<Flat> flat(static_cast<std::size_t>(g.edge_count));
    for (int v = 0; v < g.vertex_count(); ++v)
      for (const AdjEdge& a : g.adj[v])
        if (a.dir == 0) flat[a.eid] = {v, a.to, a.kind};
    const int m = g.edge_count;
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
      if (std::popcount(mask) > max_edges) continue;
      std::vector<int> parent(static_cast<std::size_t>(g.vertex_count()));
      std::iota(parent.begin(), parent.end(), 0);
      auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
      };
      std::vector<int> remap(static_cast<std::size_t>(g.vertex_count()), -1);
      IndexedGraph sub;
      auto vertex = [&](int v) {
        if (remap[v] < 0) {
          remap[v] = sub.vertex_count();
          sub.vlabel.push_back(g.vlabel[v]);
          sub.adj.emplace_back();
        }
        return remap[v];
      };
      for (int e = 0; e < m; ++e) {
        if (!(mask >> e & 1u)) continue;
        const int s = vertex(flat[e].s), d = vertex(flat[e].d);
        parent[find(flat[e].s)] = find(flat[e].d);
        sub.adj[s].push_back({d, flat[e].kind, 0, sub.edge_count});
        sub.adj[d].push_back({s, flat[e].kind, 1, sub.edge_count});
        ++sub.edge_count;
      }
      std::set<int> roots;
      for (int v = 0; v < g.vertex_count(); ++v)
        if (remap[v] >= 0) roots.insert(find(v));
      if (roots.size() != 1) continue;
      out.edges[min_code_by_enumeration(sub)].insert(gi);
    }
  }
  return out;
}

// Patterns with support >= min_sup as (public code, ascending graph indices),
// sorted by code.
inline std::vector<std::pair<apiguard::DfsCode, std::vector<std::size_t>>> frequent_by_enumeration(
    std::span<const apiguard::Eaug> graphs, int min_sup, int max_edges) {
  using namespace apiguard;
  const BruteMining brute = mine_by_enumeration(graphs, max_edges);
  std::vector<std::pair<DfsCode, std::vector<std::size_t>>> out;
  for (const auto& [l, ids] : brute.vertices)
    if (static_cast<int>(ids.size()) >= min_sup)
      out.emplace_back(single_vertex_code(brute.index.at(l)), std::vector<std::size_t>(ids.begin(), ids.end()));
  for (const auto& [code, ids] : brute.edges)
    if (static_cast<int>(ids.size()) >= min_sup)
      out.emplace_back(to_public(code, brute.index), std::vector<std::size_t>(ids.begin(), ids.end()));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace oracle
