#pragma once

// Frequent connected subgraph mining (gSpan over the directed multigraph DFS
// codes), chi-square significance filtering, and CORK feature selection.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "apiguard/corpus.hpp"
#include "apiguard/dfs_code.hpp"
#include "apiguard/isomorphism.hpp"
#include "apiguard/stats.hpp"

namespace apiguard {

struct MinerConfig {
  int min_sup = 3;
  int max_edges = 6;
  double alpha = 0.05;

  void validate() const {
    if (min_sup < 1) throw Error("min_sup must be at least 1");
    if (max_edges < 1) throw Error("max_edges must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must be in (0, 1)");
  }
  friend bool operator==(const MinerConfig&, const MinerConfig&) = default;
};

struct FrequentPattern {
  DfsCode code;
  std::vector<std::size_t> graphs;  // indices into the mined list, ascending
};

// Called with a pattern's supporting graphs; returning false keeps the pattern
// in the output but skips all of its supergraphs.
using ExtendPredicate = std::function<bool(const std::vector<std::size_t>&)>;

namespace detail {

class GSpan {
 public:
  GSpan(std::span<const Eaug> graphs, const MinerConfig& cfg, const ExtendPredicate& extend)
      : cfg_(cfg), extend_(extend) {
    index_ = LabelIndex::from_graphs(graphs);
    for (const Eaug& g : graphs) indexed_.push_back(index_graph(g, index_));
  }

  std::vector<FrequentPattern> run() {
    single_vertices();
    std::map<CodeEdge, std::vector<Embedding>, CodeEdgeLess> roots;
    for (std::size_t gi = 0; gi < indexed_.size(); ++gi) {
      const IndexedGraph& g = indexed_[gi];
      for (int v = 0; v < g.vertex_count(); ++v)
        for (const AdjEdge& a : g.adj[v])
          roots[CodeEdge{0, 1, g.vlabel[v], a.kind, g.vlabel[a.to], a.dir}].push_back(
              {static_cast<std::uint32_t>(gi), {v, a.to}, {a.eid}});
    }
    CodeSeq code;
    for (auto& [edge, proj] : roots) {
      code.assign(1, edge);
      grow(code, proj);
    }
    std::sort(out_.begin(), out_.end(),
              [](const FrequentPattern& a, const FrequentPattern& b) { return a.code < b.code; });
    return std::move(out_);
  }

 private:
  struct Embedding {
    std::uint32_t graph;
    std::vector<int> vmap;  // dfs index -> graph vertex
    std::vector<int> used;  // graph edge ids in the embedding
  };

  static std::vector<std::size_t> support(const std::vector<Embedding>& proj) {
    std::vector<std::size_t> ids;
    for (const Embedding& e : proj)
      if (ids.empty() || ids.back() != e.graph) ids.push_back(e.graph);
    return ids;  // projections are built in graph order
  }

  void single_vertices() {
    std::map<int, std::vector<std::size_t>> carriers;
    for (std::size_t gi = 0; gi < indexed_.size(); ++gi) {
      std::set<int> seen(indexed_[gi].vlabel.begin(), indexed_[gi].vlabel.end());
      for (int l : seen) carriers[l].push_back(gi);
    }
    for (auto& [l, ids] : carriers)
      if (static_cast<int>(ids.size()) >= cfg_.min_sup)
        out_.push_back({single_vertex_code(index_.at(l)), std::move(ids)});
  }

  void grow(CodeSeq& code, const std::vector<Embedding>& proj) {
    std::vector<std::size_t> ids = support(proj);
    if (static_cast<int>(ids.size()) < cfg_.min_sup) return;
    if (!is_min(code)) return;
    const bool extend = !extend_ || extend_(ids);
    out_.push_back({to_public(code, index_), std::move(ids)});
    if (!extend || static_cast<int>(code.size()) >= cfg_.max_edges) return;

    const std::vector<int> rmpath = rightmost_path(code);
    const int rightmost = rmpath.front();
    const int next = vertex_count(code);
    std::map<CodeEdge, std::vector<Embedding>, CodeEdgeLess> children;
    for (const Embedding& emb : proj) {
      const IndexedGraph& g = indexed_[emb.graph];
      auto used = [&](int eid) {
        return std::find(emb.used.begin(), emb.used.end(), eid) != emb.used.end();
      };
      auto dfs_index = [&](int v) {
        auto it = std::find(emb.vmap.begin(), emb.vmap.end(), v);
        return it == emb.vmap.end() ? -1 : static_cast<int>(it - emb.vmap.begin());
      };
      const int vr = emb.vmap[rightmost];
      for (const AdjEdge& a : g.adj[vr]) {
        if (used(a.eid)) continue;
        const int j = dfs_index(a.to);
        if (j < 0 || std::find(rmpath.begin(), rmpath.end(), j) == rmpath.end()) continue;
        Embedding grown = emb;
        grown.used.push_back(a.eid);
        children[CodeEdge{rightmost, j, g.vlabel[vr], a.kind, g.vlabel[a.to], a.dir}].push_back(
            std::move(grown));
      }
      for (int i : rmpath) {
        const int vi = emb.vmap[i];
        for (const AdjEdge& a : g.adj[vi]) {
          if (used(a.eid) || dfs_index(a.to) >= 0) continue;
          Embedding grown = emb;
          grown.used.push_back(a.eid);
          grown.vmap.push_back(a.to);
          children[CodeEdge{i, next, g.vlabel[vi], a.kind, g.vlabel[a.to], a.dir}].push_back(
              std::move(grown));
        }
      }
    }
    for (auto& [edge, child] : children) {
      code.push_back(edge);
      grow(code, child);
      code.pop_back();
    }
  }

  MinerConfig cfg_;
  const ExtendPredicate& extend_;
  LabelIndex index_;
  std::vector<IndexedGraph> indexed_;
  std::vector<FrequentPattern> out_;
};

}  // namespace detail

// Every connected pattern with at most cfg.max_edges edges (single vertices
// included) contained in at least cfg.min_sup graphs, sorted by code.
inline std::vector<FrequentPattern> mine_frequent(std::span<const Eaug> graphs,
                                                  const MinerConfig& cfg,
                                                  const ExtendPredicate& extend = {}) {
  cfg.validate();
  return detail::GSpan(graphs, cfg, extend).run();
}

struct SubgraphFeature {
  DfsCode code;
  Eaug pattern;
  SupportStats stats;
  double chi2 = 0.0;
  std::vector<std::string> graph_ids;  // labeled graphs containing the pattern, sorted

  friend bool operator==(const SubgraphFeature&, const SubgraphFeature&) = default;
};

struct LabeledGraph {
  std::string id;
  const Eaug* graph;
  Label label;
};

inline std::vector<LabeledGraph> labeled_graphs(const Corpus& corpus,
                                                const std::map<std::string, Label>& labels) {
  std::vector<LabeledGraph> out;
  for (const UsageExample& ex : corpus.examples) {
    auto it = labels.find(ex.id);
    if (it != labels.end()) out.push_back({ex.id, &ex.graph, it->second});
  }
  return out;
}

// Stats and carrier ids of a pattern given the labeled graphs that contain it.
inline SubgraphFeature make_feature(const DfsCode& code, const std::vector<LabeledGraph>& labeled,
                                    const std::vector<std::size_t>& carriers) {
  SubgraphFeature f;
  f.code = code;
  f.pattern = graph_of(code);
  std::int64_t nc = 0, nm = 0;
  for (const LabeledGraph& g : labeled) (g.label == Label::Correct ? nc : nm) += 1;
  for (std::size_t i : carriers) {
    (labeled[i].label == Label::Correct ? f.stats.correct_hits : f.stats.misuse_hits) += 1;
    f.graph_ids.push_back(labeled[i].id);
  }
  f.stats.correct_misses = nc - f.stats.correct_hits;
  f.stats.misuse_misses = nm - f.stats.misuse_hits;
  f.chi2 = chi_square(f.stats);
  std::sort(f.graph_ids.begin(), f.graph_ids.end());
  return f;
}

// Recomputes stats against the current labeled set by matching.
inline SubgraphFeature refresh_feature(const SubgraphFeature& f,
                                       const std::vector<LabeledGraph>& labeled) {
  const PreparedGraph p(f.pattern);
  std::vector<std::size_t> carriers;
  for (std::size_t i = 0; i < labeled.size(); ++i)
    if (is_subgraph(p, PreparedGraph(*labeled[i].graph))) carriers.push_back(i);
  return make_feature(f.code, labeled, carriers);
}

// Frequent patterns of the labeled graphs with their 2x2 stats. With
// `prune_insignificant`, supergraphs of a pattern whose significance upper
// bound is below the critical value are not explored.
inline std::vector<SubgraphFeature> mine_features(const std::vector<LabeledGraph>& labeled,
                                                  const MinerConfig& cfg,
                                                  bool prune_insignificant) {
  std::vector<Eaug> graphs;
  graphs.reserve(labeled.size());
  for (const LabeledGraph& g : labeled) graphs.push_back(*g.graph);
  ExtendPredicate extend;
  if (prune_insignificant) {
    const double critical = chi_square_critical(cfg.alpha);
    std::int64_t nc = 0, nm = 0;
    for (const LabeledGraph& g : labeled) (g.label == Label::Correct ? nc : nm) += 1;
    extend = [&labeled, critical, nc, nm](const std::vector<std::size_t>& ids) {
      SupportStats s;
      for (std::size_t i : ids) (labeled[i].label == Label::Correct ? s.correct_hits : s.misuse_hits) += 1;
      s.correct_misses = nc - s.correct_hits;
      s.misuse_misses = nm - s.misuse_hits;
      return significance_upper_bound(s) >= critical;
    };
  }
  std::vector<SubgraphFeature> out;
  for (const FrequentPattern& p : mine_frequent(graphs, cfg, extend))
    out.push_back(make_feature(p.code, labeled, p.graphs));
  return out;
}

inline std::vector<SubgraphFeature> filter_significant(std::vector<SubgraphFeature> patterns,
                                                       const MinerConfig& cfg) {
  const double critical = chi_square_critical(cfg.alpha);
  std::erase_if(patterns, [&](const SubgraphFeature& f) { return !(f.chi2 >= critical); });
  return patterns;
}

// Number of (Correct, Misuse) pairs of labeled graphs whose indicator vectors
// over `features` are identical.
inline std::int64_t correspondence_count(const std::vector<SubgraphFeature>& features,
                                         const std::map<std::string, Label>& labels) {
  std::map<std::vector<bool>, std::pair<std::int64_t, std::int64_t>> groups;
  std::vector<std::set<std::string>> carriers;
  for (const auto& f : features) carriers.emplace_back(f.graph_ids.begin(), f.graph_ids.end());
  for (const auto& [id, label] : labels) {
    std::vector<bool> key;
    for (const auto& c : carriers) key.push_back(c.contains(id));
    auto& [c, m] = groups[key];
    (label == Label::Correct ? c : m) += 1;
  }
  std::int64_t total = 0;
  for (const auto& [key, cm] : groups) total += cm.first * cm.second;
  return total;
}

// Candidates are tried in decreasing `unlabeled_coverage` (then higher chi2,
// then smaller code); each is kept only if it strictly lowers the
// correspondence count. `initial` is the starting feature set.
inline std::vector<SubgraphFeature> cork_select(const std::vector<SubgraphFeature>& candidates,
                                                const std::vector<std::size_t>& unlabeled_coverage,
                                                const std::map<std::string, Label>& labels,
                                                std::vector<SubgraphFeature> initial = {}) {
  if (unlabeled_coverage.size() != candidates.size())
    throw Error("coverage ranking must have one entry per candidate");
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (unlabeled_coverage[a] != unlabeled_coverage[b])
      return unlabeled_coverage[a] > unlabeled_coverage[b];
    if (candidates[a].chi2 != candidates[b].chi2) return candidates[a].chi2 > candidates[b].chi2;
    return candidates[a].code < candidates[b].code;
  });

  // Partition of labeled graphs into classes of identical vectors.
  std::vector<std::string> ids;
  std::vector<Label> lab;
  for (const auto& [id, l] : labels) {
    ids.push_back(id);
    lab.push_back(l);
  }
  std::vector<int> cls(ids.size(), 0);
  auto split = [&](const SubgraphFeature& f, std::vector<int>& out) {
    std::map<std::pair<int, bool>, int> renumber;
    std::map<int, std::pair<std::int64_t, std::int64_t>> counts;
    out.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const bool hit = std::binary_search(f.graph_ids.begin(), f.graph_ids.end(), ids[i]);
      auto [it, fresh] = renumber.emplace(std::pair{cls[i], hit}, static_cast<int>(renumber.size()));
      out[i] = it->second;
      auto& [c, m] = counts[out[i]];
      (lab[i] == Label::Correct ? c : m) += 1;
    }
    std::int64_t total = 0;
    for (const auto& [k, cm] : counts) total += cm.first * cm.second;
    return total;
  };

  std::vector<SubgraphFeature> selected;
  std::vector<int> next;
  std::int64_t current = -1;
  {
    std::vector<int> tmp;
    SubgraphFeature none;
    current = split(none, tmp);
    cls = tmp;
  }
  for (auto& f : initial) {
    std::sort(f.graph_ids.begin(), f.graph_ids.end());
    current = split(f, next);
    cls = next;
    selected.push_back(std::move(f));
  }
  std::set<DfsCode> have;
  for (const auto& f : selected) have.insert(f.code);
  for (std::size_t i : order) {
    const SubgraphFeature& f = candidates[i];
    if (have.contains(f.code)) continue;
    const std::int64_t after = split(f, next);
    if (after < current) {
      current = after;
      cls = next;
      selected.push_back(f);
      have.insert(f.code);
    }
  }
  return selected;
}

}  // namespace apiguard
