#pragma once

// Query selection for the labeling loop: the initial random sample, the
// support floor a pattern needs before it can be significant, corpus
// coverage, and the coverage-maximizing batch choice.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apiguard/corpus.hpp"
#include "apiguard/isomorphism.hpp"
#include "apiguard/miner.hpp"
#include "apiguard/rng.hpp"
#include "apiguard/stats.hpp"

namespace apiguard {

struct SelectorConfig {
  double batch_fraction = 0.005;
  double label_budget_fraction = 0.05;
  double coverage_target = 0.95;
  int initial_batch = 30;
  double alpha = 0.05;

  void validate() const {
    if (!(batch_fraction > 0.0 && batch_fraction <= label_budget_fraction &&
          label_budget_fraction <= 1.0))
      throw Error("need 0 < batch_fraction <= label_budget_fraction <= 1");
    if (!(coverage_target > 0.0 && coverage_target <= 1.0))
      throw Error("coverage_target must be in (0, 1]");
    if (initial_batch < 1) throw Error("initial_batch must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must be in (0, 1)");
  }
  friend bool operator==(const SelectorConfig&, const SelectorConfig&) = default;
};

inline std::vector<std::string> initial_sample(const Corpus& corpus, const SelectorConfig& cfg,
                                               std::uint64_t seed) {
  std::vector<std::size_t> idx(corpus.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(std::min(idx.size(), static_cast<std::size_t>(cfg.initial_batch)));
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(corpus.examples[i].id);
  return out;
}

// Smallest k such that a pattern found in k labeled graphs, all of one class,
// reaches the critical value. nullopt when no k up to the larger class works.
inline std::optional<int> compute_min_signif(std::int64_t n_correct, std::int64_t n_misuse,
                                             double alpha) {
  const double critical = chi_square_critical(alpha);
  const std::int64_t top = std::max(n_correct, n_misuse);
  for (std::int64_t k = 1; k <= top; ++k) {
    double best = 0.0;
    if (k <= n_correct) best = std::max(best, chi_square({k, n_correct - k, 0, n_misuse}));
    if (k <= n_misuse) best = std::max(best, chi_square({0, n_correct, k, n_misuse - k}));
    if (best >= critical) return static_cast<int>(k);
  }
  return std::nullopt;
}

// covered[i] iff example i contains at least one feature pattern.
inline std::vector<bool> covered_mask(const std::vector<SubgraphFeature>& features,
                                      const Corpus& corpus) {
  std::vector<PreparedGraph> patterns;
  for (const auto& f : features) patterns.emplace_back(f.pattern);
  std::vector<bool> out(corpus.size(), false);
  if (patterns.empty()) return out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const PreparedGraph g(corpus.examples[i].graph);
    for (const auto& p : patterns)
      if (is_subgraph(p, g)) {
        out[i] = true;
        break;
      }
  }
  return out;
}

inline double coverage(const std::vector<SubgraphFeature>& features, const Corpus& corpus) {
  if (corpus.empty()) return 1.0;
  const auto mask = covered_mask(features, corpus);
  return static_cast<double>(std::count(mask.begin(), mask.end(), true)) /
         static_cast<double>(corpus.size());
}

// One batch-selection problem over a pool of graphs 0..graph_count-1. A
// pattern counts toward the objective once at least `n` of its carriers are
// selected; the objective is the number of pool graphs carried by counted
// patterns.
struct BatchInstance {
  std::size_t graph_count = 0;
  std::vector<std::vector<std::size_t>> carriers;  // per pattern
  std::vector<bool> selectable;                    // per graph
  int n = 1;
  std::size_t s = 0;
};

inline std::size_t batch_objective(const BatchInstance& inst,
                                   const std::vector<std::size_t>& selected) {
  std::vector<char> in(inst.graph_count, 0), hit(inst.graph_count, 0);
  for (std::size_t g : selected) in[g] = 1;
  std::size_t total = 0;
  for (const auto& c : inst.carriers) {
    int have = 0;
    for (std::size_t g : c) have += in[g];
    if (have < inst.n) continue;
    for (std::size_t g : c)
      if (!hit[g]) {
        hit[g] = 1;
        ++total;
      }
  }
  return total;
}

namespace detail {

// Patterns that can still qualify, deduplicated and in canonical order so the
// result does not depend on how the caller ordered them.
inline std::vector<std::vector<std::size_t>> usable_patterns(const BatchInstance& inst) {
  std::vector<std::vector<std::size_t>> out;
  for (auto c : inst.carriers) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    const auto open = std::count_if(c.begin(), c.end(), [&](std::size_t g) { return inst.selectable[g]; });
    if (open >= inst.n && inst.n >= 1) out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Selectable graphs carrying a usable pattern, in seeded order.
inline std::vector<std::size_t> candidate_graphs(const BatchInstance& inst,
                                                 const std::vector<std::vector<std::size_t>>& pats,
                                                 std::uint64_t seed) {
  std::vector<char> mark(inst.graph_count, 0);
  for (const auto& c : pats)
    for (std::size_t g : c)
      if (inst.selectable[g]) mark[g] = 1;
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < inst.graph_count; ++g)
    if (mark[g]) out.push_back(g);
  Rng rng(seed);
  rng.shuffle(out);
  return out;
}

using Bits = std::vector<std::uint64_t>;

inline Bits to_bits(const std::vector<std::size_t>& ids, std::size_t n) {
  Bits b((n + 63) / 64, 0);
  for (std::size_t i : ids) b[i / 64] |= std::uint64_t{1} << (i % 64);
  return b;
}

}  // namespace detail

// Optimal batch by enumerating every subset of the candidate graphs with at
// most s members; smaller subsets win ties. Meant for up to ~20 candidates.
inline std::vector<std::size_t> select_exact(const BatchInstance& inst, std::uint64_t seed) {
  const auto pats = detail::usable_patterns(inst);
  const auto cand = detail::candidate_graphs(inst, pats, seed);
  const std::size_t m = cand.size();
  if (m > 30) throw Error("exact batch selection is limited to 30 candidate graphs");
  std::vector<std::size_t> slot(inst.graph_count, m);
  for (std::size_t i = 0; i < m; ++i) slot[cand[i]] = i;
  std::vector<std::uint32_t> masks;
  std::vector<detail::Bits> cover;
  for (const auto& c : pats) {
    std::uint32_t mask = 0;
    for (std::size_t g : c)
      if (slot[g] < m) mask |= 1u << slot[g];
    masks.push_back(mask);
    cover.push_back(detail::to_bits(c, inst.graph_count));
  }
  std::size_t ceiling = 0;
  {
    detail::Bits all((inst.graph_count + 63) / 64, 0);
    for (const auto& b : cover)
      for (std::size_t w = 0; w < b.size(); ++w) all[w] |= b[w];
    for (auto w : all) ceiling += static_cast<std::size_t>(std::popcount(w));
  }
  auto score = [&](std::uint32_t set) {
    detail::Bits u((inst.graph_count + 63) / 64, 0);
    bool any = false;
    for (std::size_t p = 0; p < masks.size(); ++p) {
      if (std::popcount(set & masks[p]) < inst.n) continue;
      any = true;
      for (std::size_t w = 0; w < u.size(); ++w) u[w] |= cover[p][w];
    }
    std::size_t total = 0;
    if (any)
      for (auto w : u) total += static_cast<std::size_t>(std::popcount(w));
    return total;
  };
  std::uint32_t best = 0;
  std::size_t best_score = 0;
  const std::size_t kmax = std::min(inst.s, m);
  for (std::size_t k = 1; k <= kmax && best_score < ceiling; ++k) {
    // Gosper's hack over k-subsets.
    std::uint32_t set = (k == 32) ? ~0u : ((1u << k) - 1);
    const std::uint32_t limit = m == 32 ? 0 : (1u << m);
    while (set < limit || (m == 32 && set != 0)) {
      const std::size_t sc = score(set);
      if (sc > best_score) {
        best_score = sc;
        best = set;
        if (best_score == ceiling) break;
      }
      const std::uint32_t c = set & (~set + 1);
      const std::uint32_t r = set + c;
      if (r == 0) break;
      set = (((r ^ set) >> 2) / c) | r;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m; ++i)
    if (best >> i & 1u) out.push_back(cand[i]);
  std::sort(out.begin(), out.end());
  return out;
}

// Pattern-wise greedy: repeatedly complete the pattern with the most newly
// covered graphs per extra label needed, then improve by single swaps.
inline std::vector<std::size_t> select_greedy(const BatchInstance& inst, std::uint64_t seed,
                                              std::size_t swap_evaluations = 20000) {
  const auto pats = detail::usable_patterns(inst);
  const auto cand = detail::candidate_graphs(inst, pats, seed);
  std::vector<std::size_t> rank(inst.graph_count, cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) rank[cand[i]] = i;

  std::vector<char> in(inst.graph_count, 0);
  std::vector<std::size_t> chosen;
  std::vector<char> qualified(pats.size(), 0), hit(inst.graph_count, 0);
  auto refresh = [&] {
    for (std::size_t p = 0; p < pats.size(); ++p) {
      if (qualified[p]) continue;
      int have = 0;
      for (std::size_t g : pats[p]) have += in[g];
      if (have >= inst.n) {
        qualified[p] = 1;
        for (std::size_t g : pats[p]) hit[g] = 1;
      }
    }
  };
  while (chosen.size() < inst.s) {
    refresh();
    std::size_t best = pats.size(), best_gain = 0, best_need = 1;
    for (std::size_t p = 0; p < pats.size(); ++p) {
      if (qualified[p]) continue;
      std::size_t have = 0, open = 0, gain = 0;
      for (std::size_t g : pats[p]) {
        if (in[g]) ++have;
        else if (inst.selectable[g]) ++open;
        if (!hit[g]) ++gain;
      }
      const std::size_t need = static_cast<std::size_t>(inst.n) - have;
      if (gain == 0 || need > open || need > inst.s - chosen.size()) continue;
      // gain/need > best_gain/best_need, ties to the larger gain.
      const auto lhs = gain * best_need, rhs = best_gain * need;
      if (best == pats.size() || lhs > rhs || (lhs == rhs && gain > best_gain)) {
        best = p;
        best_gain = gain;
        best_need = need;
      }
    }
    if (best == pats.size()) break;
    std::vector<std::size_t> open;
    for (std::size_t g : pats[best])
      if (!in[g] && inst.selectable[g]) open.push_back(g);
    std::sort(open.begin(), open.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
    for (std::size_t i = 0; i < best_need; ++i) {
      in[open[i]] = 1;
      chosen.push_back(open[i]);
    }
  }

  // Single-swap local search within an evaluation budget.
  std::size_t current = batch_objective(inst, chosen), evals = 0;
  bool improved = !chosen.empty();
  while (improved && evals < swap_evaluations) {
    improved = false;
    for (std::size_t i = 0; i < chosen.size() && !improved && evals < swap_evaluations; ++i) {
      for (std::size_t g : cand) {
        if (in[g]) continue;
        auto trial = chosen;
        trial[i] = g;
        ++evals;
        const std::size_t sc = batch_objective(inst, trial);
        if (sc > current) {
          in[chosen[i]] = 0;
          in[g] = 1;
          chosen = std::move(trial);
          current = sc;
          improved = true;
          break;
        }
        if (evals >= swap_evaluations) break;
      }
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

inline constexpr std::size_t kExactCandidateLimit = 20;

inline std::vector<std::size_t> select_batch(const BatchInstance& inst, std::uint64_t seed) {
  const auto pats = detail::usable_patterns(inst);
  const auto cand = detail::candidate_graphs(inst, pats, seed);
  if (cand.empty() || inst.s == 0) return {};
  if (cand.size() <= kExactCandidateLimit) return select_exact(inst, seed);
  return select_greedy(inst, seed);
}

// s = ceil(batch_fraction * corpus size), never letting the labeled total pass
// ceil(label_budget_fraction * corpus size) + initial_batch.
inline std::size_t batch_size(const SelectorConfig& cfg, std::size_t corpus_size,
                              std::size_t labeled) {
  const auto s = static_cast<std::size_t>(std::ceil(cfg.batch_fraction * static_cast<double>(corpus_size) - 1e-9));
  const std::size_t cap = static_cast<std::size_t>(
                              std::ceil(cfg.label_budget_fraction * static_cast<double>(corpus_size) - 1e-9)) +
                          static_cast<std::size_t>(cfg.initial_batch);
  return labeled >= cap ? 0 : std::min(s, cap - labeled);
}

}  // namespace apiguard
