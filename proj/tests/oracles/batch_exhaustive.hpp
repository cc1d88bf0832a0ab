#pragma once

// Test oracle for batch selection: brute force over every subset of
// selectable graphs, plus a random instance generator.

#include <algorithm>
#include <bit>
#include <set>

#include "apiguard/rng.hpp"
#include "apiguard/selector.hpp"

namespace oracle {

// Best objective over every subset of selectable graphs with at most s members.
inline std::size_t exhaustive_optimum(const apiguard::BatchInstance& inst) {
  std::vector<std::size_t> pool;
  for (std::size_t g = 0; g < inst.graph_count; ++g)
    if (inst.selectable[g]) pool.push_back(g);
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << pool.size()); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > inst.s) continue;
    std::set<std::size_t> chosen;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (mask >> i & 1u) chosen.insert(pool[i]);
    std::set<std::size_t> covered;
    for (const auto& c : inst.carriers) {
      int have = 0;
      for (std::size_t g : c) have += static_cast<int>(chosen.count(g));
      if (have >= inst.n) covered.insert(c.begin(), c.end());
    }
    best = std::max(best, covered.size());
  }
  return best;
}

// 4-20 graphs, 1-8 patterns, n in 1..4, s in 1..6.
inline apiguard::BatchInstance random_instance(apiguard::Rng& rng) {
  apiguard::BatchInstance inst;
  inst.graph_count = 4 + rng.below(17);
  inst.selectable.resize(inst.graph_count);
  for (std::size_t g = 0; g < inst.graph_count; ++g) inst.selectable[g] = rng.chance(0.8);
  const std::size_t patterns = 1 + rng.below(8);
  for (std::size_t p = 0; p < patterns; ++p) {
    std::vector<std::size_t> c;
    const double density = 0.1 + 0.5 * rng.uniform();
    for (std::size_t g = 0; g < inst.graph_count; ++g)
      if (rng.chance(density)) c.push_back(g);
    inst.carriers.push_back(c);
  }
  inst.n = 1 + static_cast<int>(rng.below(4));
  inst.s = 1 + rng.below(6);
  return inst;
}

}  // namespace oracle
