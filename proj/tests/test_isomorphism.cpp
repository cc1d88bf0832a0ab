#include <catch2/catch_amalgamated.hpp>

#include "apiguard/isomorphism.hpp"
#include "helpers.hpp"
#include "oracles/brute_match.hpp"

using namespace apiguard;
using testing::make_graph;

namespace {

Eaug null_check_pattern() {
  return make_graph({{"g", NodeKind::Action, "Map.get"},
                     {"v", NodeKind::Data, "Object", DataScope::Local},
                     {"c", NodeKind::Condition, "!="}},
                    {{"g", "v", EdgeKind::Def}, {"v", "c", EdgeKind::Param}});
}

Eaug six_node_usage() {
  return make_graph({{"m", NodeKind::Data, "Map", DataScope::Local},
                     {"g", NodeKind::Action, "Map.get"},
                     {"v", NodeKind::Data, "Object", DataScope::Local},
                     {"c", NodeKind::Condition, "!="},
                     {"p", NodeKind::Action, "Map.put"},
                     {"o", NodeKind::Action, "println"}},
                    {{"m", "g", EdgeKind::Recv},
                     {"g", "v", EdgeKind::Def},
                     {"v", "c", EdgeKind::Param},
                     {"c", "p", EdgeKind::Sel},
                     {"g", "p", EdgeKind::Order},
                     {"p", "o", EdgeKind::Order}});
}

}  // namespace

TEST_CASE("every graph contains itself", "[isomorphism]") {
  const Eaug g = six_node_usage();
  CHECK(is_subgraph(g, g));
  CHECK(is_subgraph(Eaug{}, g));
}

TEST_CASE("a single node pattern embeds by label", "[isomorphism]") {
  auto get = make_graph({{"x", NodeKind::Action, "Map.get"}}, {});
  CHECK(is_subgraph(get, six_node_usage()));
  auto missing = make_graph({{"x", NodeKind::Action, "Map.remove"}}, {});
  CHECK_FALSE(is_subgraph(missing, six_node_usage()));
  auto wrong_kind = make_graph({{"x", NodeKind::Data, "Map.get"}}, {});
  CHECK_FALSE(is_subgraph(wrong_kind, six_node_usage()));
}

TEST_CASE("null-check pattern against a six node usage", "[isomorphism]") {
  const Eaug p = null_check_pattern();
  const Eaug g = six_node_usage();
  CHECK(is_subgraph(p, g) == oracle::contains_by_enumeration(p, g));
  CHECK(is_subgraph(p, g));

  // Dropping the check edge from the usage removes the match.
  Eaug unchecked = g;
  std::erase_if(unchecked.edges, [](const Edge& e) { return e.kind == EdgeKind::Param; });
  CHECK(is_subgraph(p, unchecked) == oracle::contains_by_enumeration(p, unchecked));
  CHECK_FALSE(is_subgraph(p, unchecked));

  // Reversed direction does not match.
  Eaug reversed = p;
  std::swap(reversed.edges[0].src, reversed.edges[0].dst);
  CHECK_FALSE(is_subgraph(reversed, g));
}

TEST_CASE("scope participates in matching", "[isomorphism]") {
  auto local = make_graph({{"w", NodeKind::Data, "PrintWriter", DataScope::Local}}, {});
  auto param = make_graph({{"w", NodeKind::Data, "PrintWriter", DataScope::Param}}, {});
  CHECK_FALSE(is_subgraph(local, param));
}

TEST_CASE("embedding is injective", "[isomorphism]") {
  auto two = make_graph({{"a", NodeKind::Action, "A"}, {"b", NodeKind::Action, "A"}}, {});
  auto one = make_graph({{"a", NodeKind::Action, "A"}}, {});
  CHECK_FALSE(is_subgraph(two, one));
}

TEST_CASE("matches the brute-force oracle on random pairs", "[isomorphism][property]") {
  apiguard::Rng rng(11);
  int positives = 0;
  for (int trial = 0; trial < 1500; ++trial) {
    const Eaug p = testing::random_graph(rng, 4, 4, 2, 2);
    const Eaug g = testing::random_graph(rng, 6, 9, 2, 2);
    const bool expect = oracle::contains_by_enumeration(p, g);
    positives += expect;
    INFO("pattern\n" << render(p) << "target\n" << render(g));
    REQUIRE(is_subgraph(p, g) == expect);
  }
  CHECK(positives > 100);
}

TEST_CASE("containment is transitive and size-monotone", "[isomorphism][property]") {
  apiguard::Rng rng(12);
  int chains = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const Eaug a = testing::random_graph(rng, 3, 2, 2, 1);
    const Eaug b = testing::random_graph(rng, 4, 4, 2, 1);
    const Eaug c = testing::random_graph(rng, 6, 8, 2, 1);
    const bool ab = is_subgraph(a, b), bc = is_subgraph(b, c);
    if (ab) {
      CHECK(a.nodes.size() <= b.nodes.size());
      CHECK(a.edges.size() <= b.edges.size());
    }
    if (ab && bc) {
      ++chains;
      CHECK(is_subgraph(a, c));
    }
  }
  CHECK(chains > 20);
}
