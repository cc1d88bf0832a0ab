#include <catch2/catch_amalgamated.hpp>

#include "apiguard/eaug.hpp"
#include "apiguard/isomorphism.hpp"
#include "helpers.hpp"

using namespace apiguard;
using testing::make_graph;

namespace {

bool has_violation(const Eaug& g, std::string_view code) {
  for (const auto& v : validate_graph(g))
    if (v.code == code) return true;
  return false;
}

// The CopyOnWriteMap.putIfAbsent-style usage: entry, a get, a null check.
Eaug map_usage() {
  return make_graph({{"m", NodeKind::MethodEntry, "putIfAbsent"},
                     {"map", NodeKind::Data, "Map", DataScope::Local},
                     {"get", NodeKind::Action, "Map.get"},
                     {"v", NodeKind::Data, "Object", DataScope::Local},
                     {"chk", NodeKind::Condition, "!="},
                     {"put", NodeKind::Action, "Map.put"}},
                    {{"map", "get", EdgeKind::Recv},
                     {"get", "v", EdgeKind::Def},
                     {"v", "chk", EdgeKind::Param},
                     {"chk", "put", EdgeKind::Sel},
                     {"get", "put", EdgeKind::Order}});
}

}  // namespace

TEST_CASE("validate_graph accepts the empty graph", "[graph]") {
  CHECK(validate_graph(Eaug{}).empty());
}

TEST_CASE("validate_graph reports structural violations", "[graph]") {
  SECTION("dangling edge") {
    auto g = make_graph({{"a", NodeKind::Action, "get"}}, {{"a", "zz", EdgeKind::Def}});
    CHECK(has_violation(g, "dangling edge"));
  }
  SECTION("multiple entries") {
    auto g = make_graph({{"a", NodeKind::MethodEntry, "f"}, {"b", NodeKind::MethodEntry, "g"}}, {});
    CHECK(has_violation(g, "multiple entries"));
  }
  SECTION("duplicate parallel edge of the same kind") {
    auto g = make_graph({{"a", NodeKind::Action, "x"}, {"b", NodeKind::Action, "y"}},
                        {{"a", "b", EdgeKind::Order}, {"a", "b", EdgeKind::Order}});
    CHECK(has_violation(g, "duplicate parallel edge"));
  }
  SECTION("parallel edges of different kinds are fine") {
    auto g = make_graph({{"a", NodeKind::Action, "x"}, {"b", NodeKind::Action, "y"}},
                        {{"a", "b", EdgeKind::Order}, {"a", "b", EdgeKind::Def}});
    CHECK(validate_graph(g).empty());
  }
  SECTION("scope on an action node") {
    auto g = make_graph({{"a", NodeKind::Action, "x", DataScope::Param}}, {});
    CHECK(has_violation(g, "scope on non-data node"));
  }
  SECTION("duplicate node id") {
    auto g = make_graph({{"a", NodeKind::Action, "x"}, {"a", NodeKind::Action, "y"}}, {});
    CHECK(has_violation(g, "duplicate node id"));
  }
  SECTION("supertype node without entry link") {
    auto g = make_graph({{"super:Iterator", NodeKind::Data, "Iterator"}}, {});
    CHECK(has_violation(g, "unlinked supertype node"));
  }
}

TEST_CASE("apply_eaug_extensions with an empty context is the identity", "[graph]") {
  const Eaug g = map_usage();
  CHECK(apply_eaug_extensions(g, EaugContext{}) == g);
}

TEST_CASE("supertypes become data nodes ordered into the method entry", "[graph]") {
  EaugContext ctx;
  ctx.supertypes = {"ConcurrentMap"};
  const Eaug out = apply_eaug_extensions(map_usage(), ctx);
  REQUIRE(out.nodes.size() == map_usage().nodes.size() + 1);
  auto idx = node_index(out, "super:ConcurrentMap");
  REQUIRE(idx);
  CHECK(out.nodes[*idx].kind == NodeKind::Data);
  CHECK(out.nodes[*idx].label == "ConcurrentMap");
  const Edge link{"super:ConcurrentMap", "m", EdgeKind::Order};
  CHECK(std::count(out.edges.begin(), out.edges.end(), link) == 1);
  CHECK(validate_graph(out).empty());
}

TEST_CASE("supertypes without an entry node get a synthetic entry", "[graph]") {
  auto g = make_graph({{"a", NodeKind::Action, "next"}}, {});
  EaugContext ctx;
  ctx.supertypes = {"Iterator"};
  const Eaug out = apply_eaug_extensions(g, ctx);
  CHECK(validate_graph(out).empty());
  auto entry = node_index(out, kSyntheticEntryId);
  REQUIRE(entry);
  CHECK(out.nodes[*entry].kind == NodeKind::MethodEntry);
}

TEST_CASE("parameter names scope data nodes", "[graph]") {
  Eaug g = make_graph({{"w", NodeKind::Data, "PrintWriter", DataScope::Local},
                       {"f", NodeKind::Action, "PrintWriter.flush"}},
                      {{"w", "f", EdgeKind::Recv}});
  g.nodes[0].var = "printWriter";
  EaugContext ctx;
  ctx.param_names = {"printWriter"};
  const Eaug out = apply_eaug_extensions(g, ctx);
  CHECK(out.nodes[0].scope == DataScope::Param);
  CHECK(render(out.nodes[0].node_label()) == "param:PrintWriter");
  CHECK(out.nodes[1].scope == DataScope::None);

  SECTION("labels stand in for missing variable names") {
    Eaug h = g;
    h.nodes[0].var.reset();
    EaugContext by_label;
    by_label.field_names = {"PrintWriter"};
    CHECK(apply_eaug_extensions(h, by_label).nodes[0].scope == DataScope::Field);
  }
  SECTION("scoped and local variants no longer match each other") {
    CHECK_FALSE(is_subgraph(out, g));
    CHECK_FALSE(is_subgraph(g, out));
  }
}

TEST_CASE("a name may not be both parameter and field", "[graph]") {
  EaugContext ctx;
  ctx.param_names = {"x"};
  ctx.field_names = {"x"};
  CHECK_THROWS_AS(apply_eaug_extensions(map_usage(), ctx), Error);
}

TEST_CASE("initializer graphs are ordered before the method's first actions", "[graph]") {
  Eaug method = make_graph({{"gi", NodeKind::Action, "Cipher.getInstance"},
                            {"alg", NodeKind::Data, "String", DataScope::Local},
                            {"init", NodeKind::Action, "Cipher.init"}},
                           {{"alg", "gi", EdgeKind::Param}, {"gi", "init", EdgeKind::Order}});
  method.nodes[1].var = "DES_CBC";
  Eaug field_init = make_graph({{"lit", NodeKind::Data, "\"DES/CBC/PKCS7Padding\""},
                                {"s", NodeKind::Action, "<assign>"}},
                               {{"lit", "s", EdgeKind::Param}});
  EaugContext ctx;
  ctx.initializer_graphs = {field_init};
  ctx.field_names = {"DES_CBC"};
  const Eaug out = apply_eaug_extensions(method, ctx);
  CHECK(validate_graph(out).empty());
  const Edge link{"init:0/s", "gi", EdgeKind::Order};
  CHECK(std::count(out.edges.begin(), out.edges.end(), link) == 1);
  // Only the method's source action is linked, not the later Cipher.init.
  const Edge not_link{"init:0/s", "init", EdgeKind::Order};
  CHECK(std::count(out.edges.begin(), out.edges.end(), not_link) == 0);
  CHECK(out.nodes[*node_index(out, "alg")].scope == DataScope::Field);
}

TEST_CASE("invalid input graphs are rejected with their violations", "[graph]") {
  auto g = make_graph({{"a", NodeKind::Action, "x"}}, {{"a", "b", EdgeKind::Def}});
  try {
    apply_eaug_extensions(g, EaugContext{});
    FAIL("expected InvalidGraph");
  } catch (const InvalidGraph& e) {
    REQUIRE(e.violations().size() == 1);
    CHECK(e.violations()[0].code == "dangling edge");
  }
}

TEST_CASE("apply_eaug_extensions is idempotent", "[graph][property]") {
  apiguard::Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Eaug g = testing::random_graph(rng, 5, 6);
    g.nodes.push_back({"entry", NodeKind::MethodEntry, "run", DataScope::None, std::nullopt});
    g.edges.push_back({"entry", g.nodes[0].id, EdgeKind::Order});
    EaugContext ctx;
    ctx.supertypes = {"Runnable", "Closeable"};
    ctx.param_names = {"a"};
    ctx.field_names = {"b"};
    ctx.initializer_graphs.push_back(testing::random_graph(rng, 3, 3));
    const Eaug once = apply_eaug_extensions(g, ctx);
    const Eaug twice = apply_eaug_extensions(once, ctx);
    REQUIRE(validate_graph(once).empty());
    CHECK(once == twice);
  }
}
