#pragma once

// JSON encoding of the graph types. Objects are written with keys in schema
// order and read strictly: unknown or missing keys are errors.

#include <initializer_list>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "apiguard/dfs_code.hpp"
#include "apiguard/eaug.hpp"
#include "apiguard/graph.hpp"

namespace apiguard {

using Json = nlohmann::ordered_json;

class SchemaError : public Error {
 public:
  using Error::Error;
};

namespace json_detail {

inline void expect_keys(const Json& j, std::string_view what,
                        std::initializer_list<std::string_view> required,
                        std::initializer_list<std::string_view> optional = {}) {
  if (!j.is_object()) throw SchemaError(std::string(what) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    bool known = false;
    for (auto r : required) known |= (r == k);
    for (auto o : optional) known |= (o == k);
    if (!known) throw SchemaError("unknown field '" + k + "' in " + std::string(what));
  }
  for (auto r : required) {
    if (!j.contains(std::string(r)))
      throw SchemaError("missing field '" + std::string(r) + "' in " + std::string(what));
  }
}

inline const std::string& str(const Json& j, std::string_view key, std::string_view what) {
  const Json& v = j.at(std::string(key));
  if (!v.is_string())
    throw SchemaError("field '" + std::string(key) + "' in " + std::string(what) +
                      " must be a string");
  return v.get_ref<const std::string&>();
}

inline const Json& array(const Json& j, std::string_view key, std::string_view what) {
  const Json& v = j.at(std::string(key));
  if (!v.is_array())
    throw SchemaError("field '" + std::string(key) + "' in " + std::string(what) +
                      " must be an array");
  return v;
}

}  // namespace json_detail

inline Json to_json(const NodeLabel& l) {
  return Json{{"kind", to_string(l.kind)}, {"label", l.label}, {"scope", to_string(l.scope)}};
}

inline NodeLabel node_label_from_json(const Json& j) {
  json_detail::expect_keys(j, "node label", {"kind", "label", "scope"});
  return {parse_node_kind(json_detail::str(j, "kind", "node label")),
          json_detail::str(j, "label", "node label"),
          parse_scope(json_detail::str(j, "scope", "node label"))};
}

inline Json to_json(const Eaug& g) {
  Json nodes = Json::array(), edges = Json::array();
  for (const Node& n : g.nodes) {
    Json o{{"id", n.id},
           {"kind", to_string(n.kind)},
           {"label", n.label},
           {"scope", to_string(n.scope)}};
    if (n.var) o["var"] = *n.var;
    nodes.push_back(std::move(o));
  }
  for (const Edge& e : g.edges)
    edges.push_back(Json{{"src", e.src}, {"dst", e.dst}, {"kind", to_string(e.kind)}});
  return Json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

inline Eaug graph_from_json(const Json& j) {
  using namespace json_detail;
  expect_keys(j, "graph", {"nodes", "edges"});
  Eaug g;
  for (const Json& n : array(j, "nodes", "graph")) {
    expect_keys(n, "node", {"id", "kind", "label", "scope"}, {"var"});
    Node node{str(n, "id", "node"), parse_node_kind(str(n, "kind", "node")),
              str(n, "label", "node"), parse_scope(str(n, "scope", "node")), std::nullopt};
    if (n.contains("var")) node.var = str(n, "var", "node");
    g.nodes.push_back(std::move(node));
  }
  for (const Json& e : array(j, "edges", "graph")) {
    expect_keys(e, "edge", {"src", "dst", "kind"});
    g.edges.push_back(
        {str(e, "src", "edge"), str(e, "dst", "edge"), parse_edge_kind(str(e, "kind", "edge"))});
  }
  return g;
}

inline Json to_json(const EaugContext& c) {
  Json inits = Json::array();
  for (const Eaug& g : c.initializer_graphs) inits.push_back(to_json(g));
  return Json{{"supertypes", c.supertypes},
              {"param_names", c.param_names},
              {"field_names", c.field_names},
              {"initializer_graphs", std::move(inits)}};
}

inline EaugContext context_from_json(const Json& j) {
  using namespace json_detail;
  expect_keys(j, "context", {"supertypes", "param_names", "field_names", "initializer_graphs"});
  EaugContext c;
  auto strings = [&](std::string_view key) {
    std::vector<std::string> out;
    for (const Json& s : array(j, key, "context")) {
      if (!s.is_string()) throw SchemaError("context." + std::string(key) + " must hold strings");
      out.push_back(s.get<std::string>());
    }
    return out;
  };
  c.supertypes = strings("supertypes");
  for (auto& s : strings("param_names")) c.param_names.insert(std::move(s));
  for (auto& s : strings("field_names")) c.field_names.insert(std::move(s));
  for (const Json& g : array(j, "initializer_graphs", "context"))
    c.initializer_graphs.push_back(graph_from_json(g));
  return c;
}

inline Json to_json(const DfsCode& code) {
  if (code.edges.empty()) return Json{{"vertex", to_json(code.vertex.value_or(NodeLabel{}))}};
  Json edges = Json::array();
  for (const DfsEdge& e : code.edges) {
    edges.push_back(Json{{"from", e.from},
                         {"to", e.to},
                         {"from_label", to_json(e.from_label)},
                         {"kind", to_string(e.kind)},
                         {"to_label", to_json(e.to_label)},
                         {"dir", e.dir == EdgeDirection::Along ? "along" : "against"}});
  }
  return Json{{"edges", std::move(edges)}};
}

inline DfsCode dfs_code_from_json(const Json& j) {
  using namespace json_detail;
  if (!j.is_object()) throw SchemaError("dfs code must be an object");
  if (j.contains("vertex")) {
    expect_keys(j, "dfs code", {"vertex"});
    return single_vertex_code(node_label_from_json(j.at("vertex")));
  }
  expect_keys(j, "dfs code", {"edges"});
  DfsCode code;
  for (const Json& e : array(j, "edges", "dfs code")) {
    expect_keys(e, "dfs edge", {"from", "to", "from_label", "kind", "to_label", "dir"});
    const std::string& dir = str(e, "dir", "dfs edge");
    if (dir != "along" && dir != "against") throw SchemaError("bad dfs edge direction " + dir);
    code.edges.push_back({e.at("from").get<int>(), e.at("to").get<int>(),
                          node_label_from_json(e.at("from_label")),
                          parse_edge_kind(str(e, "kind", "dfs edge")),
                          node_label_from_json(e.at("to_label")),
                          dir == "along" ? EdgeDirection::Along : EdgeDirection::Against});
  }
  return code;
}

}  // namespace apiguard
