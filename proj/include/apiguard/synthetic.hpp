#pragma once

// Synthetic corpora with a planted ground truth: a usage is correct exactly
// when it contains a fixed 3-edge pattern. Misuses carry fragments of it:
// only the first two edges, only the last two, or both as separate copies.
// Each graph also gets random background calls from a large label pool.

#include <map>
#include <string>
#include <vector>

#include "apiguard/corpus.hpp"
#include "apiguard/rng.hpp"

namespace apiguard {

struct PlantedConfig {
  std::size_t size = 2000;
  double misuse_rate = 0.15;
  double label_noise = 0.10;
  // Misuse kinds: head fragment only, tail fragment only, both fragments.
  double head_share = 0.25;
  double tail_share = 0.25;
  int background_labels = 200;
  int background_min = 2;
  int background_max = 5;
  std::string api = "java.io.FileInputStream";
};

enum class PlantedKind : std::uint8_t { Correct, HeadOnly, TailOnly, BothApart, Foreign };

inline std::string_view to_string(PlantedKind k) {
  switch (k) {
    case PlantedKind::Correct: return "correct";
    case PlantedKind::HeadOnly: return "head-only";
    case PlantedKind::TailOnly: return "tail-only";
    case PlantedKind::BothApart: return "both-apart";
    case PlantedKind::Foreign: return "foreign";
  }
  return "?";
}

struct PlantedCorpus {
  Corpus corpus;                         // records carry no labels
  std::map<std::string, Label> truth;    // absent for foreign graphs
  std::map<std::string, Label> annotator;  // truth with label noise applied
  std::map<std::string, PlantedKind> kind;
};

namespace synthetic_detail {

struct Planted {
  const char* init = "FileInputStream.<init>";
  const char* stream = "FileInputStream";
  const char* read = "FileInputStream.read";
  const char* close = "FileInputStream.close";
};

class Builder {
 public:
  std::string node(NodeKind k, std::string label, DataScope s = DataScope::None) {
    std::string id = "n" + std::to_string(g.nodes.size());
    g.nodes.push_back({id, k, std::move(label), s, std::nullopt});
    return id;
  }
  void edge(const std::string& a, const std::string& b, EdgeKind k) { g.edges.push_back({a, b, k}); }
  Eaug g;
};

// Fragment nodes: init -def-> stream -recv-> read -order-> close.
inline std::vector<std::string> add_fragment(Builder& b, bool head, bool tail) {
  const Planted p;
  std::vector<std::string> ids;
  const std::string stream = b.node(NodeKind::Data, p.stream, DataScope::Local);
  const std::string read = b.node(NodeKind::Action, p.read);
  b.edge(stream, read, EdgeKind::Recv);
  ids = {stream, read};
  if (head) {
    const std::string init = b.node(NodeKind::Action, p.init);
    b.edge(init, stream, EdgeKind::Def);
    ids.push_back(init);
  }
  if (tail) {
    const std::string close = b.node(NodeKind::Action, p.close);
    b.edge(read, close, EdgeKind::Order);
    ids.push_back(close);
  }
  return ids;
}

// Background calls form a random tree; each fragment gets one Order edge from
// a background call.
inline void add_background(Builder& b, Rng& rng, const PlantedConfig& cfg, const std::string& prefix,
                           const std::vector<std::vector<std::string>>& fragments) {
  const int count = cfg.background_min +
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.background_max - cfg.background_min + 1)));
  std::vector<std::string> calls;
  for (int i = 0; i < count; ++i) {
    calls.push_back(b.node(NodeKind::Action,
                           prefix + std::to_string(rng.below(static_cast<std::uint64_t>(cfg.background_labels)))));
    if (i > 0) b.edge(calls[rng.below(calls.size() - 1)], calls.back(), EdgeKind::Order);
  }
  for (const auto& f : fragments) b.edge(calls[rng.below(calls.size())], f[rng.below(f.size())], EdgeKind::Order);
}

inline std::string random_name(Rng& rng, const char* prefix) {
  static constexpr char kChars[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string out = prefix;
  for (int i = 0; i < 6; ++i) out += kChars[rng.below(36)];
  return out;
}

// Java-ish body with one statement per call. Locals and literals are random so
// that distinct graphs do not look like textual clones.
inline std::string source_of(const Eaug& g, const std::string& method, Rng& rng) {
  std::string src = "void " + method + "() {\n";
  for (const Node& n : g.nodes) {
    if (n.kind != NodeKind::Action) continue;
    const auto dot = n.label.rfind('.');
    const std::string callee = dot == std::string::npos ? n.label : n.label.substr(dot + 1);
    src += "  T" + random_name(rng, "") + " " + random_name(rng, "v") + " = " + random_name(rng, "r") + "." +
           callee + "(" + random_name(rng, "a") + ", " + std::to_string(rng.below(100000)) + ");\n";
  }
  return src + "}\n";
}

}  // namespace synthetic_detail

// The planted pattern itself.
inline Eaug planted_pattern() {
  synthetic_detail::Builder b;
  synthetic_detail::add_fragment(b, true, true);
  return b.g;
}

inline Eaug planted_graph(PlantedKind kind, Rng& rng, const PlantedConfig& cfg) {
  using namespace synthetic_detail;
  Builder b;
  std::vector<std::vector<std::string>> fragments;
  switch (kind) {
    case PlantedKind::Correct: fragments.push_back(add_fragment(b, true, true)); break;
    case PlantedKind::HeadOnly: fragments.push_back(add_fragment(b, true, false)); break;
    case PlantedKind::TailOnly: fragments.push_back(add_fragment(b, false, true)); break;
    case PlantedKind::BothApart:
      fragments.push_back(add_fragment(b, true, false));
      fragments.push_back(add_fragment(b, false, true));
      break;
    case PlantedKind::Foreign: {
      // Nothing from the API and no background label in common.
      const int n = 3 + static_cast<int>(rng.below(4));
      std::vector<std::string> ids;
      for (int i = 0; i < n; ++i) {
        ids.push_back(b.node(rng.chance(0.3) ? NodeKind::Data : NodeKind::Action,
                             "Foreign.op" + std::to_string(rng.below(50)),
                             DataScope::None));
        if (i > 0) b.edge(ids[rng.below(ids.size() - 1)], ids.back(), EdgeKind::Order);
      }
      return b.g;
    }
  }
  add_background(b, rng, cfg, "Util.call", fragments);
  return b.g;
}

inline PlantedCorpus generate_planted(const PlantedConfig& cfg, std::uint64_t seed,
                                      const std::string& id_prefix = "u") {
  PlantedCorpus out;
  out.corpus.api = cfg.api;
  Rng rng(seed);
  for (std::size_t i = 0; i < cfg.size; ++i) {
    PlantedKind kind = PlantedKind::Correct;
    if (rng.chance(cfg.misuse_rate)) {
      const double r = rng.uniform();
      kind = r < cfg.head_share ? PlantedKind::HeadOnly
                                : (r < cfg.head_share + cfg.tail_share ? PlantedKind::TailOnly : PlantedKind::BothApart);
    }
    UsageExample ex;
    ex.id = id_prefix + std::to_string(i);
    ex.project = "project" + std::to_string(rng.below(40));
    ex.method_name = "method" + std::to_string(i);
    ex.graph = planted_graph(kind, rng, cfg);
    ex.source_text = synthetic_detail::source_of(ex.graph, ex.method_name, rng);
    const Label truth = kind == PlantedKind::Correct ? Label::Correct : Label::Misuse;
    out.truth[ex.id] = truth;
    const bool flip = rng.chance(cfg.label_noise);
    out.annotator[ex.id] = flip ? (truth == Label::Correct ? Label::Misuse : Label::Correct) : truth;
    out.kind[ex.id] = kind;
    out.corpus.examples.push_back(std::move(ex));
  }
  return out;
}

// Graphs built only from labels that never occur in planted corpora.
inline Corpus generate_foreign(std::size_t n, std::uint64_t seed, const std::string& id_prefix = "ood") {
  Corpus c;
  Rng rng(seed);
  const PlantedConfig cfg;
  for (std::size_t i = 0; i < n; ++i) {
    UsageExample ex;
    ex.id = id_prefix + std::to_string(i);
    ex.project = "elsewhere";
    ex.method_name = "foreign" + std::to_string(i);
    ex.graph = planted_graph(PlantedKind::Foreign, rng, cfg);
    ex.source_text = synthetic_detail::source_of(ex.graph, ex.method_name, rng);
    c.examples.push_back(std::move(ex));
  }
  return c;
}

}  // namespace apiguard
