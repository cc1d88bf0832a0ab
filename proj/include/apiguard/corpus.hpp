#pragma once

// Usage-example corpora: the line-delimited JSON file format, loading with
// context extensions, and method-level clone removal.

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "apiguard/eaug.hpp"
#include "apiguard/json_io.hpp"
#include "apiguard/tokens.hpp"

namespace apiguard {

enum class Label : std::uint8_t { Correct, Misuse };

inline std::string_view to_string(Label l) { return l == Label::Correct ? "C" : "M"; }

inline Label parse_label(std::string_view s) {
  if (s == "C") return Label::Correct;
  if (s == "M") return Label::Misuse;
  throw SchemaError("label must be \"C\" or \"M\", got '" + std::string(s) + "'");
}

struct UsageExample {
  std::string id;
  std::string project;
  std::string method_name;
  std::string source_text;
  Eaug graph;
  EaugContext context;
  std::optional<Label> label;

  friend bool operator==(const UsageExample&, const UsageExample&) = default;
};

struct Corpus {
  std::string api;
  std::vector<UsageExample> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }

  std::unordered_map<std::string, std::size_t> index() const {
    std::unordered_map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < examples.size(); ++i) out.emplace(examples[i].id, i);
    return out;
  }
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

inline constexpr std::string_view kCorpusFormat = "apiguard-corpus/1";

class CorpusError : public Error {
 public:
  using Error::Error;
};

inline Json to_json(const UsageExample& ex) {
  return Json{{"id", ex.id},
              {"project", ex.project},
              {"method_name", ex.method_name},
              {"source_text", ex.source_text},
              {"graph", to_json(ex.graph)},
              {"context", to_json(ex.context)},
              {"label", ex.label ? Json(to_string(*ex.label)) : Json(nullptr)}};
}

// Parses one record and applies the context extensions to its graph.
inline UsageExample example_from_json(const Json& j) {
  using namespace json_detail;
  expect_keys(j, "record",
              {"id", "project", "method_name", "source_text", "graph", "context", "label"});
  UsageExample ex;
  ex.id = str(j, "id", "record");
  ex.project = str(j, "project", "record");
  ex.method_name = str(j, "method_name", "record");
  ex.source_text = str(j, "source_text", "record");
  const Json& label = j.at("label");
  if (!label.is_null()) {
    if (!label.is_string()) throw SchemaError("label must be a string or null");
    ex.label = parse_label(label.get<std::string>());
  }
  ex.context = context_from_json(j.at("context"));
  const Eaug raw = graph_from_json(j.at("graph"));
  try {
    ex.graph = apply_eaug_extensions(raw, ex.context);
  } catch (const InvalidGraph& e) {
    throw CorpusError("example '" + ex.id + "': " + e.what());
  }
  return ex;
}

inline Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorpusError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (first && j.is_object() && j.contains("format")) {
      first = false;
      try {
        json_detail::expect_keys(j, "header", {"format", "api"});
        if (json_detail::str(j, "format", "header") != kCorpusFormat)
          throw SchemaError("unsupported corpus format '" + j.at("format").get<std::string>() +
                            "'");
        corpus.api = json_detail::str(j, "api", "header");
      } catch (const SchemaError& e) {
        throw CorpusError("line " + std::to_string(lineno) + ": " + e.what());
      }
      continue;
    }
    first = false;
    UsageExample ex;
    try {
      ex = example_from_json(j);
    } catch (const CorpusError&) {
      throw;
    } catch (const Error& e) {
      throw CorpusError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!ids.insert(ex.id).second)
      throw CorpusError("line " + std::to_string(lineno) + ": duplicate example id '" + ex.id +
                        "'");
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus '" + path + "'");
  return read_corpus(in);
}

inline void write_corpus(const Corpus& corpus, std::ostream& out) {
  if (!corpus.api.empty()) out << Json{{"format", kCorpusFormat}, {"api", corpus.api}}.dump() << '\n';
  for (const auto& ex : corpus.examples) out << to_json(ex).dump() << '\n';
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write corpus '" + path + "'");
  write_corpus(corpus, out);
  if (!out) throw CorpusError("write failed for '" + path + "'");
}

inline std::string corpus_text(const Corpus& corpus) {
  std::ostringstream s;
  write_corpus(corpus, s);
  return s.str();
}

inline constexpr double kDefaultCloneThreshold = 0.7;

struct CloneMatch {
  std::string dropped;
  std::string kept;
  double similarity;
};

// Greedy first-wins pass in input order: an example is a clone when it is
// more similar than `threshold` to an example already kept.
inline std::vector<CloneMatch> find_clones(const Corpus& corpus, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("clone threshold must be in (0, 1]");
  std::vector<CloneMatch> clones;
  std::vector<std::pair<std::size_t, TokenBag>> kept;
  for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
    TokenBag bag = token_bag(corpus.examples[i].source_text);
    std::optional<CloneMatch> hit;
    for (const auto& [k, other] : kept) {
      // sim <= min/max, so size-incompatible pairs cannot exceed the threshold.
      const double lo = static_cast<double>(std::min(bag.size(), other.size()));
      const double hi = static_cast<double>(std::max(bag.size(), other.size()));
      if (hi == 0 || lo / hi <= threshold) continue;
      const double sim = clone_similarity(bag, other);
      if (sim > threshold) {
        hit = CloneMatch{corpus.examples[i].id, corpus.examples[k].id, sim};
        break;
      }
    }
    if (hit) clones.push_back(*hit);
    else kept.emplace_back(i, std::move(bag));
  }
  return clones;
}

inline Corpus deduplicate(const Corpus& corpus, double threshold = kDefaultCloneThreshold) {
  std::unordered_set<std::string> dropped;
  for (const auto& c : find_clones(corpus, threshold)) dropped.insert(c.dropped);
  Corpus out;
  out.api = corpus.api;
  for (const auto& ex : corpus.examples)
    if (!dropped.contains(ex.id)) out.examples.push_back(ex);
  return out;
}

}  // namespace apiguard
