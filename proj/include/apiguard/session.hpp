#pragma once

// The labeling loop. A session holds labels, the pending query batch, the
// selected features and an append-only event log; every transition is a pure
// function of (session, corpus, inputs), so a reloaded session continues
// exactly where the saved one stopped.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "apiguard/classifier.hpp"
#include "apiguard/corpus.hpp"
#include "apiguard/json_io.hpp"
#include "apiguard/miner.hpp"
#include "apiguard/selector.hpp"

namespace apiguard {

struct SessionConfig {
  MinerConfig miner;
  SelectorConfig selector;
  ClassifierGrid grid;
  double lof_threshold = kDefaultLofThreshold;

  void validate() const {
    miner.validate();
    selector.validate();
    if (!(lof_threshold > 0)) throw Error("lof_threshold must be positive");
  }
  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

class SessionError : public Error {
 public:
  enum class Kind { Conflict, Incomplete, State };
  SessionError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct SessionEvent {
  std::uint64_t seq = 0;  // logical timestamp
  std::string kind;       // batch_issued, labels_received, features_updated, stopped, model_trained
  Json payload;

  friend bool operator==(const SessionEvent& a, const SessionEvent& b) {
    return a.seq == b.seq && a.kind == b.kind && a.payload == b.payload;
  }
};

struct CandidatePattern {
  DfsCode code;
  std::vector<std::string> graph_ids;
  friend bool operator==(const CandidatePattern&, const CandidatePattern&) = default;
};

struct LabelSession {
  std::string api;
  std::string corpus_digest;
  std::size_t corpus_size = 0;
  std::uint64_t seed = 0;
  SessionConfig config;
  int iteration = 0;
  std::map<std::string, Label> labeled;
  std::vector<std::string> pending;
  std::map<std::string, Label> submitted;  // labels received for pending ids
  std::vector<SubgraphFeature> features;
  std::vector<CandidatePattern> candidates;
  std::vector<std::vector<std::string>> batches;
  std::set<std::string> tokens;
  double coverage = 0.0;
  std::optional<std::string> stopped;
  std::vector<SessionEvent> events;

  friend bool operator==(const LabelSession&, const LabelSession&) = default;
};

inline std::string corpus_digest(const Corpus& corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : corpus_text(corpus)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline void emit(LabelSession& s, std::string kind, Json payload) {
  s.events.push_back({s.events.size() + 1, std::move(kind), std::move(payload)});
}

inline void check_corpus(const LabelSession& s, const Corpus& corpus) {
  if (corpus.size() != s.corpus_size || corpus_digest(corpus) != s.corpus_digest)
    throw SessionError(SessionError::Kind::State, "corpus does not match the session");
}

inline Json id_list(const std::vector<std::string>& ids) { return Json(ids); }

}  // namespace detail

inline LabelSession start_session(const Corpus& corpus, const SessionConfig& config,
                                  std::uint64_t seed) {
  config.validate();
  if (corpus.empty()) throw Error("cannot start a session on an empty corpus");
  LabelSession s;
  s.api = corpus.api;
  s.corpus_digest = corpus_digest(corpus);
  s.corpus_size = corpus.size();
  s.seed = seed;
  s.config = config;
  s.pending = initial_sample(corpus, config.selector, derive_seed(seed, 0));
  s.batches.push_back(s.pending);
  detail::emit(s, "batch_issued", Json{{"iteration", 0}, {"ids", s.pending}});
  return s;
}

// Records labels for pending ids. A token may be used once per session.
// Returns true once every pending id has a label.
inline bool submit_labels(LabelSession& s, const std::vector<std::pair<std::string, Label>>& labels,
                          const std::optional<std::string>& token = std::nullopt) {
  using K = SessionError::Kind;
  if (s.stopped) throw SessionError(K::Conflict, "session stopped (" + *s.stopped + ")");
  if (token && s.tokens.contains(*token))
    throw SessionError(K::Conflict, "token '" + *token + "' already used");
  const std::set<std::string> pending(s.pending.begin(), s.pending.end());
  std::set<std::string> seen;
  for (const auto& [id, label] : labels) {
    if (!pending.contains(id)) throw SessionError(K::Conflict, "'" + id + "' is not in the pending batch");
    if (!seen.insert(id).second) throw SessionError(K::Conflict, "'" + id + "' labeled twice in one request");
  }
  Json payload = Json::array();
  for (const auto& [id, label] : labels) {
    s.submitted[id] = label;
    payload.push_back(Json{{"id", id}, {"label", to_string(label)}});
  }
  if (token) s.tokens.insert(*token);
  detail::emit(s, "labels_received", Json{{"labels", payload}, {"token", token ? Json(*token) : Json(nullptr)}});
  return s.submitted.size() == s.pending.size();
}

inline bool batch_complete(const LabelSession& s) {
  return !s.pending.empty() && s.submitted.size() == s.pending.size();
}

// Unlabeled coverage ranking: per candidate, the number of unlabeled graphs
// containing it.
inline std::vector<std::size_t> unlabeled_coverage(const std::vector<SubgraphFeature>& candidates,
                                                   const Corpus& corpus,
                                                   const std::map<std::string, Label>& labeled) {
  std::vector<PreparedGraph> targets;
  for (const auto& ex : corpus.examples)
    if (!labeled.contains(ex.id)) targets.emplace_back(ex.graph);
  std::vector<std::size_t> out;
  for (const auto& f : candidates) {
    const PreparedGraph p(f.pattern);
    std::size_t n = 0;
    for (const auto& t : targets) n += is_subgraph(p, t);
    out.push_back(n);
  }
  return out;
}

// Significant, CORK-selected features for the current labels. Earlier
// features stay selected (stats refreshed) so coverage never shrinks.
inline std::vector<SubgraphFeature> update_features(const LabelSession& s, const Corpus& corpus) {
  const auto labeled = labeled_graphs(corpus, s.labeled);
  std::vector<SubgraphFeature> previous;
  for (const auto& f : s.features) previous.push_back(refresh_feature(f, labeled));
  bool c = false, m = false;
  for (const auto& g : labeled) (g.label == Label::Correct ? c : m) = true;
  if (!c || !m) return previous;
  auto significant = filter_significant(mine_features(labeled, s.config.miner, true), s.config.miner);
  const auto cover = unlabeled_coverage(significant, corpus, s.labeled);
  return cork_select(significant, cover, s.labeled, std::move(previous));
}

// Chooses the next batch among unlabeled graphs not covered by the features.
// Fills s.candidates as a side effect.
inline std::vector<std::string> select_session_batch(LabelSession& s, const Corpus& corpus) {
  const std::size_t s_max = batch_size(s.config.selector, corpus.size(), s.labeled.size());
  const auto covered = covered_mask(s.features, corpus);
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (!covered[i]) pool.push_back(i);
  std::int64_t nc = 0, nm = 0;
  for (const auto& [id, l] : s.labeled) (l == Label::Correct ? nc : nm) += 1;
  const int n = compute_min_signif(nc, nm, s.config.selector.alpha).value_or(s.config.miner.min_sup);
  MinerConfig mc = s.config.miner;
  mc.min_sup = std::max(mc.min_sup, n);
  std::vector<Eaug> graphs;
  for (std::size_t i : pool) graphs.push_back(corpus.examples[i].graph);
  const auto frequent = mine_frequent(graphs, mc);

  BatchInstance inst;
  inst.graph_count = pool.size();
  inst.n = n;
  inst.s = s_max;
  for (std::size_t i : pool) inst.selectable.push_back(!s.labeled.contains(corpus.examples[i].id));
  s.candidates.clear();
  for (const auto& p : frequent) {
    inst.carriers.push_back(p.graphs);
    CandidatePattern c{p.code, {}};
    for (std::size_t g : p.graphs) c.graph_ids.push_back(corpus.examples[pool[g]].id);
    s.candidates.push_back(std::move(c));
  }
  std::vector<std::string> out;
  for (std::size_t g : select_batch(inst, derive_seed(s.seed, 1000 + static_cast<std::uint64_t>(s.iteration))))
    out.push_back(corpus.examples[pool[g]].id);
  return out;
}

// Why the loop should stop now, if it should. An empty batch is checked by the
// caller after selection.
inline std::optional<std::string> stopping_check(const LabelSession& s, std::size_t corpus_size) {
  if (s.coverage > s.config.selector.coverage_target) return "coverage";
  if (static_cast<double>(s.labeled.size()) >= s.config.selector.label_budget_fraction * static_cast<double>(corpus_size) - 1e-9)
    return "budget";
  return std::nullopt;
}

// Consumes the completed batch, re-selects features, then stops or issues
// the next batch.
inline void step_session(LabelSession& s, const Corpus& corpus) {
  using K = SessionError::Kind;
  if (s.stopped) throw SessionError(K::State, "session stopped (" + *s.stopped + ")");
  if (!batch_complete(s)) throw SessionError(K::Incomplete, "batch incomplete");
  detail::check_corpus(s, corpus);
  for (const auto& [id, l] : s.submitted) s.labeled[id] = l;
  s.submitted.clear();
  s.pending.clear();
  ++s.iteration;

  s.features = update_features(s, corpus);
  s.coverage = coverage(s.features, corpus);
  detail::emit(s, "features_updated",
               Json{{"iteration", s.iteration}, {"features", s.features.size()},
                    {"coverage", s.coverage}, {"labeled", s.labeled.size()}});

  auto stop = stopping_check(s, corpus.size());
  std::vector<std::string> batch;
  if (!stop) {
    batch = select_session_batch(s, corpus);
    if (batch.empty()) stop = "exhausted";
  }
  if (stop) {
    s.stopped = *stop;
    detail::emit(s, "stopped", Json{{"reason", *stop}, {"coverage", s.coverage}, {"labeled", s.labeled.size()}});
    return;
  }
  s.pending = batch;
  s.batches.push_back(batch);
  detail::emit(s, "batch_issued", Json{{"iteration", s.iteration}, {"ids", batch}});
}

struct SessionStatus {
  std::size_t labeled = 0;
  std::size_t label_budget = 0;
  std::size_t pending = 0;
  std::size_t submitted = 0;
  double coverage = 0.0;
  double coverage_target = 0.0;
  int iteration = 0;
  std::size_t features = 0;
  std::optional<std::string> stopped;
};

inline SessionStatus session_status(const LabelSession& s) {
  SessionStatus st;
  st.labeled = s.labeled.size();
  st.label_budget = static_cast<std::size_t>(std::ceil(s.config.selector.label_budget_fraction * static_cast<double>(s.corpus_size) - 1e-9));
  st.pending = s.pending.size();
  st.submitted = s.submitted.size();
  st.coverage = s.coverage;
  st.coverage_target = s.config.selector.coverage_target;
  st.iteration = s.iteration;
  st.features = s.features.size();
  st.stopped = s.stopped;
  return st;
}

inline Json to_json(const SessionStatus& st) {
  return Json{{"labeled", st.labeled},       {"label_budget", st.label_budget},
              {"pending", st.pending},       {"submitted", st.submitted},
              {"coverage", st.coverage},     {"coverage_target", st.coverage_target},
              {"iteration", st.iteration},   {"features", st.features},
              {"stopped", st.stopped ? Json(*st.stopped) : Json(nullptr)}};
}

// Labeled training vectors over the session's features.
inline std::vector<Sample> training_samples(const LabelSession& s, const Corpus& corpus) {
  const Vectorizer vec(s.features);
  std::vector<Sample> out;
  for (const auto& ex : corpus.examples) {
    auto it = s.labeled.find(ex.id);
    if (it != s.labeled.end()) out.push_back({vec(ex.graph), it->second});
  }
  return out;
}

inline ModelBundle train_session(LabelSession& s, const Corpus& corpus) {
  if (!s.stopped) throw SessionError(SessionError::Kind::State, "session has not stopped yet");
  detail::check_corpus(s, corpus);
  ModelBundle b = train_bundle(s.api, s.features, training_samples(s, corpus), s.config.grid,
                               derive_seed(s.seed, 7), s.config.lof_threshold);
  const auto& best = b.report.grid[b.report.winner];
  detail::emit(s, "model_trained",
               Json{{"family", to_string(best.spec.family)}, {"cv_f1", best.mean_f1},
                    {"features", b.features.size()}});
  return b;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kSessionFormat = "apiguard-session/1";

inline Json to_json(const SessionConfig& c) {
  return Json{{"miner", {{"min_sup", c.miner.min_sup}, {"max_edges", c.miner.max_edges}, {"alpha", c.miner.alpha}}},
              {"selector",
               {{"batch_fraction", c.selector.batch_fraction},
                {"label_budget_fraction", c.selector.label_budget_fraction},
                {"coverage_target", c.selector.coverage_target},
                {"initial_batch", c.selector.initial_batch},
                {"alpha", c.selector.alpha}}},
              {"classifier",
               {{"linear_c", c.grid.linear_c},
                {"rbf_c", c.grid.rbf_c},
                {"rbf_gamma", c.grid.rbf_gamma},
                {"knn_k", c.grid.knn_k},
                {"nb_alpha", c.grid.nb_alpha},
                {"lof_threshold", c.lof_threshold}}}};
}

// Every key is optional; missing ones keep their defaults. Unknown keys are
// rejected.
inline SessionConfig session_config_from_json(const Json& j) {
  using json_detail::expect_keys;
  SessionConfig c;
  expect_keys(j, "config", {}, {"miner", "selector", "classifier"});
  auto get = [](const Json& o, const char* key, auto& dst) {
    if (o.contains(key)) dst = o.at(key).get<std::decay_t<decltype(dst)>>();
  };
  if (j.contains("miner")) {
    const Json& m = j.at("miner");
    expect_keys(m, "config.miner", {}, {"min_sup", "max_edges", "alpha"});
    get(m, "min_sup", c.miner.min_sup);
    get(m, "max_edges", c.miner.max_edges);
    get(m, "alpha", c.miner.alpha);
  }
  if (j.contains("selector")) {
    const Json& s = j.at("selector");
    expect_keys(s, "config.selector", {},
                {"batch_fraction", "label_budget_fraction", "coverage_target", "initial_batch", "alpha"});
    get(s, "batch_fraction", c.selector.batch_fraction);
    get(s, "label_budget_fraction", c.selector.label_budget_fraction);
    get(s, "coverage_target", c.selector.coverage_target);
    get(s, "initial_batch", c.selector.initial_batch);
    get(s, "alpha", c.selector.alpha);
  }
  if (j.contains("classifier")) {
    const Json& g = j.at("classifier");
    expect_keys(g, "config.classifier", {}, {"linear_c", "rbf_c", "rbf_gamma", "knn_k", "nb_alpha", "lof_threshold"});
    get(g, "linear_c", c.grid.linear_c);
    get(g, "rbf_c", c.grid.rbf_c);
    get(g, "rbf_gamma", c.grid.rbf_gamma);
    get(g, "knn_k", c.grid.knn_k);
    get(g, "nb_alpha", c.grid.nb_alpha);
    get(g, "lof_threshold", c.lof_threshold);
  }
  c.validate();
  return c;
}

inline Json to_json(const LabelSession& s) {
  Json labeled = Json::object();
  for (const auto& [id, l] : s.labeled) labeled[id] = to_string(l);
  Json submitted = Json::object();
  for (const auto& [id, l] : s.submitted) submitted[id] = to_string(l);
  Json features = Json::array();
  for (const auto& f : s.features) features.push_back(to_json(f));
  Json candidates = Json::array();
  for (const auto& c : s.candidates) candidates.push_back(Json{{"dfs_code", to_json(c.code)}, {"graph_ids", c.graph_ids}});
  Json events = Json::array();
  for (const auto& e : s.events) events.push_back(Json{{"seq", e.seq}, {"kind", e.kind}, {"payload", e.payload}});
  return Json{{"format", kSessionFormat},
              {"api", s.api},
              {"corpus_digest", s.corpus_digest},
              {"corpus_size", s.corpus_size},
              {"seed", s.seed},
              {"config", to_json(s.config)},
              {"iteration", s.iteration},
              {"labeled", labeled},
              {"pending", s.pending},
              {"submitted", submitted},
              {"features", features},
              {"candidates", candidates},
              {"batches", s.batches},
              {"tokens", s.tokens},
              {"coverage", s.coverage},
              {"stopped", s.stopped ? Json(*s.stopped) : Json(nullptr)},
              {"events", events}};
}

inline LabelSession session_from_json(const Json& j) {
  using namespace json_detail;
  expect_keys(j, "session",
              {"format", "api", "corpus_digest", "corpus_size", "seed", "config", "iteration", "labeled", "pending",
               "submitted", "features", "candidates", "batches", "tokens", "coverage", "stopped", "events"});
  if (str(j, "format", "session") != kSessionFormat)
    throw SchemaError("unsupported session format '" + j.at("format").get<std::string>() + "'");
  LabelSession s;
  s.api = str(j, "api", "session");
  s.corpus_digest = str(j, "corpus_digest", "session");
  s.corpus_size = j.at("corpus_size").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.config = session_config_from_json(j.at("config"));
  s.iteration = j.at("iteration").get<int>();
  for (const auto& [id, l] : j.at("labeled").items()) s.labeled[id] = parse_label(l.get<std::string>());
  s.pending = j.at("pending").get<std::vector<std::string>>();
  for (const auto& [id, l] : j.at("submitted").items()) s.submitted[id] = parse_label(l.get<std::string>());
  for (const auto& f : array(j, "features", "session")) s.features.push_back(feature_from_json(f));
  for (const auto& c : array(j, "candidates", "session")) {
    expect_keys(c, "candidate", {"dfs_code", "graph_ids"});
    s.candidates.push_back({dfs_code_from_json(c.at("dfs_code")), c.at("graph_ids").get<std::vector<std::string>>()});
  }
  s.batches = j.at("batches").get<std::vector<std::vector<std::string>>>();
  s.tokens = j.at("tokens").get<std::set<std::string>>();
  s.coverage = j.at("coverage").get<double>();
  if (!j.at("stopped").is_null()) s.stopped = str(j, "stopped", "session");
  for (const auto& e : array(j, "events", "session")) {
    expect_keys(e, "event", {"seq", "kind", "payload"});
    s.events.push_back({e.at("seq").get<std::uint64_t>(), str(e, "kind", "event"), e.at("payload")});
  }
  for (const auto& id : s.pending)
    if (s.labeled.contains(id)) throw SchemaError("pending id '" + id + "' is already labeled");
  return s;
}

// Writes to a sibling temp file and renames it over the target.
inline void write_file_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << text;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot replace '" + path + "': " + ec.message());
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string session_text(const LabelSession& s) { return to_json(s).dump(1) + "\n"; }

inline void save_session(const LabelSession& s, const std::string& path) {
  write_file_atomic(path, session_text(s));
}

inline LabelSession load_session(const std::string& path) {
  try {
    return session_from_json(Json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("session '" + path + "': " + e.what());
  }
}

inline std::string model_text(const ModelBundle& b) { return to_json(b).dump(1) + "\n"; }

inline void save_model(const ModelBundle& b, const std::string& path) { write_file_atomic(path, model_text(b)); }

inline ModelBundle load_model(const std::string& path) {
  try {
    return bundle_from_json(Json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("model '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Classification reports

struct ReportEntry {
  std::string id;
  Decision decision;
};

struct ClassificationReport {
  std::vector<ReportEntry> entries;
  std::size_t correct = 0, misuse = 0, unknown = 0;
  std::vector<std::string> top;  // sampled misuse findings
};

inline ClassificationReport classify_corpus(const ModelBundle& b, const Corpus& corpus,
                                            std::size_t top_n, std::uint64_t seed) {
  ClassificationReport r;
  const Vectorizer vec(b.features);
  std::vector<std::pair<std::string, Decision>> misuses;
  for (const auto& ex : corpus.examples) {
    Decision d = classify_vector(b, vec(ex.graph));
    (d.verdict == Verdict::Correct ? r.correct : d.verdict == Verdict::Misuse ? r.misuse : r.unknown) += 1;
    if (d.verdict == Verdict::Misuse) misuses.emplace_back(ex.id, d);
    r.entries.push_back({ex.id, std::move(d)});
  }
  if (top_n > 0) r.top = rank_findings(misuses, top_n, seed);
  return r;
}

inline Json to_json(const ClassificationReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    Json matched = Json::array();
    for (std::size_t i : e.decision.matched) matched.push_back(i);
    entries.push_back(Json{{"id", e.id},
                           {"decision", to_string(e.decision.verdict)},
                           {"outlier_factor", e.decision.outlier_factor},
                           {"scores", {{"correct", e.decision.scores.correct}, {"misuse", e.decision.scores.misuse}}},
                           {"matched_features", matched}});
  }
  return Json{{"summary", {{"C", r.correct}, {"M", r.misuse}, {"U", r.unknown}, {"total", r.entries.size()}}},
              {"top", r.top},
              {"entries", entries}};
}

}  // namespace apiguard
