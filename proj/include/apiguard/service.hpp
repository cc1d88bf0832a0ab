#pragma once

// Labeling service state behind the HTTP routes. Writers (labels, train,
// classify) serialize on one mutex, work on a copy, persist it, then publish
// it; readers only load the published snapshot.

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "apiguard/isomorphism.hpp"
#include "apiguard/session.hpp"

namespace apiguard {

struct ServiceResponse {
  int status = 200;
  Json body;
};

inline ServiceResponse error_response(int status, const std::string& message) {
  return {status, Json{{"error", message}}};
}

struct ServiceState {
  LabelSession session;
  std::shared_ptr<const ModelBundle> model;  // null until trained or loaded
  std::map<std::string, Json> reports;
  std::size_t next_report = 1;
};

class LabelService {
 public:
  LabelService(std::string session_path, Corpus corpus, std::string model_path)
      : session_path_(std::move(session_path)),
        model_path_(std::move(model_path)),
        corpus_(std::make_shared<const Corpus>(std::move(corpus))) {
    auto st = std::make_shared<ServiceState>();
    st->session = load_session(session_path_);
    detail::check_corpus(st->session, *corpus_);
    if (std::filesystem::exists(model_path_)) st->model = std::make_shared<const ModelBundle>(load_model(model_path_));
    std::atomic_store(&state_, std::shared_ptr<const ServiceState>(std::move(st)));
  }

  std::shared_ptr<const ServiceState> snapshot() const { return std::atomic_load(&state_); }
  const Corpus& corpus() const { return *corpus_; }

  ServiceResponse get_session() const {
    const auto st = snapshot();
    Json j = to_json(session_status(st->session));
    j["api"] = st->session.api;
    j["trained"] = st->model != nullptr;
    return {200, j};
  }

  // Pending batch with source text and, per query, where each candidate
  // pattern of the last selection embeds.
  ServiceResponse get_queries() const {
    const auto st = snapshot();
    const LabelSession& s = st->session;
    const auto index = corpus_->index();
    Json queries = Json::array();
    std::vector<std::optional<PreparedGraph>> prepared(s.candidates.size());
    for (const auto& id : s.pending) {
      const UsageExample& ex = corpus_->examples[index.at(id)];
      const PreparedGraph target(ex.graph);
      Json highlights = Json::array();
      for (std::size_t c = 0; c < s.candidates.size(); ++c) {
        const auto& ids = s.candidates[c].graph_ids;
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) continue;
        if (!prepared[c]) prepared[c].emplace(graph_of(s.candidates[c].code));
        const auto emb = find_embedding(*prepared[c], target);
        if (!emb) continue;
        Json nodes = Json::array();
        for (int v : *emb) nodes.push_back(ex.graph.nodes[static_cast<std::size_t>(v)].id);
        highlights.push_back(Json{{"candidate", c}, {"nodes", nodes}});
      }
      auto sub = s.submitted.find(id);
      queries.push_back(Json{{"id", id},
                             {"project", ex.project},
                             {"method_name", ex.method_name},
                             {"source_text", ex.source_text},
                             {"label", sub == s.submitted.end() ? Json(nullptr) : Json(to_string(sub->second))},
                             {"highlights", highlights}});
    }
    return {200, Json{{"iteration", s.iteration},
                      {"stopped", s.stopped ? Json(*s.stopped) : Json(nullptr)},
                      {"queries", queries}}};
  }

  ServiceResponse get_features() const {
    const auto st = snapshot();
    Json out = Json::array();
    for (std::size_t i = 0; i < st->session.features.size(); ++i) {
      Json f = to_json(st->session.features[i]);
      f["index"] = i;
      f["hits"] = st->session.features[i].graph_ids.size();
      out.push_back(std::move(f));
    }
    return {200, Json{{"features", out}}};
  }

  // Body: {"labels": [{"id", "label"}], "token": optional} or a bare array.
  // The token may also come from the Idempotency-Key header.
  ServiceResponse post_labels(const std::string& body, const std::optional<std::string>& header_token = {}) {
    std::vector<std::pair<std::string, Label>> labels;
    std::optional<std::string> token = header_token;
    try {
      const Json j = Json::parse(body);
      const Json* list = &j;
      if (j.is_object()) {
        json_detail::expect_keys(j, "labels request", {"labels"}, {"token"});
        list = &j.at("labels");
        if (j.contains("token")) {
          const std::string t = json_detail::str(j, "token", "labels request");
          if (token && *token != t) throw SchemaError("body token and Idempotency-Key differ");
          token = t;
        }
      }
      if (!list->is_array() || list->empty()) throw SchemaError("labels must be a non-empty array");
      for (const auto& item : *list) {
        json_detail::expect_keys(item, "label", {"id", "label"});
        labels.emplace_back(json_detail::str(item, "id", "label"),
                            parse_label(json_detail::str(item, "label", "label")));
      }
    } catch (const Json::exception& e) {
      return error_response(400, std::string("malformed body: ") + e.what());
    } catch (const SchemaError& e) {
      return error_response(400, e.what());
    }

    std::lock_guard lock(write_);
    auto next = std::make_shared<ServiceState>(*snapshot());
    LabelSession& s = next->session;
    const std::size_t first_event = s.events.size();
    bool stepped = false;
    try {
      if (submit_labels(s, labels, token)) {
        step_session(s, *corpus_);
        stepped = true;
      }
    } catch (const SessionError& e) {
      return error_response(409, e.what());
    }
    if (auto r = persist_session(s)) return *r;
    Json events = Json::array();
    for (std::size_t i = first_event; i < s.events.size(); ++i)
      events.push_back(Json{{"seq", s.events[i].seq}, {"kind", s.events[i].kind}, {"payload", s.events[i].payload}});
    Json status = to_json(session_status(s));
    std::atomic_store(&state_, std::shared_ptr<const ServiceState>(std::move(next)));
    return {200, Json{{"accepted", labels.size()}, {"stepped", stepped}, {"events", events}, {"session", status}}};
  }

  ServiceResponse post_train() {
    std::lock_guard lock(write_);
    auto next = std::make_shared<ServiceState>(*snapshot());
    std::shared_ptr<const ModelBundle> model;
    try {
      model = std::make_shared<const ModelBundle>(train_session(next->session, *corpus_));
    } catch (const SessionError& e) {
      return error_response(409, e.what());
    } catch (const Error& e) {
      return error_response(422, e.what());
    }
    try {
      save_model(*model, model_path_);
    } catch (const Error& e) {
      return error_response(500, e.what());
    }
    if (auto r = persist_session(next->session)) return *r;
    next->model = model;
    const auto& best = model->report.grid[model->report.winner];
    Json out{{"family", to_string(best.spec.family)},
             {"spec", to_json(best.spec)},
             {"cv_f1", best.mean_f1},
             {"folds", model->report.folds},
             {"features", model->features.size()},
             {"model_path", model_path_}};
    std::atomic_store(&state_, std::shared_ptr<const ServiceState>(std::move(next)));
    return {200, out};
  }

  // Body: {"corpus_path": str, "top_n": optional int, "seed": optional int}.
  ServiceResponse post_classify(const std::string& body) {
    std::string path;
    std::size_t top_n = 0;
    std::uint64_t seed = 0;
    try {
      const Json j = Json::parse(body);
      json_detail::expect_keys(j, "classify request", {"corpus_path"}, {"top_n", "seed"});
      path = json_detail::str(j, "corpus_path", "classify request");
      if (j.contains("top_n")) top_n = j.at("top_n").get<std::size_t>();
      if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
    } catch (const Json::exception& e) {
      return error_response(400, std::string("malformed body: ") + e.what());
    } catch (const SchemaError& e) {
      return error_response(400, e.what());
    }
    const auto model = snapshot()->model;
    if (!model) return error_response(409, "no trained model");
    Corpus target;
    try {
      target = load_corpus(path);
    } catch (const Error& e) {
      return error_response(400, e.what());
    }
    // Classification runs outside the lock; only publishing the report writes.
    Json report = to_json(classify_corpus(*model, target, top_n, seed));
    report["corpus_path"] = path;

    std::lock_guard lock(write_);
    auto next = std::make_shared<ServiceState>(*snapshot());
    const std::string id = "r" + std::to_string(next->next_report++);
    report["id"] = id;
    Json summary = report.at("summary");
    next->reports[id] = std::move(report);
    std::atomic_store(&state_, std::shared_ptr<const ServiceState>(std::move(next)));
    return {200, Json{{"report_id", id}, {"summary", summary}}};
  }

  ServiceResponse get_report(const std::string& id) const {
    const auto st = snapshot();
    auto it = st->reports.find(id);
    if (it == st->reports.end()) return error_response(404, "no report '" + id + "'");
    return {200, it->second};
  }

 private:
  std::optional<ServiceResponse> persist_session(const LabelSession& s) {
    try {
      save_session(s, session_path_);
    } catch (const Error& e) {
      return error_response(500, e.what());
    }
    return std::nullopt;
  }

  std::string session_path_;
  std::string model_path_;
  std::shared_ptr<const Corpus> corpus_;
  std::mutex write_;
  std::shared_ptr<const ServiceState> state_;
};

}  // namespace apiguard
