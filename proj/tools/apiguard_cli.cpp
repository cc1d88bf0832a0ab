// apiguard command line: corpus ingestion, the labeling session, training,
// classification and the labeling service.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "apiguard/http.hpp"

using namespace apiguard;

namespace {

struct Options {
  std::uint64_t seed = 1;
  std::string config_path;

  std::string corpus_path;
  std::string out_path;
  std::string session_path;
  std::string model_path;
  std::string labels_path;
  std::string token;
  std::string host = "127.0.0.1";
  double threshold = kDefaultCloneThreshold;
  std::size_t top_n = 0;
  int port = 8080;
  bool force = false;
  bool from_corpus = false;
};

SessionConfig load_config(const Options& o) {
  if (o.config_path.empty()) return {};
  try {
    return session_config_from_json(Json::parse(read_file(o.config_path)));
  } catch (const Json::exception& e) {
    throw SchemaError("config '" + o.config_path + "': " + e.what());
  }
}

void print(const Json& j) { std::cout << j.dump(2) << '\n'; }

Json events_since(const LabelSession& s, std::size_t first) {
  Json out = Json::array();
  for (std::size_t i = first; i < s.events.size(); ++i)
    out.push_back(Json{{"seq", s.events[i].seq}, {"kind", s.events[i].kind}, {"payload", s.events[i].payload}});
  return out;
}

int cmd_ingest(const Options& o) {
  const Corpus in = load_corpus(o.corpus_path);
  const Corpus out = deduplicate(in, o.threshold);
  save_corpus(out, o.out_path);
  print(Json{{"loaded", in.size()}, {"dropped", in.size() - out.size()}, {"kept", out.size()}});
  return 0;
}

int cmd_session_start(const Options& o) {
  if (!o.force && std::filesystem::exists(o.session_path))
    throw Error("session '" + o.session_path + "' exists; use --force to replace it");
  const Corpus corpus = load_corpus(o.corpus_path);
  const LabelSession s = start_session(corpus, load_config(o), o.seed);
  save_session(s, o.session_path);
  print(events_since(s, 0));
  return 0;
}

int cmd_session_label(const Options& o) {
  LabelSession s = load_session(o.session_path);
  std::vector<std::pair<std::string, Label>> labels;
  if (o.from_corpus) {
    const Corpus corpus = load_corpus(o.corpus_path);
    const auto index = corpus.index();
    for (const auto& id : s.pending) {
      auto it = index.find(id);
      if (it == index.end()) throw Error("pending id '" + id + "' not in corpus");
      const auto& l = corpus.examples[it->second].label;
      if (l && !s.submitted.contains(id)) labels.emplace_back(id, *l);
    }
  } else {
    const Json j = Json::parse(read_file(o.labels_path));
    const Json& list = j.is_object() ? j.at("labels") : j;
    for (const auto& item : list) {
      json_detail::expect_keys(item, "label", {"id", "label"});
      labels.emplace_back(json_detail::str(item, "id", "label"), parse_label(json_detail::str(item, "label", "label")));
    }
  }
  const std::size_t first = s.events.size();
  const bool complete =
      labels.empty() ? batch_complete(s) : submit_labels(s, labels, o.token.empty() ? std::nullopt : std::optional(o.token));
  save_session(s, o.session_path);
  print(Json{{"accepted", labels.size()}, {"batch_complete", complete}, {"events", events_since(s, first)}});
  return 0;
}

int cmd_session_step(const Options& o) {
  LabelSession s = load_session(o.session_path);
  const Corpus corpus = load_corpus(o.corpus_path);
  const std::size_t first = s.events.size();
  step_session(s, corpus);
  save_session(s, o.session_path);
  print(events_since(s, first));
  return 0;
}

int cmd_session_status(const Options& o) {
  const LabelSession s = load_session(o.session_path);
  Json j = to_json(session_status(s));
  j["pending_ids"] = s.pending;
  print(j);
  return 0;
}

int cmd_train(const Options& o) {
  LabelSession s = load_session(o.session_path);
  const Corpus corpus = load_corpus(o.corpus_path);
  const ModelBundle b = train_session(s, corpus);
  save_model(b, o.out_path);
  save_session(s, o.session_path);
  const auto& best = b.report.grid[b.report.winner];
  print(Json{{"family", to_string(best.spec.family)},
             {"spec", to_json(best.spec)},
             {"cv_f1", best.mean_f1},
             {"folds", b.report.folds},
             {"features", b.features.size()}});
  return 0;
}

int cmd_classify(const Options& o) {
  const ModelBundle b = load_model(o.model_path);
  const Corpus corpus = load_corpus(o.corpus_path);
  const ClassificationReport r = classify_corpus(b, corpus, o.top_n, o.seed);
  const Json j = to_json(r);
  write_file_atomic(o.out_path, j.dump(1) + "\n");
  print(Json{{"summary", j.at("summary")}, {"top", j.at("top")}});
  return 0;
}

int cmd_serve(const Options& o) {
  const std::string model = o.model_path.empty() ? o.session_path + ".model.json" : o.model_path;
  LabelService service(o.session_path, load_corpus(o.corpus_path), model);
  httplib::Server server;
  mount_routes(server, service);
  std::cerr << "serving " << o.session_path << " on http://" << o.host << ":" << o.port << "\n";
  if (!server.listen(o.host, o.port)) throw Error("cannot listen on " + o.host + ":" + std::to_string(o.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mine discriminative API-usage subgraphs with an active labeling loop and classify usages."};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--config", o.config_path, "Config file (miner, selector, classifier sections)")
      ->check(CLI::ExistingFile);

  int (*run)(const Options&) = nullptr;

  auto* ingest = app.add_subcommand("ingest", "Deduplicate a corpus");
  ingest->add_option("corpus", o.corpus_path, "Input corpus")->required();
  ingest->add_option("-o,--out", o.out_path, "Output corpus")->required();
  ingest->add_option("--threshold", o.threshold, "Clone similarity threshold")->capture_default_str();
  ingest->callback([&] { run = cmd_ingest; });

  auto* session = app.add_subcommand("session", "Labeling session");
  session->require_subcommand(1);
  session->fallthrough();
  auto* start = session->add_subcommand("start", "Create a session and issue the initial batch");
  start->add_option("session", o.session_path, "Session file")->required();
  start->add_option("--corpus", o.corpus_path, "Corpus")->required();
  start->add_flag("--force", o.force, "Replace an existing session file");
  start->callback([&] { run = cmd_session_start; });

  auto* label = session->add_subcommand("label", "Submit labels for the pending batch");
  label->add_option("session", o.session_path, "Session file")->required();
  auto* labels_opt = label->add_option("--labels", o.labels_path, "Labels file: [{id, label}]");
  auto* from = label->add_flag("--from-corpus", o.from_corpus, "Take labels from the corpus records");
  label->add_option("--corpus", o.corpus_path, "Corpus (with --from-corpus)");
  label->add_option("--token", o.token, "Idempotency token");
  labels_opt->excludes(from);
  label->callback([&] {
    if (o.labels_path.empty() && !o.from_corpus) throw CLI::ValidationError("need --labels or --from-corpus");
    if (o.from_corpus && o.corpus_path.empty()) throw CLI::ValidationError("--from-corpus needs --corpus");
    run = cmd_session_label;
  });

  auto* step = session->add_subcommand("step", "Consume the labeled batch and select the next one");
  step->add_option("session", o.session_path, "Session file")->required();
  step->add_option("--corpus", o.corpus_path, "Corpus")->required();
  step->callback([&] { run = cmd_session_step; });

  auto* status = session->add_subcommand("status", "Show session progress");
  status->add_option("session", o.session_path, "Session file")->required();
  status->callback([&] { run = cmd_session_status; });

  auto* train = app.add_subcommand("train", "Train a model from a stopped session");
  train->add_option("session", o.session_path, "Session file")->required();
  train->add_option("--corpus", o.corpus_path, "Corpus")->required();
  train->add_option("-o,--out", o.out_path, "Model file")->required();
  train->callback([&] { run = cmd_train; });

  auto* classify = app.add_subcommand("classify", "Classify a corpus with a trained model");
  classify->add_option("model", o.model_path, "Model file")->required();
  classify->add_option("--corpus", o.corpus_path, "Corpus")->required();
  classify->add_option("-o,--out", o.out_path, "Report file")->required();
  classify->add_option("--top", o.top_n, "Sample this many misuse findings")->capture_default_str();
  classify->callback([&] { run = cmd_classify; });

  auto* serve = app.add_subcommand("serve", "Run the labeling service");
  serve->add_option("session", o.session_path, "Session file")->required();
  serve->add_option("--corpus", o.corpus_path, "Corpus")->required();
  serve->add_option("--model", o.model_path, "Model file (default: <session>.model.json)");
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve->add_option("--port", o.port, "Port")->capture_default_str();
  serve->callback([&] { run = cmd_serve; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return run(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
