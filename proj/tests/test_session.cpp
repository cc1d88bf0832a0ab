#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "apiguard/session.hpp"
#include "apiguard/synthetic.hpp"
#include "helpers.hpp"

using namespace apiguard;

namespace {

PlantedCorpus small_planted(std::size_t n, std::uint64_t seed) {
  PlantedConfig pc;
  pc.size = n;
  return generate_planted(pc, seed);
}

std::vector<std::pair<std::string, Label>> answers(const LabelSession& s, const PlantedCorpus& p) {
  std::vector<std::pair<std::string, Label>> out;
  for (const auto& id : s.pending) out.emplace_back(id, p.annotator.at(id));
  return out;
}

void run_to_stop(LabelSession& s, const PlantedCorpus& p) {
  while (!s.stopped) {
    submit_labels(s, answers(s, p));
    step_session(s, p.corpus);
  }
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("apiguard_test_" + name)).string();
}

SessionError::Kind error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const SessionError& e) {
    return e.kind();
  }
  FAIL("no SessionError thrown");
  return SessionError::Kind::State;
}

}  // namespace

TEST_CASE("session starts with the initial batch", "[session]") {
  const auto p = small_planted(400, 3);
  const auto s = start_session(p.corpus, {}, 11);
  CHECK(s.pending.size() == 30);
  CHECK(std::set<std::string>(s.pending.begin(), s.pending.end()).size() == 30);
  CHECK(s.labeled.empty());
  REQUIRE(s.events.size() == 1);
  CHECK(s.events[0].kind == "batch_issued");
  CHECK(s.events[0].seq == 1);
  // Same seed, same batch.
  CHECK(start_session(p.corpus, {}, 11).pending == s.pending);
  CHECK(start_session(p.corpus, {}, 12).pending != s.pending);

  // Corpus smaller than the initial batch.
  const auto tiny = small_planted(7, 1);
  CHECK(start_session(tiny.corpus, {}, 1).pending.size() == 7);
  CHECK_THROWS(start_session(Corpus{}, {}, 1));
}

TEST_CASE("stepping needs a complete batch", "[session]") {
  const auto p = small_planted(300, 5);
  auto s = start_session(p.corpus, {}, 2);
  CHECK(error_kind([&] { step_session(s, p.corpus); }) == SessionError::Kind::Incomplete);
  auto a = answers(s, p);
  a.pop_back();
  CHECK_FALSE(submit_labels(s, a));
  CHECK(error_kind([&] { step_session(s, p.corpus); }) == SessionError::Kind::Incomplete);
  const auto rest = answers(s, p);
  CHECK(submit_labels(s, {rest.back()}));
  step_session(s, p.corpus);
  CHECK(s.labeled.size() == 30);
  CHECK(s.submitted.empty());
}

TEST_CASE("label submissions conflict on misuse of ids and tokens", "[session]") {
  const auto p = small_planted(300, 6);
  auto s = start_session(p.corpus, {}, 4);
  const std::string outside = [&] {
    const std::set<std::string> pend(s.pending.begin(), s.pending.end());
    for (const auto& ex : p.corpus.examples)
      if (!pend.contains(ex.id)) return ex.id;
    return std::string();
  }();
  using K = SessionError::Kind;
  CHECK(error_kind([&] { submit_labels(s, {{outside, Label::Correct}}); }) == K::Conflict);
  CHECK(error_kind([&] { submit_labels(s, {{s.pending[0], Label::Correct}, {s.pending[0], Label::Misuse}}); }) ==
        K::Conflict);
  // A rejected request changes nothing.
  CHECK(s.submitted.empty());
  CHECK(s.events.size() == 1);

  submit_labels(s, {{s.pending[0], Label::Misuse}}, "t1");
  CHECK(error_kind([&] { submit_labels(s, {{s.pending[1], Label::Correct}}, "t1"); }) == K::Conflict);
  CHECK(s.submitted.size() == 1);
  // Relabeling a pending id before the step overwrites.
  submit_labels(s, {{s.pending[0], Label::Correct}}, "t2");
  CHECK(s.submitted.at(s.pending[0]) == Label::Correct);

  submit_labels(s, answers(s, p));
  step_session(s, p.corpus);
  // Already-labeled ids are no longer pending.
  const std::string old = s.labeled.begin()->first;
  if (!s.stopped) CHECK(error_kind([&] { submit_labels(s, {{old, Label::Correct}}); }) == K::Conflict);
}

TEST_CASE("sessions refuse a different corpus", "[session]") {
  const auto p = small_planted(200, 8);
  const auto q = small_planted(200, 9);
  auto s = start_session(p.corpus, {}, 1);
  submit_labels(s, answers(s, p));
  CHECK(error_kind([&] { step_session(s, q.corpus); }) == SessionError::Kind::State);
}

TEST_CASE("coverage and budget invariants over seeded full sessions", "[session]") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    PlantedConfig pc;
    pc.size = 1000;
    // Vary the mixture so some runs stop on budget.
    pc.head_share = seed % 2 ? 0.25 : 0.4;
    pc.tail_share = seed % 2 ? 0.25 : 0.4;
    const auto p = generate_planted(pc, 500 + seed);
    const SessionConfig cfg;
    auto s = start_session(p.corpus, cfg, seed);
    run_to_stop(s, p);

    const std::size_t per_batch = static_cast<std::size_t>(std::ceil(cfg.selector.batch_fraction * 1000 - 1e-9));
    const std::size_t budget = static_cast<std::size_t>(std::ceil(cfg.selector.label_budget_fraction * 1000 - 1e-9));
    CHECK(s.labeled.size() <= budget + static_cast<std::size_t>(cfg.selector.initial_batch));
    std::set<std::string> issued;
    for (std::size_t b = 0; b < s.batches.size(); ++b) {
      if (b > 0) CHECK(s.batches[b].size() <= per_batch);
      for (const auto& id : s.batches[b]) CHECK(issued.insert(id).second);  // never asked twice
    }
    CHECK(issued.size() == s.labeled.size());

    double last = -1;
    std::size_t last_features = 0;
    for (const auto& e : s.events) {
      if (e.kind != "features_updated") continue;
      const double cov = e.payload.at("coverage").get<double>();
      CHECK(cov >= last);
      CHECK(e.payload.at("features").get<std::size_t>() >= last_features);
      last = cov;
      last_features = e.payload.at("features").get<std::size_t>();
    }
    CHECK(s.coverage == Catch::Approx(coverage(s.features, p.corpus)));

    REQUIRE(s.stopped);
    if (*s.stopped == "coverage") CHECK(s.coverage > cfg.selector.coverage_target);
    else if (*s.stopped == "budget") CHECK(s.labeled.size() >= budget);
    else CHECK(*s.stopped == "exhausted");

    // Event clock is gapless.
    for (std::size_t i = 0; i < s.events.size(); ++i) CHECK(s.events[i].seq == i + 1);
    CHECK_THROWS_AS(submit_labels(s, {}), SessionError);
  }
}

TEST_CASE("stopping reasons", "[session]") {
  SECTION("budget") {
    const auto p = small_planted(1000, 21);
    SessionConfig cfg;
    cfg.selector.coverage_target = 1.0;  // never reached: strict inequality
    cfg.selector.label_budget_fraction = 0.02;
    auto s = start_session(p.corpus, cfg, 1);
    run_to_stop(s, p);
    CHECK(*s.stopped == "budget");
    CHECK(s.labeled.size() == 30);
  }
  SECTION("exhausted") {
    // Unique labels everywhere: nothing is frequent, so no batch can be formed.
    Corpus c;
    c.api = "x";
    for (int i = 0; i < 40; ++i) {
      UsageExample ex;
      ex.id = "g" + std::to_string(i);
      ex.graph = testing::make_graph({{"a", NodeKind::Action, "call" + std::to_string(i)}}, {});
      c.examples.push_back(ex);
    }
    SessionConfig cfg;
    cfg.selector.initial_batch = 10;
    cfg.selector.label_budget_fraction = 1.0;
    cfg.selector.coverage_target = 1.0;
    auto s = start_session(c, cfg, 3);
    std::vector<std::pair<std::string, Label>> l;
    for (std::size_t i = 0; i < s.pending.size(); ++i) l.emplace_back(s.pending[i], i % 2 ? Label::Misuse : Label::Correct);
    submit_labels(s, l);
    step_session(s, c);
    CHECK(*s.stopped == "exhausted");
    CHECK(s.features.empty());
    CHECK_THROWS_WITH(train_session(s, c), Catch::Matchers::ContainsSubstring("no features"));
  }
  SECTION("coverage") {
    const auto p = small_planted(1000, 4);
    auto s = start_session(p.corpus, {}, 1);
    CHECK_THROWS_AS(train_session(s, p.corpus), SessionError);
    run_to_stop(s, p);
    CHECK(*s.stopped == "coverage");
  }
}

TEST_CASE("session and model files round-trip bit-exactly", "[session]") {
  const auto p = small_planted(600, 31);
  auto s = start_session(p.corpus, {}, 9);
  submit_labels(s, answers(s, p), "first");
  step_session(s, p.corpus);
  if (!s.stopped) submit_labels(s, {{s.pending[0], Label::Misuse}}, "partial");

  const std::string path = temp_path("session.json");
  save_session(s, path);
  const LabelSession back = load_session(path);
  CHECK(back == s);
  CHECK(session_text(back) == read_file(path));
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));

  run_to_stop(s, p);
  const ModelBundle b = train_session(s, p.corpus);
  const std::string mpath = temp_path("model.json");
  save_model(b, mpath);
  const ModelBundle mb = load_model(mpath);
  CHECK(mb == b);
  CHECK(model_text(mb) == read_file(mpath));
  for (const auto& ex : p.corpus.examples) {
    const Decision d1 = classify(b, ex.graph), d2 = classify(mb, ex.graph);
    CHECK(d1.verdict == d2.verdict);
    CHECK(d1.outlier_factor == d2.outlier_factor);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(mpath);
}

TEST_CASE("a resumed session reproduces the same batches", "[session]") {
  for (std::uint64_t seed : {2u, 14u}) {
    PlantedConfig pc;
    pc.size = 1000;
    pc.head_share = pc.tail_share = 0.4;  // runs for many iterations
    const auto p = generate_planted(pc, 77 + seed);
    auto straight = start_session(p.corpus, {}, seed);
    run_to_stop(straight, p);

    auto resumed = start_session(p.corpus, {}, seed);
    const std::string path = temp_path("resume.json");
    while (!resumed.stopped) {
      submit_labels(resumed, answers(resumed, p));
      save_session(resumed, path);
      resumed = load_session(path);
      step_session(resumed, p.corpus);
      save_session(resumed, path);
      resumed = load_session(path);
    }
    CHECK(resumed.batches == straight.batches);
    CHECK(session_text(resumed) == session_text(straight));
    std::filesystem::remove(path);
  }
}

TEST_CASE("session files are validated on load", "[session]") {
  const auto p = small_planted(100, 1);
  const auto s = start_session(p.corpus, {}, 1);
  Json j = to_json(s);
  j["format"] = "apiguard-session/0";
  CHECK_THROWS_AS(session_from_json(j), SchemaError);
  j = to_json(s);
  j["extra"] = 1;
  CHECK_THROWS_AS(session_from_json(j), SchemaError);
  j = to_json(s);
  j["labeled"][s.pending[0]] = "C";
  CHECK_THROWS_AS(session_from_json(j), SchemaError);

  CHECK(session_config_from_json(Json::object()) == SessionConfig{});
  CHECK(session_config_from_json(Json::parse(R"({"miner":{"min_sup":4}})")).miner.min_sup == 4);
  CHECK_THROWS_AS(session_config_from_json(Json::parse(R"({"miner":{"minsup":4}})")), SchemaError);
  CHECK_THROWS(session_config_from_json(Json::parse(R"({"selector":{"coverage_target":1.5}})")));
  const SessionConfig c = session_config_from_json(to_json(SessionConfig{}));
  CHECK(c == SessionConfig{});
}

TEST_CASE("trained bundle classifies a planted held-out set", "[session]") {
  const auto p = small_planted(1000, 40);
  auto s = start_session(p.corpus, {}, 40);
  run_to_stop(s, p);
  const ModelBundle b = train_session(s, p.corpus);
  CHECK(s.events.back().kind == "model_trained");
  CHECK(b.novelty.vectors.size() == s.labeled.size());

  // Labeled graphs never come back Unknown.
  const auto report = classify_corpus(b, p.corpus, 5, 1);
  for (const auto& e : report.entries)
    if (s.labeled.contains(e.id)) CHECK(e.decision.verdict != Verdict::Unknown);
  CHECK(report.correct + report.misuse + report.unknown == p.corpus.size());
  CHECK(report.top.size() == std::min<std::size_t>(5, report.misuse));
  const Json rj = to_json(report);
  CHECK(rj.at("summary").at("total") == p.corpus.size());
}
