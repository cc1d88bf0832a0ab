#pragma once

// Misuse classification over binary subgraph-feature vectors: minority
// oversampling, a cross-validated grid over SVM / kNN / naive Bayes models,
// local-outlier-factor novelty gating, and ranking of reported misuses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "apiguard/corpus.hpp"
#include "apiguard/isomorphism.hpp"
#include "apiguard/json_io.hpp"
#include "apiguard/miner.hpp"
#include "apiguard/rng.hpp"

namespace apiguard {

using FeatureVector = std::vector<std::uint8_t>;

struct Sample {
  FeatureVector x;
  Label y;
  friend bool operator==(const Sample&, const Sample&) = default;
};

// Matches graphs against a fixed, ordered feature list.
class Vectorizer {
 public:
  explicit Vectorizer(const std::vector<SubgraphFeature>& features) {
    for (const auto& f : features) patterns_.emplace_back(f.pattern);
  }
  FeatureVector operator()(const Eaug& g) const {
    const PreparedGraph target(g);
    FeatureVector v(patterns_.size(), 0);
    for (std::size_t i = 0; i < patterns_.size(); ++i) v[i] = is_subgraph(patterns_[i], target) ? 1 : 0;
    return v;
  }
  std::size_t dimension() const { return patterns_.size(); }

 private:
  std::vector<PreparedGraph> patterns_;
};

inline FeatureVector vectorize(const Eaug& g, const std::vector<SubgraphFeature>& features) {
  if (features.empty()) throw Error("cannot vectorize over an empty feature set");
  return Vectorizer(features)(g);
}

inline void require_both_classes(const std::vector<Sample>& data) {
  bool c = false, m = false;
  for (const auto& s : data) (s.y == Label::Correct ? c : m) = true;
  if (!c || !m) throw Error("degenerate training set");
}

// Duplicates minority samples (with replacement) until both classes have the
// majority count, then shuffles.
inline std::vector<Sample> oversample(const std::vector<Sample>& train, std::uint64_t seed) {
  require_both_classes(train);
  std::vector<std::size_t> correct, misuse;
  for (std::size_t i = 0; i < train.size(); ++i)
    (train[i].y == Label::Correct ? correct : misuse).push_back(i);
  const auto& minority = correct.size() < misuse.size() ? correct : misuse;
  const std::size_t majority = std::max(correct.size(), misuse.size());
  Rng rng(seed);
  std::vector<Sample> out = train;
  for (std::size_t have = minority.size(); have < majority; ++have)
    out.push_back(train[minority[rng.below(minority.size())]]);
  rng.shuffle(out);
  return out;
}

inline double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
  return d;
}

// ---------------------------------------------------------------------------
// Models

enum class Family : std::uint8_t { LinearSvm, RbfSvm, Knn, BernoulliNb, ComplementNb };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::LinearSvm: return "svm-linear";
    case Family::RbfSvm: return "svm-rbf";
    case Family::Knn: return "knn";
    case Family::BernoulliNb: return "bernoulli-nb";
    case Family::ComplementNb: return "complement-nb";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  for (Family f : {Family::LinearSvm, Family::RbfSvm, Family::Knn, Family::BernoulliNb,
                   Family::ComplementNb})
    if (to_string(f) == s) return f;
  throw SchemaError("unknown classifier family '" + std::string(s) + "'");
}

// One grid point. `c` is the SVM penalty, `gamma` the RBF width, `k` the
// neighbor count, `alpha` the Bayes smoothing.
struct ModelSpec {
  Family family = Family::LinearSvm;
  double c = 1.0;
  double gamma = 0.0;
  int k = 0;
  double alpha = 0.0;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ClassifierGrid {
  std::vector<double> linear_c{0.1, 1.0, 10.0};
  std::vector<double> rbf_c{0.1, 1.0, 10.0};
  std::vector<double> rbf_gamma{0.1, 1.0};
  std::vector<int> knn_k{1, 3, 5};
  std::vector<double> nb_alpha{0.1, 1.0};

  // In tie-break order: family order, then smaller hyperparameters.
  std::vector<ModelSpec> points() const {
    std::vector<ModelSpec> out;
    auto sorted = [](auto v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    for (double c : sorted(linear_c)) out.push_back({Family::LinearSvm, c, 0, 0, 0});
    for (double c : sorted(rbf_c))
      for (double g : sorted(rbf_gamma)) out.push_back({Family::RbfSvm, c, g, 0, 0});
    for (int k : sorted(knn_k)) out.push_back({Family::Knn, 0, 0, k, 0});
    for (double a : sorted(nb_alpha)) out.push_back({Family::BernoulliNb, 0, 0, 0, a});
    for (double a : sorted(nb_alpha)) out.push_back({Family::ComplementNb, 0, 0, 0, a});
    return out;
  }
  friend bool operator==(const ClassifierGrid&, const ClassifierGrid&) = default;
};

// A fitted model. Which members are used depends on the family:
// linear SVM: weights + bias; RBF SVM: vectors, coef (alpha_i y_i), bias;
// kNN: vectors + labels; naive Bayes: per-class log tables in `log_prob`
// (Bernoulli: [class][feature][value]; complement: [class][feature]) and
// `log_prior`.
struct Model {
  ModelSpec spec;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<FeatureVector> vectors;
  std::vector<double> coef;
  std::vector<Label> labels;
  std::vector<double> log_prob;
  std::vector<double> log_prior;
  std::size_t dim = 0;

  friend bool operator==(const Model&, const Model&) = default;
};

namespace detail {

inline double sign_of(Label y) { return y == Label::Misuse ? 1.0 : -1.0; }

// Dual coordinate descent for the L2-regularized hinge-loss SVM with the bias
// folded in as a constant feature.
inline Model fit_linear_svm(const ModelSpec& spec, const std::vector<Sample>& data,
                            std::uint64_t seed) {
  Model m;
  m.spec = spec;
  m.dim = data.front().x.size();
  const std::size_t n = data.size();
  std::vector<double> w(m.dim + 1, 0.0), alpha(n, 0.0), qii(n);
  for (std::size_t i = 0; i < n; ++i)
    qii[i] = 1.0 + std::accumulate(data[i].x.begin(), data[i].x.end(), 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int epoch = 0; epoch < 1000; ++epoch) {
    rng.shuffle(order);
    double pg_max = -1e300, pg_min = 1e300;
    for (std::size_t i : order) {
      const double y = sign_of(data[i].y);
      double wx = w[m.dim];
      for (std::size_t j = 0; j < m.dim; ++j) wx += data[i].x[j] * w[j];
      const double g = y * wx - 1.0;
      double pg = g;
      if (alpha[i] == 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] == spec.c) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) < 1e-12) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, spec.c);
      const double delta = (alpha[i] - old) * y;
      for (std::size_t j = 0; j < m.dim; ++j) w[j] += delta * data[i].x[j];
      w[m.dim] += delta;
    }
    if (pg_max - pg_min < 1e-4) break;
  }
  m.bias = w[m.dim];
  w.pop_back();
  m.weights = std::move(w);
  return m;
}

// SMO with maximal-violating-pair working set selection.
inline Model fit_rbf_svm(const ModelSpec& spec, const std::vector<Sample>& data) {
  const std::size_t n = data.size();
  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      K[i * n + j] = std::exp(-spec.gamma * squared_distance(data[i].x, data[j].x));
  std::vector<double> y(n), alpha(n, 0.0), grad(n, -1.0);  // gradient of the dual objective
  for (std::size_t i = 0; i < n; ++i) y[i] = sign_of(data[i].y);
  const double C = spec.c, tol = 1e-3;
  auto in_up = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0);
  };
  auto in_low = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C);
  };
  for (int iter = 0; iter < 100000; ++iter) {
    std::size_t i = n, j = n;
    double gmax = -1e300, gmin = 1e300;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < tol) break;
    const double a = std::max(K[i * n + i] + K[j * n + j] - 2 * K[i * n + j], 1e-12);
    const double old_i = alpha[i], old_j = alpha[j];
    // Move along y_i d_i = -y_j d_j.
    double step = (gmax - gmin) / a;
    // Bounds for alpha_i + y_i*step, alpha_j - y_j*step.
    auto room_i = y[i] > 0 ? C - old_i : old_i;
    auto room_j = y[j] > 0 ? old_j : C - old_j;
    step = std::min({step, room_i, room_j});
    alpha[i] = old_i + y[i] * step;
    alpha[j] = old_j - y[j] * step;
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t)
      grad[t] += y[t] * (y[i] * K[t * n + i] * di + y[j] * K[t * n + j] * dj);
  }
  // Bias from free vectors, else the midpoint of the feasible interval.
  double sum = 0;
  int free = 0;
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0 && alpha[t] < C) {
      sum += -y[t] * grad[t];
      ++free;
    }
  Model m;
  m.spec = spec;
  m.dim = data.front().x.size();
  if (free > 0) {
    m.bias = sum / free;
  } else {
    double up = -1e300, low = 1e300;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t)) up = std::max(up, v);
      if (in_low(t)) low = std::min(low, v);
    }
    m.bias = (up > -1e300 && low < 1e300) ? 0.5 * (up + low) : 0.0;
  }
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0) {
      m.vectors.push_back(data[t].x);
      m.coef.push_back(alpha[t] * y[t]);
    }
  return m;
}

inline Model fit_knn(const ModelSpec& spec, const std::vector<Sample>& data) {
  Model m;
  m.spec = spec;
  m.dim = data.front().x.size();
  for (const auto& s : data) {
    m.vectors.push_back(s.x);
    m.labels.push_back(s.y);
  }
  return m;
}

inline Model fit_bernoulli_nb(const ModelSpec& spec, const std::vector<Sample>& data) {
  Model m;
  m.spec = spec;
  m.dim = data.front().x.size();
  double count[2] = {0, 0};
  std::vector<double> ones(2 * m.dim, 0.0);
  for (const auto& s : data) {
    const int c = s.y == Label::Misuse;
    count[c] += 1;
    for (std::size_t j = 0; j < m.dim; ++j) ones[c * m.dim + j] += s.x[j];
  }
  m.log_prob.resize(2 * m.dim * 2);
  for (int c = 0; c < 2; ++c) {
    m.log_prior.push_back(std::log(count[c] / (count[0] + count[1])));
    for (std::size_t j = 0; j < m.dim; ++j) {
      const double p = (ones[c * m.dim + j] + spec.alpha) / (count[c] + 2 * spec.alpha);
      m.log_prob[(c * m.dim + j) * 2 + 1] = std::log(p);
      m.log_prob[(c * m.dim + j) * 2 + 0] = std::log(1 - p);
    }
  }
  return m;
}

// Complement naive Bayes: each class is scored by how unlike the other
// class's feature distribution the sample is.
inline Model fit_complement_nb(const ModelSpec& spec, const std::vector<Sample>& data) {
  Model m;
  m.spec = spec;
  m.dim = data.front().x.size();
  std::vector<double> feat(2 * m.dim, 0.0);
  double count[2] = {0, 0};
  for (const auto& s : data) {
    const int c = s.y == Label::Misuse;
    count[c] += 1;
    for (std::size_t j = 0; j < m.dim; ++j) feat[c * m.dim + j] += s.x[j];
  }
  m.log_prob.resize(2 * m.dim);
  for (int c = 0; c < 2; ++c) {
    const int other = 1 - c;
    double total = 0;
    for (std::size_t j = 0; j < m.dim; ++j) total += feat[other * m.dim + j] + spec.alpha;
    for (std::size_t j = 0; j < m.dim; ++j)
      m.log_prob[c * m.dim + j] = -std::log((feat[other * m.dim + j] + spec.alpha) / total);
    m.log_prior.push_back(std::log(count[c] / (count[0] + count[1])));
  }
  return m;
}

}  // namespace detail

inline Model fit_model(const ModelSpec& spec, const std::vector<Sample>& data, std::uint64_t seed) {
  require_both_classes(data);
  switch (spec.family) {
    case Family::LinearSvm: return detail::fit_linear_svm(spec, data, seed);
    case Family::RbfSvm: return detail::fit_rbf_svm(spec, data);
    case Family::Knn: return detail::fit_knn(spec, data);
    case Family::BernoulliNb: return detail::fit_bernoulli_nb(spec, data);
    case Family::ComplementNb: return detail::fit_complement_nb(spec, data);
  }
  throw Error("unknown family");
}

struct ClassScores {
  double correct = 0.0;
  double misuse = 0.0;
  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

// Misuse wins only on a strictly higher score.
inline ClassScores model_scores(const Model& m, const FeatureVector& x) {
  if (x.size() != m.dim) throw Error("feature vector has the wrong dimension");
  switch (m.spec.family) {
    case Family::LinearSvm: {
      double f = m.bias;
      for (std::size_t j = 0; j < m.dim; ++j) f += m.weights[j] * x[j];
      return {-f, f};
    }
    case Family::RbfSvm: {
      double f = m.bias;
      for (std::size_t t = 0; t < m.vectors.size(); ++t)
        f += m.coef[t] * std::exp(-m.spec.gamma * squared_distance(m.vectors[t], x));
      return {-f, f};
    }
    case Family::Knn: {
      std::vector<std::pair<double, std::size_t>> d;
      for (std::size_t t = 0; t < m.vectors.size(); ++t) d.emplace_back(squared_distance(m.vectors[t], x), t);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.spec.k), d.size());
      std::sort(d.begin(), d.end());
      // Binary vectors tie constantly; everything as close as the k-th
      // neighbor votes, so the result does not depend on training order.
      std::size_t n = k;
      while (n < d.size() && d[n].first == d[k - 1].first) ++n;
      double votes = 0;
      for (std::size_t t = 0; t < n; ++t) votes += m.labels[d[t].second] == Label::Misuse;
      return {1.0 - votes / static_cast<double>(n), votes / static_cast<double>(n)};
    }
    case Family::BernoulliNb: {
      double s[2];
      for (int c = 0; c < 2; ++c) {
        s[c] = m.log_prior[c];
        for (std::size_t j = 0; j < m.dim; ++j) s[c] += m.log_prob[(c * m.dim + j) * 2 + x[j]];
      }
      return {s[0], s[1]};
    }
    case Family::ComplementNb: {
      double s[2] = {0, 0};
      for (int c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < m.dim; ++j) s[c] += m.log_prob[c * m.dim + j] * x[j];
      return {s[0], s[1]};
    }
  }
  return {};
}

inline Label predict(const Model& m, const FeatureVector& x) {
  const ClassScores s = model_scores(m, x);
  return s.misuse > s.correct ? Label::Misuse : Label::Correct;
}

// F1 of the Misuse class; 0 when it is never predicted nor present.
inline double f1_misuse(const std::vector<Label>& truth, const std::vector<Label>& pred) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == Label::Misuse, p = pred[i] == Label::Misuse;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

// Fold index per sample; each class is shuffled and dealt round-robin.
inline std::vector<int> stratified_folds(const std::vector<Sample>& data, int folds,
                                         std::uint64_t seed) {
  std::vector<int> out(data.size(), 0);
  Rng rng(seed);
  for (Label cls : {Label::Correct, Label::Misuse}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data[i].y == cls) idx.push_back(i);
    rng.shuffle(idx);
    for (std::size_t r = 0; r < idx.size(); ++r) out[idx[r]] = static_cast<int>(r % static_cast<std::size_t>(folds));
  }
  return out;
}

struct GridResult {
  ModelSpec spec;
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
  friend bool operator==(const GridResult&, const GridResult&) = default;
};

struct TrainingReport {
  int folds = 5;
  std::vector<GridResult> grid;
  std::size_t winner = 0;
  friend bool operator==(const TrainingReport&, const TrainingReport&) = default;
};

inline constexpr int kDefaultFolds = 5;

// Stratified k-fold CV of every grid point, oversampling inside each training
// fold. Folds drop to the minority class size when it is below k.
inline TrainingReport grid_search(const std::vector<Sample>& train, const ClassifierGrid& grid,
                                  std::uint64_t seed) {
  require_both_classes(train);
  const auto minority = std::min(
      std::count_if(train.begin(), train.end(), [](const Sample& s) { return s.y == Label::Correct; }),
      std::count_if(train.begin(), train.end(), [](const Sample& s) { return s.y == Label::Misuse; }));
  if (minority < 2) throw Error("degenerate training set: need two examples of each label");
  TrainingReport report;
  report.folds = static_cast<int>(std::min<std::int64_t>(kDefaultFolds, minority));
  const auto fold_of = stratified_folds(train, report.folds, derive_seed(seed, 1));
  const auto points = grid.points();
  if (points.empty()) throw Error("classifier grid is empty");
  std::vector<std::vector<Sample>> fold_train(static_cast<std::size_t>(report.folds));
  std::vector<std::vector<Sample>> fold_test(static_cast<std::size_t>(report.folds));
  for (int f = 0; f < report.folds; ++f) {
    std::vector<Sample> tr;
    for (std::size_t i = 0; i < train.size(); ++i)
      (fold_of[i] == f ? fold_test[f] : tr).push_back(train[i]);
    fold_train[f] = oversample(tr, derive_seed(seed, 100 + static_cast<std::uint64_t>(f)));
  }
  for (const ModelSpec& spec : points) {
    GridResult r{spec, {}, 0.0};
    for (int f = 0; f < report.folds; ++f) {
      const Model m = fit_model(spec, fold_train[f], derive_seed(seed, 200 + static_cast<std::uint64_t>(f)));
      std::vector<Label> truth, pred;
      for (const auto& s : fold_test[f]) {
        truth.push_back(s.y);
        pred.push_back(predict(m, s.x));
      }
      r.fold_f1.push_back(f1_misuse(truth, pred));
    }
    r.mean_f1 = std::accumulate(r.fold_f1.begin(), r.fold_f1.end(), 0.0) / report.folds;
    report.grid.push_back(std::move(r));
  }
  for (std::size_t i = 1; i < report.grid.size(); ++i)
    if (report.grid[i].mean_f1 > report.grid[report.winner].mean_f1) report.winner = i;
  return report;
}

// ---------------------------------------------------------------------------
// Novelty detection

struct NoveltyModel {
  std::vector<FeatureVector> vectors;
  int k = 1;
  double threshold = 1.5;
  std::vector<double> k_distance;  // per training vector
  std::vector<double> lrd;         // per training vector

  friend bool operator==(const NoveltyModel&, const NoveltyModel&) = default;
};

inline constexpr double kDefaultLofThreshold = 1.5;

inline int default_lof_k(std::size_t n) { return static_cast<int>(std::min<std::size_t>(20, n / 2)); }

namespace detail {

// k nearest training vectors to x (by distance, then index), skipping `self`.
inline std::vector<std::pair<double, std::size_t>> neighbors(const std::vector<FeatureVector>& pts,
                                                             const FeatureVector& x, int k,
                                                             std::size_t self) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t t = 0; t < pts.size(); ++t)
    if (t != self) d.emplace_back(std::sqrt(squared_distance(pts[t], x)), t);
  std::partial_sort(d.begin(), d.begin() + k, d.end());
  d.resize(static_cast<std::size_t>(k));
  return d;
}

inline double local_density(const NoveltyModel& m,
                            const std::vector<std::pair<double, std::size_t>>& nb) {
  double reach = 0;
  for (const auto& [d, o] : nb) reach += std::max(m.k_distance[o], d);
  return 1.0 / (reach / static_cast<double>(nb.size()) + 1e-10);
}

}  // namespace detail

inline NoveltyModel fit_novelty(const std::vector<FeatureVector>& train, int k,
                                double threshold = kDefaultLofThreshold) {
  if (k < 1 || static_cast<std::size_t>(k) >= train.size())
    throw Error("novelty detector needs 1 <= k < number of training vectors");
  NoveltyModel m;
  m.vectors = train;
  m.k = k;
  m.threshold = threshold;
  std::vector<std::vector<std::pair<double, std::size_t>>> nbs;
  for (std::size_t i = 0; i < train.size(); ++i) {
    nbs.push_back(detail::neighbors(train, train[i], k, i));
    m.k_distance.push_back(nbs.back().back().first);
  }
  for (std::size_t i = 0; i < train.size(); ++i) m.lrd.push_back(detail::local_density(m, nbs[i]));
  return m;
}

// Local outlier factor of a new point; exact copies of training vectors are
// inliers with factor 1.
inline double outlier_factor(const NoveltyModel& m, const FeatureVector& x) {
  for (const auto& v : m.vectors)
    if (v == x) return 1.0;
  const auto nb = detail::neighbors(m.vectors, x, m.k, m.vectors.size());
  const double own = detail::local_density(m, nb);
  double sum = 0;
  for (const auto& [d, o] : nb) sum += m.lrd[o];
  return sum / static_cast<double>(nb.size()) / own;
}

// ---------------------------------------------------------------------------
// Bundle

enum class Verdict : std::uint8_t { Correct, Misuse, Unknown };

inline std::string_view to_string(Verdict v) {
  return v == Verdict::Correct ? "C" : (v == Verdict::Misuse ? "M" : "U");
}

struct Decision {
  Verdict verdict = Verdict::Unknown;
  double outlier_factor = 0.0;
  ClassScores scores;
  std::vector<std::size_t> matched;  // indices of features present
};

struct ModelBundle {
  std::string api;
  std::vector<SubgraphFeature> features;
  Model classifier;
  NoveltyModel novelty;
  TrainingReport report;
  std::uint64_t seed = 0;

  friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

inline ModelBundle train_bundle(std::string api, std::vector<SubgraphFeature> features,
                                const std::vector<Sample>& train, const ClassifierGrid& grid,
                                std::uint64_t seed, double lof_threshold = kDefaultLofThreshold) {
  require_both_classes(train);
  if (features.empty()) throw Error("no features selected; cannot train");
  ModelBundle b;
  b.api = std::move(api);
  b.features = std::move(features);
  b.seed = seed;
  b.report = grid_search(train, grid, seed);
  const ModelSpec& best = b.report.grid[b.report.winner].spec;
  b.classifier = fit_model(best, oversample(train, derive_seed(seed, 2)), derive_seed(seed, 3));
  std::vector<FeatureVector> vectors;
  for (const auto& s : train) vectors.push_back(s.x);
  b.novelty = fit_novelty(vectors, std::max(1, default_lof_k(vectors.size())), lof_threshold);
  return b;
}

inline Decision classify_vector(const ModelBundle& b, const FeatureVector& v) {
  Decision d;
  d.outlier_factor = outlier_factor(b.novelty, v);
  d.scores = model_scores(b.classifier, v);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) d.matched.push_back(i);
  if (d.outlier_factor > b.novelty.threshold) d.verdict = Verdict::Unknown;
  else d.verdict = d.scores.misuse > d.scores.correct ? Verdict::Misuse : Verdict::Correct;
  return d;
}

inline Decision classify(const ModelBundle& b, const Eaug& g) {
  return classify_vector(b, Vectorizer(b.features)(g));
}

// Samples n ids without replacement, each draw proportional to
// 1/outlier_factor. With n >= the number of candidates, returns all of them by
// ascending factor.
inline std::vector<std::string> rank_findings(
    const std::vector<std::pair<std::string, Decision>>& decisions, std::size_t n,
    std::uint64_t seed) {
  std::vector<std::size_t> idx(decisions.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::string> out;
  if (n >= decisions.size()) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return decisions[a].second.outlier_factor < decisions[b].second.outlier_factor;
    });
    for (std::size_t i : idx) out.push_back(decisions[i].first);
    return out;
  }
  // Exponential-key sampling: key = u^(factor), largest keys win.
  Rng rng(seed);
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i : idx) {
    const double u = std::max(rng.uniform(), 1e-300);
    keyed.emplace_back(std::log(u) * std::max(decisions[i].second.outlier_factor, 1e-12), i);
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (std::size_t r = 0; r < n; ++r) out.push_back(decisions[keyed[r].second].first);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kModelFormat = "apiguard-model/1";

inline Json to_json(const SupportStats& s) {
  return Json{{"correct_hits", s.correct_hits},
              {"correct_misses", s.correct_misses},
              {"misuse_hits", s.misuse_hits},
              {"misuse_misses", s.misuse_misses}};
}

inline SupportStats stats_from_json(const Json& j) {
  json_detail::expect_keys(j, "stats", {"correct_hits", "correct_misses", "misuse_hits", "misuse_misses"});
  return {j.at("correct_hits").get<std::int64_t>(), j.at("correct_misses").get<std::int64_t>(),
          j.at("misuse_hits").get<std::int64_t>(), j.at("misuse_misses").get<std::int64_t>()};
}

inline Json to_json(const SubgraphFeature& f) {
  return Json{{"dfs_code", to_json(f.code)},
              {"pattern", to_json(f.pattern)},
              {"stats", to_json(f.stats)},
              {"chi2", f.chi2},
              {"graph_ids", f.graph_ids}};
}

inline SubgraphFeature feature_from_json(const Json& j) {
  json_detail::expect_keys(j, "feature", {"dfs_code", "pattern", "stats", "chi2", "graph_ids"});
  SubgraphFeature f;
  f.code = dfs_code_from_json(j.at("dfs_code"));
  f.pattern = graph_from_json(j.at("pattern"));
  f.stats = stats_from_json(j.at("stats"));
  f.chi2 = j.at("chi2").get<double>();
  f.graph_ids = j.at("graph_ids").get<std::vector<std::string>>();
  return f;
}

inline Json to_json(const ModelSpec& s) {
  return Json{{"family", to_string(s.family)}, {"c", s.c}, {"gamma", s.gamma}, {"k", s.k}, {"alpha", s.alpha}};
}

inline ModelSpec model_spec_from_json(const Json& j) {
  json_detail::expect_keys(j, "model spec", {"family", "c", "gamma", "k", "alpha"});
  return {parse_family(json_detail::str(j, "family", "model spec")), j.at("c").get<double>(),
          j.at("gamma").get<double>(), j.at("k").get<int>(), j.at("alpha").get<double>()};
}

namespace json_detail {
inline Json bits(const std::vector<FeatureVector>& vs) {
  Json out = Json::array();
  for (const auto& v : vs) {
    std::string s;
    for (auto b : v) s.push_back(b ? '1' : '0');
    out.push_back(s);
  }
  return out;
}
inline std::vector<FeatureVector> bits_from(const Json& j) {
  std::vector<FeatureVector> out;
  for (const auto& s : j) {
    FeatureVector v;
    for (char c : s.get<std::string>()) {
      if (c != '0' && c != '1') throw SchemaError("feature vectors are strings of 0 and 1");
      v.push_back(c == '1');
    }
    out.push_back(std::move(v));
  }
  return out;
}
}  // namespace json_detail

inline Json to_json(const Model& m) {
  Json labels = Json::array();
  for (Label l : m.labels) labels.push_back(to_string(l));
  return Json{{"spec", to_json(m.spec)},       {"dim", m.dim},
              {"weights", m.weights},          {"bias", m.bias},
              {"vectors", json_detail::bits(m.vectors)}, {"coef", m.coef},
              {"labels", labels},              {"log_prob", m.log_prob},
              {"log_prior", m.log_prior}};
}

inline Model model_from_json(const Json& j) {
  json_detail::expect_keys(j, "classifier", {"spec", "dim", "weights", "bias", "vectors", "coef", "labels", "log_prob", "log_prior"});
  Model m;
  m.spec = model_spec_from_json(j.at("spec"));
  m.dim = j.at("dim").get<std::size_t>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.vectors = json_detail::bits_from(j.at("vectors"));
  m.coef = j.at("coef").get<std::vector<double>>();
  for (const auto& l : j.at("labels")) m.labels.push_back(parse_label(l.get<std::string>()));
  m.log_prob = j.at("log_prob").get<std::vector<double>>();
  m.log_prior = j.at("log_prior").get<std::vector<double>>();
  return m;
}

inline Json to_json(const TrainingReport& r) {
  Json grid = Json::array();
  for (const auto& g : r.grid)
    grid.push_back(Json{{"spec", to_json(g.spec)}, {"fold_f1", g.fold_f1}, {"mean_f1", g.mean_f1}});
  return Json{{"folds", r.folds}, {"winner", r.winner}, {"grid", grid}};
}

inline TrainingReport report_from_json(const Json& j) {
  json_detail::expect_keys(j, "training report", {"folds", "winner", "grid"});
  TrainingReport r;
  r.folds = j.at("folds").get<int>();
  r.winner = j.at("winner").get<std::size_t>();
  for (const auto& g : j.at("grid")) {
    json_detail::expect_keys(g, "grid point", {"spec", "fold_f1", "mean_f1"});
    r.grid.push_back({model_spec_from_json(g.at("spec")), g.at("fold_f1").get<std::vector<double>>(),
                      g.at("mean_f1").get<double>()});
  }
  if (!r.grid.empty() && r.winner >= r.grid.size()) throw SchemaError("winner out of range");
  return r;
}

inline Json to_json(const NoveltyModel& m) {
  return Json{{"k", m.k},
              {"threshold", m.threshold},
              {"vectors", json_detail::bits(m.vectors)},
              {"k_distance", m.k_distance},
              {"lrd", m.lrd}};
}

inline NoveltyModel novelty_from_json(const Json& j) {
  json_detail::expect_keys(j, "novelty", {"k", "threshold", "vectors", "k_distance", "lrd"});
  NoveltyModel m;
  m.k = j.at("k").get<int>();
  m.threshold = j.at("threshold").get<double>();
  m.vectors = json_detail::bits_from(j.at("vectors"));
  m.k_distance = j.at("k_distance").get<std::vector<double>>();
  m.lrd = j.at("lrd").get<std::vector<double>>();
  return m;
}

inline Json to_json(const ModelBundle& b) {
  Json features = Json::array();
  for (const auto& f : b.features) features.push_back(to_json(f));
  return Json{{"format", kModelFormat},
              {"api", b.api},
              {"seed", b.seed},
              {"features", features},
              {"classifier", to_json(b.classifier)},
              {"novelty", to_json(b.novelty)},
              {"training_report", to_json(b.report)}};
}

inline ModelBundle bundle_from_json(const Json& j) {
  json_detail::expect_keys(j, "model", {"format", "api", "seed", "features", "classifier", "novelty", "training_report"});
  if (json_detail::str(j, "format", "model") != kModelFormat)
    throw SchemaError("unsupported model format '" + j.at("format").get<std::string>() + "'");
  ModelBundle b;
  b.api = json_detail::str(j, "api", "model");
  b.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& f : json_detail::array(j, "features", "model")) b.features.push_back(feature_from_json(f));
  b.classifier = model_from_json(j.at("classifier"));
  b.novelty = novelty_from_json(j.at("novelty"));
  b.report = report_from_json(j.at("training_report"));
  if (b.classifier.dim != b.features.size()) throw SchemaError("classifier dimension does not match features");
  return b;
}

}  // namespace apiguard
