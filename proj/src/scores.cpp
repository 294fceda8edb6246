#include "llmrouter/scores.hpp"

#include <algorithm>
#include <cmath>

#include "llmrouter/errors.hpp"
#include "llmrouter/rng.hpp"

namespace llmrouter {

namespace {

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(name) + " must lie in [0,1]");
  }
}

// Binomial(n, p) pmf via log-gamma, stable for any p.
std::vector<double> binomial_pmf(std::size_t n, double p) {
  std::vector<double> pmf(n + 1, 0.0);
  if (n == 0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p == 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p == 1.0) {
    pmf[n] = 1.0;
    return pmf;
  }
  const double logp = std::log(p);
  const double logq = std::log1p(-p);
  const double lg_n = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::size_t k = 0; k <= n; ++k) {
    const double lg = lg_n - std::lgamma(static_cast<double>(k) + 1.0) -
                      std::lgamma(static_cast<double>(n - k) + 1.0);
    pmf[k] = std::exp(lg + static_cast<double>(k) * logp +
                      static_cast<double>(n - k) * logq);
  }
  return pmf;
}

}  // namespace

std::string to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::oracle: return "oracle";
    case ScoreKind::s1: return "s1";
    case ScoreKind::s2: return "s2";
    case ScoreKind::s3: return "s3";
    case ScoreKind::s3_true_p: return "s3_true_p";
    case ScoreKind::ll: return "ll";
  }
  throw DomainError("unknown score kind");
}

ScoreKind score_kind_from_string(const std::string& name) {
  if (name == "oracle") return ScoreKind::oracle;
  if (name == "s1") return ScoreKind::s1;
  if (name == "s2") return ScoreKind::s2;
  if (name == "s3") return ScoreKind::s3;
  if (name == "s3_true_p") return ScoreKind::s3_true_p;
  if (name == "ll") return ScoreKind::ll;
  throw DomainError("unknown score kind: " + name);
}

double CorrectnessDistribution::mean_rate() const {
  double mean = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    mean += static_cast<double>(i) * pmf[i];
  }
  return mean / static_cast<double>(n());
}

double oracle_score(const BenchmarkStore& store, const std::string& model_id,
                    std::span<const std::size_t> task_samples) {
  if (store.label_mode() != LabelMode::binary) {
    throw ModeError("oracle_score requires binary labels");
  }
  if (!store.has_model(model_id)) throw NotFoundError("unknown model: " + model_id);
  if (task_samples.empty()) throw DomainError("empty task sample set");
  double sum = 0.0;
  for (std::size_t idx : task_samples) {
    sum += store.sample(idx).labels.at(model_id);
  }
  return sum / static_cast<double>(task_samples.size());
}

double score_s1(std::span<const CorrectnessPrediction> predictions) {
  if (predictions.empty()) throw DomainError("score_s1: empty prediction list");
  double sum = 0.0;
  for (const auto& p : predictions) sum += p.g;
  return sum / static_cast<double>(predictions.size());
}

double score_s2(std::span<const CorrectnessPrediction> predictions) {
  if (predictions.empty()) throw DomainError("score_s2: empty prediction list");
  double sum = 0.0;
  for (const auto& p : predictions) sum += p.g_bar ? 1.0 : 0.0;
  return sum / static_cast<double>(predictions.size());
}

double score_s3(double s2, double p) {
  check_unit(s2, "s2");
  check_unit(p, "p");
  return s2 * p + (1.0 - s2) * (1.0 - p);
}

CorrectnessDistribution correctness_distribution(std::size_t n1, std::size_t n0,
                                                 double p) {
  check_unit(p, "p");
  if (n1 + n0 < 1) throw DomainError("n1 + n0 must be >= 1");
  CorrectnessDistribution dist;
  dist.n1 = n1;
  dist.n0 = n0;
  dist.p = p;

  const std::vector<double> a = binomial_pmf(n1, p);
  const std::vector<double> b = binomial_pmf(n0, 1.0 - p);
  dist.pmf.assign(n1 + n0 + 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) {
      dist.pmf[i + j] += a[i] * b[j];
    }
  }
  return dist;
}

double win_probability(const CorrectnessDistribution& dist_a,
                       const CorrectnessDistribution& dist_b, WinMethod method,
                       const MonteCarloConfig& mc) {
  const double na = static_cast<double>(dist_a.n());
  const double nb = static_cast<double>(dist_b.n());
  if (method == WinMethod::exact) {
    // Compare rates so that distributions over different task sizes are
    // still on a common scale.
    double win = 0.0;
    for (std::size_t i = 0; i < dist_a.pmf.size(); ++i) {
      if (dist_a.pmf[i] == 0.0) continue;
      const double rate_a = static_cast<double>(i) / na;
      double mass_below = 0.0;
      for (std::size_t j = 0; j < dist_b.pmf.size(); ++j) {
        if (static_cast<double>(j) / nb < rate_a) mass_below += dist_b.pmf[j];
      }
      win += dist_a.pmf[i] * mass_below;
    }
    return win;
  }

  if (mc.samples < 1) throw DomainError("mc_samples must be >= 1");
  Rng rng(mc.rng_seed);
  const auto draw_count = [&rng](const CorrectnessDistribution& d) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < d.n1; ++i) count += rng.next_bernoulli(d.p);
    for (std::size_t i = 0; i < d.n0; ++i) count += rng.next_bernoulli(1.0 - d.p);
    return count;
  };
  std::size_t wins = 0;
  for (std::size_t s = 0; s < mc.samples; ++s) {
    const double rate_a = static_cast<double>(draw_count(dist_a)) / na;
    const double rate_b = static_cast<double>(draw_count(dist_b)) / nb;
    if (rate_a > rate_b) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(mc.samples);
}

std::string argmax_model(const BenchmarkStore& store,
                         const std::map<std::string, double>& scores) {
  if (scores.empty()) throw DomainError("argmax over empty score map");
  const std::string* best = nullptr;
  double best_score = 0.0;
  for (const auto& [model_id, score] : scores) {
    if (!store.has_model(model_id)) {
      throw NotFoundError("unknown model in score map: " + model_id);
    }
    if (best == nullptr) {
      best = &model_id;
      best_score = score;
      continue;
    }
    bool better = score > best_score;
    if (score == best_score) {
      const double params = store.model(model_id).n_params_b;
      const double best_params = store.model(*best).n_params_b;
      better = params < best_params ||
               (params == best_params && model_id < *best);
    }
    if (better) {
      best = &model_id;
      best_score = score;
    }
  }
  return *best;
}

SelectionOutcome select_eta_gated(
    const BenchmarkStore& store, const ScoreVector& s3_scores,
    const std::string& m_star,
    const std::map<std::string, CorrectnessDistribution>& distributions,
    double eta, WinMethod method, const MonteCarloConfig& mc) {
  if (s3_scores.kind != ScoreKind::s3 && s3_scores.kind != ScoreKind::s3_true_p) {
    throw DomainError("select_eta_gated expects an s3-kind score vector");
  }
  if (!store.has_model(m_star)) throw NotFoundError("unknown m_star: " + m_star);

  SelectionOutcome out;
  out.rule = SelectionRule::eta_gated;
  out.eta = eta;
  out.m_star = m_star;
  out.m3 = argmax_model(store, s3_scores.values);

  if (out.m3 == out.m_star) {
    out.chosen_model = out.m_star;
    return out;
  }
  auto it3 = distributions.find(out.m3);
  auto it_star = distributions.find(out.m_star);
  if (it3 == distributions.end() || it_star == distributions.end()) {
    throw RouterError("missing correctness distribution for m3 or m_star");
  }
  out.win_probability =
      win_probability(it3->second, it_star->second, method, mc);
  out.chosen_model = *out.win_probability > eta ? out.m3 : out.m_star;
  return out;
}

std::string best_model_on_average(const BenchmarkStore& store) {
  std::map<std::string, double> sums;
  for (const auto& m : store.models()) sums[m.model_id] = 0.0;
  for (const auto& task_id : store.task_ids()) {
    const auto& samples = store.task_samples(task_id);
    for (auto& [model_id, sum] : sums) {
      sum += oracle_score(store, model_id, samples);
    }
  }
  return argmax_model(store, sums);
}

double score_ll(const BenchmarkStore& store, const std::string& model_id,
                std::span<const std::size_t> task_samples) {
  if (!store.has_model(model_id)) throw NotFoundError("unknown model: " + model_id);
  if (task_samples.empty()) throw DomainError("empty task sample set");
  double sum = 0.0;
  for (std::size_t idx : task_samples) {
    const auto& ll = store.sample(idx).ll;
    auto it = ll.find(model_id);
    if (it == ll.end()) {
      throw ModeError("sample (" + store.sample(idx).task_id + ", " +
                      store.sample(idx).sample_id + ") has no ll value for " +
                      model_id);
    }
    sum += it->second;
  }
  return sum / static_cast<double>(task_samples.size());
}

std::pair<std::string, std::map<std::string, double>> route_per_instance(
    const BenchmarkStore& store, std::span<const double> query,
    std::span<const std::size_t> reference, const PredictorConfig& cfg) {
  const auto neighbors = nearest_references(store, query, reference, cfg.k);
  std::map<std::string, double> g;
  for (const auto& m : store.models()) {
    g[m.model_id] = predict_from_neighbors(store, m.model_id, neighbors, cfg).g;
  }
  return {argmax_model(store, g), std::move(g)};
}

JensenGapResult jensen_gap_check(std::span<const int> g_bar,
                                 std::span<const int> labels, double p) {
  check_unit(p, "p");
  if (g_bar.size() != labels.size() || g_bar.empty()) {
    throw DomainError("jensen_gap_check: mismatched or empty inputs");
  }
  const auto n = static_cast<double>(g_bar.size());
  const auto sq = [](double x) { return 0.5 * x * x; };

  double s2 = 0.0, s_tilde = 0.0, rhs_s2 = 0.0, rhs_s3 = 0.0;
  for (std::size_t i = 0; i < g_bar.size(); ++i) {
    const double g = static_cast<double>(g_bar[i]);
    const double y = static_cast<double>(labels[i]);
    s2 += g;
    s_tilde += y;
    rhs_s2 += sq(g - y);
    rhs_s3 += sq(p * g + (1.0 - p) * (1.0 - g) - y);
  }
  s2 /= n;
  s_tilde /= n;

  JensenGapResult r;
  r.lhs_s2 = sq(s2 - s_tilde);
  r.rhs_s2 = rhs_s2 / n;
  r.lhs_s3 = sq(score_s3(s2, p) - s_tilde);
  r.rhs_s3 = rhs_s3 / n;
  if (r.lhs_s2 > r.rhs_s2 + 1e-12 || r.lhs_s3 > r.rhs_s3 + 1e-12) {
    throw RouterError("empirical Jensen inequality violated");
  }
  return r;
}

}  // namespace llmrouter
