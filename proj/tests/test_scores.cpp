#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "llmrouter/errors.hpp"
#include "llmrouter/scores.hpp"

using namespace llmrouter;
using namespace llmrouter::testing;

namespace {

std::vector<CorrectnessPrediction> preds_from_g(const std::vector<double>& gs,
                                                double t = 0.5) {
  std::vector<CorrectnessPrediction> out;
  for (double g : gs) out.push_back({g, g > t, {}});
  return out;
}

}  // namespace

TEST_CASE("oracle_score is the task's mean label") {
  std::vector<ModelRecord> models{{"m1", 7.0, "m1"}};
  std::vector<BenchmarkStore::Sample> samples;
  std::vector<std::vector<double>> embeddings;
  const double labels[4] = {1, 1, 0, 1};
  for (int i = 0; i < 4; ++i) {
    samples.push_back({"a", std::to_string(i), {{"m1", labels[i]}}, {}, {}});
    embeddings.push_back({1.0, 0.1 * i});
  }
  const auto store = BenchmarkStore::from_parts(2, models, samples, embeddings,
                                                LabelMode::binary);
  CHECK(oracle_score(store, "m1", store.all_indices()) == doctest::Approx(0.75));

  const auto rnd = random_store(1, 200, 4, 1, 91);
  double sum = 0.0;
  for (std::size_t i = 0; i < rnd.size(); ++i) sum += rnd.sample(i).labels.at("m00");
  CHECK(oracle_score(rnd, "m00", rnd.all_indices()) ==
        doctest::Approx(sum / 200.0).epsilon(1e-12));
}

TEST_CASE("score_s1 / score_s2 basics") {
  CHECK(score_s1(preds_from_g({0.6, 0.8})) == doctest::Approx(0.7));
  CHECK(score_s1(preds_from_g({1.0})) == 1.0);
  CHECK(score_s2(preds_from_g({1.0, 0.0, 1.0, 1.0}, 0.5)) == doctest::Approx(0.75));
  // g exactly at t counts as 0: the indicator is strict.
  CHECK(score_s2(preds_from_g({0.5, 0.5, 0.5})) == 0.0);
  CHECK_THROWS_AS(score_s1({}), DomainError);
}

TEST_CASE("score_s3 closed-form cases and identities") {
  CHECK(score_s3(0.75, 1.0) == doctest::Approx(0.75));
  CHECK(score_s3(0.75, 0.0) == doctest::Approx(0.25));
  CHECK(score_s3(0.123, 0.5) == doctest::Approx(0.5));
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.next_double(), p = rng.next_double();
    CHECK(std::abs(score_s3(s, 1.0) - s) < 1e-12);
    CHECK(std::abs(score_s3(s, 0.0) - (1.0 - s)) < 1e-12);
    CHECK(std::abs(score_s3(s, 0.5) - 0.5) < 1e-12);
    CHECK(std::abs(score_s3(s, p) + score_s3(s, 1.0 - p) - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(score_s3(1.2, 0.5), DomainError);
}

TEST_CASE("correctness_distribution: closed forms") {
  const auto d1 = correctness_distribution(1, 1, 0.5);
  REQUIRE(d1.pmf.size() == 3);
  CHECK(d1.pmf[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(d1.pmf[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d1.pmf[2] == doctest::Approx(0.25).epsilon(1e-12));

  const auto d2 = correctness_distribution(2, 0, 1.0);
  CHECK(d2.pmf[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d2.pmf[0] == 0.0);
  CHECK(d2.pmf[1] == 0.0);
}

TEST_CASE("correctness_distribution matches exhaustive outcome enumeration") {
  // Every point predicted correct succeeds w.p. p, predicted incorrect w.p.
  // 1-p; enumerate all 2^(n1+n0) outcomes directly.
  const std::size_t n1 = 3, n0 = 2;
  const double p = 0.7;
  const auto dist = correctness_distribution(n1, n0, p);
  std::vector<double> pmf(n1 + n0 + 1, 0.0);
  for (unsigned mask = 0; mask < (1u << (n1 + n0)); ++mask) {
    double prob = 1.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n1 + n0; ++i) {
      const bool success = mask & (1u << i);
      const double p_success = i < n1 ? p : 1.0 - p;
      prob *= success ? p_success : 1.0 - p_success;
      if (success) ++count;
    }
    pmf[count] += prob;
  }
  for (std::size_t c = 0; c <= n1 + n0; ++c) {
    CHECK(dist.pmf[c] == doctest::Approx(pmf[c]).epsilon(1e-10));
  }
  // Scaled mean equals s3 of the thresholded fraction.
  CHECK(dist.mean_rate() ==
        doctest::Approx(score_s3(3.0 / 5.0, p)).epsilon(1e-12));
}

TEST_CASE("win_probability: point masses and the symmetric small case") {
  const auto sure = correctness_distribution(2, 0, 1.0);   // rate 1 always
  const auto never = correctness_distribution(2, 0, 0.0);  // rate 0 always
  CHECK(win_probability(sure, never) == doctest::Approx(1.0));
  CHECK(win_probability(never, sure) == doctest::Approx(0.0));

  // Identical symmetric distributions over {0,1,2} with pmf {1/4,1/2,1/4}:
  // P(A > B) = sum over i>j = 0.5*0.25 + 0.25*0.25 + 0.25*0.5 = 0.3125.
  const auto d = correctness_distribution(1, 1, 0.5);
  CHECK(win_probability(d, d) == doctest::Approx(0.3125).epsilon(1e-12));
}

TEST_CASE("win_probability: monte carlo agrees with the exact back-end") {
  Rng rng(12);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n1a = 1 + rng.next_below(5), n0a = rng.next_below(5);
    const std::size_t n1b = 1 + rng.next_below(5), n0b = rng.next_below(5);
    const double pa = rng.next_double(), pb = rng.next_double();
    const auto a = correctness_distribution(n1a, n0a, pa);
    const auto b = correctness_distribution(n1b, n0b, pb);
    const double exact = win_probability(a, b);
    MonteCarloConfig mc;
    mc.samples = 100000;
    mc.rng_seed = 1000 + trial;
    const double approx = win_probability(a, b, WinMethod::monte_carlo, mc);
    CHECK(std::abs(exact - approx) < 0.01);
    // Deterministic given the seed.
    CHECK(approx == win_probability(a, b, WinMethod::monte_carlo, mc));
  }
  MonteCarloConfig bad;
  bad.samples = 0;
  const auto d = correctness_distribution(1, 1, 0.5);
  CHECK_THROWS_AS(win_probability(d, d, WinMethod::monte_carlo, bad), DomainError);
}

TEST_CASE("select_eta_gated") {
  const auto store = random_store(1, 4, 3, 2, 3);
  const std::string a = store.models()[0].model_id;
  const std::string b = store.models()[1].model_id;

  std::map<std::string, CorrectnessDistribution> dists;
  dists.emplace(a, correctness_distribution(2, 0, 1.0));
  dists.emplace(b, correctness_distribution(2, 0, 0.0));

  SUBCASE("m3 equals m_star: degenerate, no win probability") {
    ScoreVector sv{ScoreKind::s3, "t00", {{a, 0.9}, {b, 0.1}}};
    const auto sel = select_eta_gated(store, sv, a, dists, 0.6);
    CHECK(sel.chosen_model == a);
    CHECK(!sel.win_probability.has_value());
  }
  SUBCASE("certain win beats the gate") {
    ScoreVector sv{ScoreKind::s3, "t00", {{a, 0.9}, {b, 0.1}}};
    const auto sel = select_eta_gated(store, sv, b, dists, 0.6);
    CHECK(sel.m3 == a);
    CHECK(sel.m_star == b);
    CHECK(sel.chosen_model == a);
    REQUIRE(sel.win_probability.has_value());
    CHECK(*sel.win_probability == doctest::Approx(1.0));
  }
  SUBCASE("0.3125 win probability falls back to m_star at eta 0.6") {
    std::map<std::string, CorrectnessDistribution> tied;
    tied.emplace(a, correctness_distribution(1, 1, 0.5));
    tied.emplace(b, correctness_distribution(1, 1, 0.5));
    ScoreVector sv{ScoreKind::s3, "t00", {{a, 0.9}, {b, 0.1}}};
    const auto sel = select_eta_gated(store, sv, b, tied, 0.6);
    CHECK(sel.chosen_model == b);
    CHECK(*sel.win_probability == doctest::Approx(0.3125));
    // eta = 0 flips it to m3; eta = 1 keeps m_star even for sure wins.
    CHECK(select_eta_gated(store, sv, b, tied, 0.0).chosen_model == a);
    CHECK(select_eta_gated(store, sv, b, dists, 1.0).chosen_model == b);
  }
  SUBCASE("missing distribution is an error") {
    ScoreVector sv{ScoreKind::s3, "t00", {{a, 0.9}, {b, 0.1}}};
    CHECK_THROWS_AS(select_eta_gated(store, sv, b, {}, 0.6), RouterError);
  }
}

TEST_CASE("best_model_on_average and argmax tie-breaks") {
  std::vector<ModelRecord> models{{"big", 70.0, ""}, {"small", 7.0, ""}};
  std::vector<BenchmarkStore::Sample> samples;
  std::vector<std::vector<double>> embeddings;
  for (int i = 0; i < 4; ++i) {
    // Equal column sums: both models right on half the samples.
    const double y = i < 2 ? 1.0 : 0.0;
    samples.push_back({"a", std::to_string(i), {{"big", y}, {"small", 1.0 - y}}, {}, {}});
    embeddings.push_back({1.0, 0.1 * i, 0.0});
  }
  const auto tied = BenchmarkStore::from_parts(3, models, samples, embeddings,
                                               LabelMode::binary);
  CHECK(best_model_on_average(tied) == "small");  // fewer params wins ties

  // Clear winner case.
  for (auto& s : samples) s.labels["big"] = 1.0;
  const auto clear = BenchmarkStore::from_parts(3, models, samples, embeddings,
                                                LabelMode::binary);
  CHECK(best_model_on_average(clear) == "big");

  // argmax invariance under a strictly increasing transform.
  const auto store = random_store(2, 6, 3, 4, 44);
  std::map<std::string, double> scores;
  Rng rng(2);
  for (const auto& m : store.models()) scores[m.model_id] = rng.next_double();
  std::map<std::string, double> warped;
  for (const auto& [id, v] : scores) warped[id] = std::exp(3.0 * v) - 0.5;
  CHECK(argmax_model(store, scores) == argmax_model(store, warped));
}

TEST_CASE("score_ll averages ingested log-likelihoods") {
  std::vector<ModelRecord> models{{"m1", 7.0, "m1"}};
  std::vector<BenchmarkStore::Sample> samples{
      {"a", "1", {{"m1", 1.0}}, {}, {{"m1", -1.0}}},
      {"a", "2", {{"m1", 0.0}}, {}, {{"m1", -3.0}}}};
  const auto store = BenchmarkStore::from_parts(
      2, models, samples, {{1.0, 0.0}, {0.0, 1.0}}, LabelMode::binary);
  CHECK(score_ll(store, "m1", store.all_indices()) == doctest::Approx(-2.0));

  std::vector<BenchmarkStore::Sample> no_ll{{"a", "1", {{"m1", 1.0}}, {}, {}}};
  const auto bare = BenchmarkStore::from_parts(2, models, no_ll, {{1.0, 0.0}},
                                               LabelMode::binary);
  CHECK_THROWS_AS(score_ll(bare, "m1", bare.all_indices()), ModeError);
}

TEST_CASE("route_per_instance matches per-model kNN means") {
  const auto store = random_store(3, 12, 5, 3, 66);
  PredictorConfig cfg;
  cfg.k = 10;
  const auto reference = store.dataset_complement("t01");
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> q(5);
    for (auto& x : q) x = rng.next_gaussian();
    const auto [chosen, g] = route_per_instance(store, q, reference, cfg);
    std::map<std::string, double> expected;
    for (const auto& m : store.models()) {
      expected[m.model_id] = predict(store, m.model_id, q, reference, cfg).g;
    }
    CHECK(g == expected);
    CHECK(chosen == argmax_model(store, expected));
  }
}

TEST_CASE("jensen_gap_check") {
  SUBCASE("perfect predictor collapses the s2 gap to zero") {
    const std::vector<int> y{1, 0, 1, 1, 0};
    const auto r = jensen_gap_check(y, y, 0.77);
    CHECK(r.lhs_s2 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.rhs_s2 == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("constant predictor, half-ones labels: hand-computed gap") {
    // S2 = 1, oracle = 0.5: lhs = half the squared gap = 0.125; pointwise the
    // predictor misses half the time at squared loss 0.5, so rhs = 0.25.
    const std::vector<int> gbar{1, 1, 1, 1};
    const std::vector<int> y{1, 1, 0, 0};
    const auto r = jensen_gap_check(gbar, y, 1.0);
    CHECK(r.lhs_s2 == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(r.rhs_s2 == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("inequalities hold on random instances") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.next_below(30);
      std::vector<int> gbar(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        gbar[i] = rng.next_bernoulli(0.5);
        y[i] = rng.next_bernoulli(0.5);
      }
      const auto r = jensen_gap_check(gbar, y, rng.next_double());
      CHECK(r.lhs_s2 <= r.rhs_s2 + 1e-12);
      CHECK(r.lhs_s3 <= r.rhs_s3 + 1e-12);
    }
  }
}

TEST_CASE("score kind names round-trip") {
  for (auto kind : {ScoreKind::oracle, ScoreKind::s1, ScoreKind::s2,
                    ScoreKind::s3, ScoreKind::s3_true_p, ScoreKind::ll}) {
    CHECK(score_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(score_kind_from_string("s9"), DomainError);
}
