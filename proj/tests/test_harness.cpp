#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "llmrouter/harness.hpp"
#include "llmrouter/synthetic.hpp"

using namespace llmrouter;
using namespace llmrouter::testing;

namespace {

// Three-task store where one model is right everywhere and the other is a
// coin flip: every score must route to the dominant model.
BenchmarkStore dominant_store() {
  Rng rng(404);
  std::vector<ModelRecord> models{{"coin", 7.0, ""}, {"hero", 13.0, ""}};
  std::vector<BenchmarkStore::Sample> samples;
  std::vector<std::vector<double>> embeddings;
  for (int t = 0; t < 3; ++t) {
    for (int i = 0; i < 30; ++i) {
      samples.push_back({"t" + std::to_string(t), "s" + std::to_string(i),
                         {{"hero", 1.0},
                          {"coin", rng.next_bernoulli(0.5) ? 1.0 : 0.0}},
                         {},
                         {}});
      std::vector<double> e(4);
      for (auto& x : e) x = rng.next_gaussian();
      embeddings.push_back(std::move(e));
    }
  }
  return BenchmarkStore::from_parts(4, std::move(models), std::move(samples),
                                    std::move(embeddings), LabelMode::binary);
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.predictor.k = 3;
  cfg.distance.kappa = 3;
  cfg.pair_alphas = {0.0, 0.1};
  cfg.pair_repeats = 1;
  return cfg;
}

}  // namespace

TEST_CASE("leave_one_task_out: dominant model wins every row") {
  const auto store = dominant_store();
  const auto report = leave_one_task_out(store, small_config());
  for (const auto& tr : report.per_task) {
    CHECK(tr.chosen_model == "hero");
    CHECK(tr.accuracy == 1.0);
    CHECK(tr.ratio_to_best == 1.0);
    CHECK(tr.rank == 1.0);
  }
  for (const auto& row : report.summary) {
    CHECK(row.accuracy == 1.0);
    CHECK(row.ratio_to_best == 1.0);
  }
}

TEST_CASE("leave_one_task_out: structural invariants on a random store") {
  const auto store = random_store(4, 25, 4, 3, 314);
  const auto report = leave_one_task_out(store, small_config());

  std::map<std::string, std::map<std::string, double>> acc;  // task -> row -> acc
  for (const auto& tr : report.per_task) acc[tr.task_id][tr.row] = tr.accuracy;
  for (const auto& [task, rows] : acc) {
    REQUIRE(rows.count("oracle") == 1);
    const double oracle = rows.at("oracle");
    for (const auto& [row, a] : rows) CHECK(a <= oracle + 1e-12);
  }
  for (const auto& tr : report.per_task) {
    CHECK(tr.rank >= 1.0);
    CHECK(tr.rank <= static_cast<double>(store.models().size()));
    CHECK(tr.ratio_to_best >= 0.0);
    CHECK(tr.ratio_to_best <= 1.0 + 1e-12);
    if (tr.row == "oracle") CHECK(tr.ratio_to_best == 1.0);
  }
  for (const auto& row : report.summary) {
    if (row.row == "bma") CHECK(row.pct_bma == 1.0);
    if (row.row == "oracle") CHECK(row.ratio_to_best == doctest::Approx(1.0));
  }
}

TEST_CASE("leave_one_task_out emits byte-identical reports across runs") {
  const auto store = random_store(4, 20, 4, 3, 2718);
  const auto cfg = small_config();
  const auto a = leave_one_task_out(store, cfg);
  const auto b = leave_one_task_out(store, cfg);
  CHECK(report_to_csv(a) == report_to_csv(b));
  CHECK(report_summary_json(a) == report_summary_json(b));
}

TEST_CASE("ood_gap_sweep: alpha 0 cell reduces to plain LOTO with zero sd") {
  const auto store = random_store(4, 20, 4, 2, 99);
  auto cfg = small_config();
  cfg.alphas = {0.0};
  cfg.repeats = 3;
  const auto sweep = ood_gap_sweep(store, cfg);
  REQUIRE(sweep.cells.size() == 1);
  const auto& cell = sweep.cells[0];
  CHECK(cell.alpha == 0.0);
  for (const auto& [row, sd] : cell.accuracy_sd) {
    INFO("row ", row);
    CHECK(sd == 0.0);
  }
  CHECK(cell.predictor_accuracy_sd == 0.0);

  const auto smoothers = fit_loto_smoothers(store, cfg);
  const auto plain = leave_one_task_out(store, cfg, 0.0, 0, &smoothers);
  for (const auto& row : plain.summary) {
    CHECK(cell.accuracy_mean.at(row.row) == doctest::Approx(row.accuracy));
  }
}

TEST_CASE("small_model_routing: filter keeping one model routes to it") {
  const auto store = dominant_store();  // coin 7B, hero 13B
  auto cfg = small_config();
  cfg.max_params = 8.0;  // only "coin" survives
  const auto report = small_model_routing(store, cfg, "hero");
  CHECK(report.reference_model == "hero");
  for (const auto& tr : report.routing.per_task) {
    if (tr.row == "oracle" || tr.row == "bma") continue;
    CHECK(tr.chosen_model == "coin");
  }
  // Reference accuracy per task is the full-task oracle score of "hero".
  for (const auto& task : store.task_ids()) {
    CHECK(report.reference_accuracy.at(task) == 1.0);
  }
}

TEST_CASE("subset_by_distance: thresholds and brute-force agreement") {
  const auto store = random_store(3, 15, 4, 1, 5150);
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < store.size(); ++i) {
    (store.sample(i).task_id == "t02" ? test : train).push_back(i);
  }
  const std::size_t nn = 4;

  // Brute-force per-point mean distance to the nn nearest train points.
  std::vector<double> avg;
  for (auto i : test) {
    std::vector<double> dists;
    for (auto j : train) {
      dists.push_back(
          cosine_distance(embedding_copy(store, i), embedding_copy(store, j)));
    }
    std::sort(dists.begin(), dists.end());
    double sum = 0.0;
    for (std::size_t r = 0; r < nn; ++r) sum += dists[r];
    avg.push_back(sum / static_cast<double>(nn));
  }
  const double lo = *std::min_element(avg.begin(), avg.end());
  const double hi = *std::max_element(avg.begin(), avg.end());

  CHECK(subset_by_distance(store, train, test, hi + 0.01, nn).retained_fraction ==
        1.0);
  CHECK(subset_by_distance(store, train, test, lo - 0.01, nn).kept.empty());

  const double median = avg[avg.size() / 2];
  const auto subset = subset_by_distance(store, train, test, median, nn);
  std::set<std::size_t> expected;
  for (std::size_t idx = 0; idx < test.size(); ++idx) {
    if (avg[idx] < median) expected.insert(test[idx]);
  }
  CHECK(std::set<std::size_t>(subset.kept.begin(), subset.kept.end()) ==
        expected);
  CHECK(subset.retained_fraction ==
        doctest::Approx(static_cast<double>(expected.size()) / test.size()));
}

TEST_CASE("distance_correlation_table row accounting") {
  const auto store = random_store(4, 20, 4, 3, 77);
  auto cfg = small_config();
  cfg.alphas = {0.0, 0.1};
  cfg.repeats = 2;
  const auto sweep = ood_gap_sweep(store, cfg);
  const auto table = distance_correlation_table(sweep);
  CHECK(table.rows.size() + table.skipped == 4 * 2 * 2);
  for (const auto& row : table.rows) {
    CHECK(row.u > 0.0);
    for (const auto& [kind, r] : row.pearson) {
      INFO("score ", kind);
      CHECK(std::abs(r) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("generate_synthetic: planted ground truth") {
  SUBCASE("universally competent model scores 1.0 everywhere") {
    SyntheticSpec spec;
    spec.n_tasks = 3;
    spec.samples_per_task = 50;
    spec.n_models = 2;
    spec.prob_inside = 1.0;
    spec.prob_outside = 1.0;
    spec.label_noise = 0.0;
    spec.rng_seed = 9;
    const auto result = generate_synthetic(spec);
    for (const auto& task : result.store.task_ids()) {
      CHECK(oracle_score(result.store, "model-00",
                         result.store.task_samples(task)) == 1.0);
      CHECK(result.planted_accuracy.at(task).at("model-00") == 1.0);
    }
  }
  SUBCASE("measured accuracy concentrates on the planted rate") {
    SyntheticSpec spec;
    spec.n_tasks = 2;
    spec.samples_per_task = 2000;
    spec.rng_seed = 31;
    const auto result = generate_synthetic(spec);
    for (const auto& task : result.store.task_ids()) {
      for (const auto& m : result.store.models()) {
        const double measured = oracle_score(
            result.store, m.model_id, result.store.task_samples(task));
        const double planted = result.planted_accuracy.at(task).at(m.model_id);
        INFO(task, " ", m.model_id);
        CHECK(std::abs(measured - planted) < 0.03);
      }
    }
  }
  SUBCASE("same seed is bit-identical") {
    SyntheticSpec spec;
    spec.n_tasks = 2;
    spec.samples_per_task = 40;
    spec.rng_seed = 123;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(a.store.logically_equal(b.store));
    CHECK(a.planted_accuracy == b.planted_accuracy);
    for (std::size_t i = 0; i < a.store.size(); ++i) {
      const auto ea = a.store.embedding(i);
      const auto eb = b.store.embedding(i);
      CHECK(std::equal(ea.begin(), ea.end(), eb.begin()));
    }
  }
}
