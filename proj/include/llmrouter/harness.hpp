#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llmrouter/ood.hpp"
#include "llmrouter/predictor.hpp"
#include "llmrouter/scores.hpp"
#include "llmrouter/store.hpp"

namespace llmrouter {

struct ExperimentConfig {
  // Score rows to evaluate; empty means s1, s2, s3, s3_true_p (plus ll when
  // every sample carries ll values). Oracle and BMA rows are always present.
  std::vector<ScoreKind> score_kinds;
  double eta = 0.6;
  PredictorConfig predictor;
  DistanceConfig distance;
  double sigma = 0.09;
  std::size_t mix_cap = 50;
  std::uint64_t rng_seed = 0;

  // Replay grid for fitting the per-held-out-task accuracy smoothers.
  std::vector<double> pair_alphas{0.0, 0.05, 0.1};
  std::size_t pair_repeats = 2;

  // Sweep settings.
  std::vector<double> alphas{0.0};
  std::size_t repeats = 1;

  std::optional<double> max_params;  // candidate filter
  std::size_t threads = 0;
};

struct TaskRow {
  std::string task_id;
  std::string row;  // score kind, "bma", or "oracle"
  std::string chosen_model;
  double accuracy = 0.0;
  double ratio_to_best = 0.0;
  std::optional<double> pearson;
  std::optional<double> spearman;
  double rank = 0.0;     // competition ranking among candidates
  double params = 0.0;   // of the chosen model
  double u = 0.0;        // dataset distance of the eval remainder
  std::optional<double> win_probability;  // eta-gated rows only
  bool chose_bma = false;
};

struct SummaryRow {
  std::string row;
  double accuracy = 0.0;
  double ratio_to_best = 0.0;
  std::optional<double> pearson;
  std::optional<double> spearman;
  double pct_bma = 0.0;
  double mean_params = 0.0;
  double mean_rank = 0.0;
};

struct RoutingReport {
  std::vector<SummaryRow> summary;
  std::vector<TaskRow> per_task;
  double mean_predictor_accuracy = 0.0;  // mean true p over tasks and models
  double smoother_mae = 0.0;             // mean |p_hat - p_true|
};

/// Smoothers fitted once per held-out task; reusable across sweep repeats.
using LotoSmoothers = std::map<std::string, SmootherModel>;

LotoSmoothers fit_loto_smoothers(const BenchmarkStore& store,
                                 const ExperimentConfig& cfg);

/// Leave-one-task-out routing with alpha-mixed references. alpha = 0
/// evaluates each full task against the other tasks only.
RoutingReport leave_one_task_out(const BenchmarkStore& store,
                                 const ExperimentConfig& cfg,
                                 double alpha = 0.0,
                                 std::uint64_t run_seed = 0,
                                 const LotoSmoothers* smoothers = nullptr);

struct SweepCell {
  double alpha = 0.0;
  std::map<std::string, double> accuracy_mean;  // per row
  std::map<std::string, double> accuracy_sd;
  double predictor_accuracy_mean = 0.0;
  double predictor_accuracy_sd = 0.0;
  double smoother_mae_mean = 0.0;
  double smoother_mae_sd = 0.0;
};

struct SweepRun {
  double alpha = 0.0;
  std::size_t repeat = 0;
  RoutingReport report;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SweepRun> runs;
};

SweepResult ood_gap_sweep(const BenchmarkStore& store,
                          const ExperimentConfig& cfg);

struct SmallModelReport {
  RoutingReport routing;  // candidates restricted by cfg.max_params
  std::map<std::string, double> reference_accuracy;  // per task
  double reference_mean = 0.0;
  std::string reference_model;
};

SmallModelReport small_model_routing(const BenchmarkStore& store,
                                     const ExperimentConfig& cfg,
                                     const std::string& reference_model);

struct DistanceSubset {
  std::vector<std::size_t> kept;  // test indices retained
  double retained_fraction = 0.0;
};

/// X'_C: test points whose mean distance to their nn_size nearest train
/// neighbors is strictly below C.
DistanceSubset subset_by_distance(const BenchmarkStore& store,
                                  std::span<const std::size_t> train,
                                  std::span<const std::size_t> test, double C,
                                  std::size_t nn_size);

struct CorrelationRow {
  std::string task_id;
  double alpha = 0.0;
  std::size_t repeat = 0;
  double u = 0.0;
  std::map<std::string, double> pearson;  // per score row; absent = undefined
};

struct CorrelationTable {
  std::vector<CorrelationRow> rows;
  std::size_t skipped = 0;  // undefined correlations
};

CorrelationTable distance_correlation_table(const SweepResult& sweep);

// Report serialization with a fixed column order; deterministic given the
// report contents.
std::string report_to_csv(const RoutingReport& report);
std::string report_summary_json(const RoutingReport& report);
std::string sweep_to_csv(const SweepResult& sweep);
std::string correlation_table_to_csv(const CorrelationTable& table);

}  // namespace llmrouter
