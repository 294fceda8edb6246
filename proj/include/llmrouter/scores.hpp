#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llmrouter/predictor.hpp"
#include "llmrouter/store.hpp"

namespace llmrouter {

enum class ScoreKind { oracle, s1, s2, s3, s3_true_p, ll };

std::string to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& name);

struct ScoreVector {
  ScoreKind kind = ScoreKind::s1;
  std::string task_id;
  std::map<std::string, double> values;  // model_id -> score
};

enum class SelectionRule { argmax, eta_gated };

struct SelectionOutcome {
  std::string chosen_model;
  SelectionRule rule = SelectionRule::argmax;
  std::string m3;      // argmax of S3
  std::string m_star;  // best model on average
  std::optional<double> win_probability;
  double eta = 0.6;
};

/// Distribution of the correct-answer count under the confidence model:
/// the n1 points predicted correct succeed with probability p each, the n0
/// points predicted incorrect succeed with probability 1-p each.
struct CorrectnessDistribution {
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  double p = 0.0;
  std::vector<double> pmf;  // over counts 0..n1+n0

  std::size_t n() const { return n1 + n0; }
  double mean_rate() const;
};

enum class WinMethod { exact, monte_carlo };

struct MonteCarloConfig {
  std::size_t samples = 100000;
  std::uint64_t rng_seed = 0;
};

/// Mean of the true binary labels y(x, m) over a task.
double oracle_score(const BenchmarkStore& store, const std::string& model_id,
                    std::span<const std::size_t> task_samples);

/// S1: mean of g over the task's predictions.
double score_s1(std::span<const CorrectnessPrediction> predictions);

/// S2: mean of thresholded predictions g_bar.
double score_s2(std::span<const CorrectnessPrediction> predictions);

/// S3 = s2 * p + (1 - s2) * (1 - p).
double score_s3(double s2, double p);

CorrectnessDistribution correctness_distribution(std::size_t n1, std::size_t n0,
                                                 double p);

/// P(rate_a > rate_b) for independent correctness draws of the two models.
double win_probability(const CorrectnessDistribution& dist_a,
                       const CorrectnessDistribution& dist_b,
                       WinMethod method = WinMethod::exact,
                       const MonteCarloConfig& mc = {});

/// Eq-gated selection: pick the S3 argmax only when its win probability over
/// the benchmark-average best model exceeds eta.
SelectionOutcome select_eta_gated(
    const BenchmarkStore& store, const ScoreVector& s3_scores,
    const std::string& m_star,
    const std::map<std::string, CorrectnessDistribution>& distributions,
    double eta, WinMethod method = WinMethod::exact,
    const MonteCarloConfig& mc = {});

/// m* = argmax_m sum_d oracle(m, d); ties prefer fewer parameters, then
/// lexicographic id.
std::string best_model_on_average(const BenchmarkStore& store);

/// Shared argmax tie-break: higher score, then fewer params, then id.
std::string argmax_model(const BenchmarkStore& store,
                         const std::map<std::string, double>& scores);

/// Mean ingested log-likelihood baseline value over a task.
double score_ll(const BenchmarkStore& store, const std::string& model_id,
                std::span<const std::size_t> task_samples);

/// Per-instance routing: argmax over models of the per-point kNN mean.
std::pair<std::string, std::map<std::string, double>> route_per_instance(
    const BenchmarkStore& store, std::span<const double> query,
    std::span<const std::size_t> reference, const PredictorConfig& cfg);

struct JensenGapResult {
  double lhs_s2 = 0.0;
  double rhs_s2 = 0.0;
  double lhs_s3 = 0.0;
  double rhs_s3 = 0.0;
};

/// Empirical Jensen inequalities under the squared loss: the aggregate-score
/// error never exceeds the mean pointwise error, for both S2 and S3.
/// Throws if either inequality is violated beyond 1e-12.
JensenGapResult jensen_gap_check(std::span<const int> g_bar,
                                 std::span<const int> labels, double p);

}  // namespace llmrouter
