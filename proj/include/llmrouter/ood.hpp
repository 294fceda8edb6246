#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "llmrouter/predictor.hpp"
#include "llmrouter/store.hpp"

namespace llmrouter {

struct DistanceConfig {
  std::size_t kappa = 19;
};

struct DistanceAccuracyPair {
  double u = 0.0;
  double p = 0.0;
  std::string model_id;
  std::string source_task;
  double alpha = 0.0;
  std::size_t repeat = 0;
};

/// Per-model replay pairs plus the kernel bandwidth.
struct SmootherModel {
  std::map<std::string, std::vector<DistanceAccuracyPair>> pairs;
  double sigma = 0.09;
  std::size_t skipped = 0;  // degenerate (task, alpha, repeat) triples
};

struct PairGenerationConfig {
  PredictorConfig predictor;
  DistanceConfig distance;
  std::vector<double> alphas;  // empty -> default_alpha_grid()
  std::size_t repeats = 10;
  std::size_t mix_cap = 50;
  std::uint64_t rng_seed = 0;
  double sigma = 0.09;
  std::size_t threads = 0;  // 0 -> hardware concurrency
  // When set, this task takes no part in pair generation at all: it is
  // neither replayed nor visible in any reference set.
  std::optional<std::string> exclude_task;
};

/// Default mixing grid: 15 evenly spaced values in [0, 0.2].
std::vector<double> default_alpha_grid();

/// One-sided Chamfer-style task descriptor: mean over task inputs of the
/// mean cosine distance to their kappa nearest reference neighbors.
double dataset_distance(const BenchmarkStore& store,
                        std::span<const std::size_t> task_inputs,
                        std::span<const std::size_t> reference,
                        const DistanceConfig& cfg);

/// Same descriptor for raw (not stored) query vectors.
double dataset_distance_external(const BenchmarkStore& store,
                                 const std::vector<std::vector<double>>& inputs,
                                 std::span<const std::size_t> reference,
                                 const DistanceConfig& cfg);

/// Replays leave-one-task-out with alpha mixing to collect (u, p) training
/// pairs for every model. Deterministic given the seed; triples whose eval
/// remainder is empty are skipped and counted.
SmootherModel generate_pairs(const BenchmarkStore& store,
                             const PairGenerationConfig& cfg);

/// Nadaraya-Watson estimate of p at u_query with a Gaussian kernel. Falls
/// back to the nearest pair when all weights underflow.
double predict_p(const SmootherModel& model, const std::string& model_id,
                 double u_query);

/// Mean absolute error of predict_p against held-out pairs.
double smoother_mae(const SmootherModel& model,
                    std::span<const DistanceAccuracyPair> heldout);

void save_pairs_csv(const SmootherModel& model,
                    const std::filesystem::path& path);
SmootherModel load_pairs_csv(const std::filesystem::path& path,
                             double sigma = 0.09);

}  // namespace llmrouter
