#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llmrouter/store.hpp"

namespace llmrouter {

struct PredictorConfig {
  std::size_t k = 5;
  double threshold = 0.5;  // t in (0,1); g_bar = 1 iff g > t
};

struct CorrectnessPrediction {
  double g = 0.0;   // kNN mean of neighbor labels
  bool g_bar = false;
  std::vector<std::size_t> neighbors;  // store indices, nearest first
};

/// Shared neighbor search for all models: the neighbor set does not depend
/// on the model, only the averaged labels do.
std::vector<BenchmarkStore::Neighbor> nearest_references(
    const BenchmarkStore& store, std::span<const double> query,
    std::span<const std::size_t> reference, std::size_t k);

/// Averages a model's labels over an already-computed neighbor list.
CorrectnessPrediction predict_from_neighbors(
    const BenchmarkStore& store, const std::string& model_id,
    const std::vector<BenchmarkStore::Neighbor>& neighbors,
    const PredictorConfig& cfg);

/// g_m(x): kNN mean of the model's labels over the reference set, with
/// g_bar = 1 iff g > t. Uses all available neighbors when the reference has
/// fewer than k samples.
CorrectnessPrediction predict(const BenchmarkStore& store,
                              const std::string& model_id,
                              std::span<const double> query,
                              std::span<const std::size_t> reference,
                              const PredictorConfig& cfg);

/// Fraction of eval samples where g_bar matches the true binary label.
double predictor_accuracy(const BenchmarkStore& store,
                          const std::string& model_id,
                          std::span<const std::size_t> eval_samples,
                          std::span<const std::size_t> reference,
                          const PredictorConfig& cfg);

/// Moves round(min(alpha * n, cap)) task samples into the reference side,
/// sampled without replacement. Returns (extras, remaining eval samples),
/// both sorted by store index; deterministic given the seed.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
build_mixed_reference(const BenchmarkStore& store, const std::string& task_id,
                      double alpha, std::size_t cap, std::uint64_t rng_seed);

}  // namespace llmrouter
