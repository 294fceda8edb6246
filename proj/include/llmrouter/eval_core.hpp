#pragma once

#include <map>
#include <span>
#include <string>

#include "llmrouter/ood.hpp"
#include "llmrouter/predictor.hpp"
#include "llmrouter/store.hpp"

namespace llmrouter {

/// Aggregate per-model statistics of the correctness predictors over one
/// evaluation set against one reference set. The neighbor search is shared
/// across models, which is what makes multi-model sweeps tractable.
struct TaskEvalStats {
  double u = 0.0;  // dataset-distance descriptor of the eval set
  std::size_t n_eval = 0;
  std::map<std::string, double> g_mean;     // S1 per model
  std::map<std::string, double> gbar_mean;  // S2 per model
  std::map<std::string, std::size_t> n1;    // count of g_bar = 1
  std::map<std::string, double> accuracy;   // true p, binary stores only
};

TaskEvalStats evaluate_task_against_reference(
    const BenchmarkStore& store, std::span<const std::size_t> eval_samples,
    std::span<const std::size_t> reference, const PredictorConfig& predictor,
    const DistanceConfig& distance, bool with_accuracy);

}  // namespace llmrouter
