#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "llmrouter/store.hpp"

namespace llmrouter {

/// A region of competence: a model answers correctly with probability
/// prob_inside within cosine-distance radius of the anchor, prob_outside
/// elsewhere.
struct SyntheticSpec {
  std::size_t n_tasks = 8;
  std::size_t samples_per_task = 500;
  std::size_t dimension = 8;
  std::size_t n_models = 6;
  double cluster_spread = 0.15;   // gaussian sd around each task center
  std::size_t regions_per_model = 3;  // anchored at distinct task centers
  double region_radius = 0.35;    // cosine-distance radius
  double prob_inside = 0.85;
  double prob_outside = 0.25;
  double label_noise = 0.1;       // independent flip probability
  bool with_ll = false;           // also emit a synthetic log-likelihood baseline
  std::uint64_t rng_seed = 0;
};

struct SyntheticResult {
  BenchmarkStore store;
  // Planted expected accuracy per (task_id, model_id), label noise included.
  std::map<std::string, std::map<std::string, double>> planted_accuracy;
};

SyntheticResult generate_synthetic(const SyntheticSpec& spec);

/// Sidecar ground-truth file: JSON {task_id: {model_id: accuracy}}.
void save_ground_truth(
    const std::map<std::string, std::map<std::string, double>>& truth,
    const std::filesystem::path& path);

}  // namespace llmrouter
