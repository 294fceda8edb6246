#include "llmrouter/eval_core.hpp"

#include <algorithm>

#include "llmrouter/errors.hpp"

namespace llmrouter {

TaskEvalStats evaluate_task_against_reference(
    const BenchmarkStore& store, std::span<const std::size_t> eval_samples,
    std::span<const std::size_t> reference, const PredictorConfig& predictor,
    const DistanceConfig& distance, bool with_accuracy) {
  if (eval_samples.empty()) throw DomainError("empty evaluation set");
  if (reference.empty()) throw EmptyStoreError("empty reference set");
  if (with_accuracy && store.label_mode() != LabelMode::binary) {
    throw ModeError("predictor accuracy requires binary labels");
  }

  TaskEvalStats stats;
  stats.n_eval = eval_samples.size();
  for (const auto& m : store.models()) {
    stats.g_mean[m.model_id] = 0.0;
    stats.gbar_mean[m.model_id] = 0.0;
    stats.n1[m.model_id] = 0;
    if (with_accuracy) stats.accuracy[m.model_id] = 0.0;
  }

  const std::size_t k_search = std::max(predictor.k, distance.kappa);
  double u_sum = 0.0;
  for (std::size_t idx : eval_samples) {
    const auto neighbors =
        store.knn_among(reference, store.embedding(idx), k_search);

    const std::size_t kappa = std::min(distance.kappa, neighbors.size());
    double d_sum = 0.0;
    for (std::size_t i = 0; i < kappa; ++i) d_sum += neighbors[i].distance;
    u_sum += d_sum / static_cast<double>(kappa);

    const std::size_t k = std::min(predictor.k, neighbors.size());
    for (const auto& m : store.models()) {
      double label_sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        label_sum += store.sample(neighbors[i].index).labels.at(m.model_id);
      }
      const double g = label_sum / static_cast<double>(k);
      const bool g_bar = g > predictor.threshold;
      stats.g_mean[m.model_id] += g;
      if (g_bar) {
        stats.gbar_mean[m.model_id] += 1.0;
        ++stats.n1[m.model_id];
      }
      if (with_accuracy) {
        const double y = store.sample(idx).labels.at(m.model_id);
        if ((g_bar ? 1.0 : 0.0) == y) stats.accuracy[m.model_id] += 1.0;
      }
    }
  }

  const double n = static_cast<double>(eval_samples.size());
  stats.u = u_sum / n;
  for (const auto& m : store.models()) {
    stats.g_mean[m.model_id] /= n;
    stats.gbar_mean[m.model_id] /= n;
    if (with_accuracy) stats.accuracy[m.model_id] /= n;
  }
  return stats;
}

}  // namespace llmrouter
