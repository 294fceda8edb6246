#include "llmrouter/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "llmrouter/errors.hpp"
#include "llmrouter/rng.hpp"

namespace llmrouter {

namespace {

void check_config(const PredictorConfig& cfg) {
  if (cfg.k < 1) throw DomainError("predictor k must be >= 1");
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) {
    throw DomainError("predictor threshold must lie in (0,1)");
  }
}

}  // namespace

std::vector<BenchmarkStore::Neighbor> nearest_references(
    const BenchmarkStore& store, std::span<const double> query,
    std::span<const std::size_t> reference, std::size_t k) {
  if (reference.empty()) throw EmptyStoreError("empty reference set");
  const std::vector<double> normalized = store.normalize_query(query);
  return store.knn_among(reference, normalized, k);
}

CorrectnessPrediction predict_from_neighbors(
    const BenchmarkStore& store, const std::string& model_id,
    const std::vector<BenchmarkStore::Neighbor>& neighbors,
    const PredictorConfig& cfg) {
  check_config(cfg);
  if (!store.has_model(model_id)) throw NotFoundError("unknown model: " + model_id);
  if (neighbors.empty()) throw EmptyStoreError("no neighbors for prediction");

  CorrectnessPrediction out;
  const std::size_t take = std::min(cfg.k, neighbors.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t idx = neighbors[i].index;
    sum += store.sample(idx).labels.at(model_id);
    out.neighbors.push_back(idx);
  }
  out.g = sum / static_cast<double>(take);
  out.g_bar = out.g > cfg.threshold;
  return out;
}

CorrectnessPrediction predict(const BenchmarkStore& store,
                              const std::string& model_id,
                              std::span<const double> query,
                              std::span<const std::size_t> reference,
                              const PredictorConfig& cfg) {
  check_config(cfg);
  if (!store.has_model(model_id)) throw NotFoundError("unknown model: " + model_id);
  const auto neighbors = nearest_references(store, query, reference, cfg.k);
  return predict_from_neighbors(store, model_id, neighbors, cfg);
}

double predictor_accuracy(const BenchmarkStore& store,
                          const std::string& model_id,
                          std::span<const std::size_t> eval_samples,
                          std::span<const std::size_t> reference,
                          const PredictorConfig& cfg) {
  if (store.label_mode() != LabelMode::binary) {
    throw ModeError("predictor_accuracy requires binary labels");
  }
  if (eval_samples.empty()) throw DomainError("empty evaluation set");
  std::size_t hits = 0;
  for (std::size_t idx : eval_samples) {
    const auto pred =
        predict(store, model_id, store.embedding(idx), reference, cfg);
    const double y = store.sample(idx).labels.at(model_id);
    if ((pred.g_bar ? 1.0 : 0.0) == y) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(eval_samples.size());
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
build_mixed_reference(const BenchmarkStore& store, const std::string& task_id,
                      double alpha, std::size_t cap, std::uint64_t rng_seed) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw DomainError("alpha must lie in [0,1]");
  }
  const auto& task = store.task_samples(task_id);
  const double n = static_cast<double>(task.size());
  // round-half-up of min(alpha * n, cap)
  const double target = std::min(alpha * n, static_cast<double>(cap));
  std::size_t count = static_cast<std::size_t>(std::floor(target + 0.5));
  count = std::min(count, task.size());

  std::vector<std::size_t> pool(task.begin(), task.end());
  Rng rng(rng_seed);
  rng.shuffle(pool);

  std::vector<std::size_t> extras(pool.begin(), pool.begin() + count);
  std::vector<std::size_t> eval(pool.begin() + count, pool.end());
  std::sort(extras.begin(), extras.end());
  std::sort(eval.begin(), eval.end());
  return {std::move(extras), std::move(eval)};
}

}  // namespace llmrouter
