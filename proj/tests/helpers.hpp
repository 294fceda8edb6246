#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "llmrouter/rng.hpp"
#include "llmrouter/store.hpp"

namespace llmrouter::testing {

inline std::string pad2(std::size_t i) {
  std::string s = std::to_string(i);
  return s.size() < 2 ? "0" + s : s;
}

/// Random binary store: n_tasks x per_task samples on the unit sphere,
/// independent coin-flip labels. Deterministic given the seed.
inline BenchmarkStore random_store(std::size_t n_tasks, std::size_t per_task,
                                   std::size_t dim, std::size_t n_models,
                                   std::uint64_t seed, bool with_ll = false) {
  Rng rng(seed);
  std::vector<ModelRecord> models;
  for (std::size_t m = 0; m < n_models; ++m) {
    models.push_back({"m" + pad2(m), 1.0 + static_cast<double>(rng.next_below(100)),
                      "m" + pad2(m)});
  }
  std::vector<BenchmarkStore::Sample> samples;
  std::vector<std::vector<double>> embeddings;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    for (std::size_t i = 0; i < per_task; ++i) {
      BenchmarkStore::Sample s;
      s.task_id = "t" + pad2(t);
      s.sample_id = "s" + std::to_string(i);
      for (const auto& m : models) {
        s.labels[m.model_id] = rng.next_bernoulli(0.5) ? 1.0 : 0.0;
        if (with_ll) s.ll[m.model_id] = -5.0 * rng.next_double();
      }
      samples.push_back(std::move(s));
      std::vector<double> e(dim);
      for (auto& x : e) x = rng.next_gaussian();
      embeddings.push_back(std::move(e));
    }
  }
  return BenchmarkStore::from_parts(dim, std::move(models), std::move(samples),
                                    std::move(embeddings), LabelMode::binary);
}

inline double cosine_distance(const std::vector<double>& a,
                              const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

inline std::vector<double> embedding_copy(const BenchmarkStore& store,
                                          std::size_t index) {
  auto span = store.embedding(index);
  return {span.begin(), span.end()};
}

}  // namespace llmrouter::testing
