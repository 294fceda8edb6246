#include "llmrouter/ood.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "llmrouter/errors.hpp"
#include "llmrouter/eval_core.hpp"
#include "llmrouter/rng.hpp"

namespace llmrouter {

namespace {

void check_distance_config(const DistanceConfig& cfg) {
  if (cfg.kappa < 1) throw DomainError("kappa must be >= 1");
}

double point_distance(const BenchmarkStore& store,
                      std::span<const double> normalized_query,
                      std::span<const std::size_t> reference,
                      std::size_t kappa) {
  const auto neighbors = store.knn_among(reference, normalized_query, kappa);
  double sum = 0.0;
  for (const auto& n : neighbors) sum += n.distance;
  return sum / static_cast<double>(neighbors.size());
}

// Merge two sorted index lists.
std::vector<std::size_t> merge_reference(std::span<const std::size_t> base,
                                         std::span<const std::size_t> extras) {
  std::vector<std::size_t> out;
  out.reserve(base.size() + extras.size());
  std::merge(base.begin(), base.end(), extras.begin(), extras.end(),
             std::back_inserter(out));
  return out;
}

}  // namespace

std::vector<double> default_alpha_grid() {
  std::vector<double> alphas(15);
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    alphas[i] = 0.2 * static_cast<double>(i) / 14.0;
  }
  return alphas;
}

double dataset_distance(const BenchmarkStore& store,
                        std::span<const std::size_t> task_inputs,
                        std::span<const std::size_t> reference,
                        const DistanceConfig& cfg) {
  check_distance_config(cfg);
  if (task_inputs.empty()) throw DomainError("empty task input set");
  if (reference.empty()) throw EmptyStoreError("empty reference set");
  double sum = 0.0;
  for (std::size_t idx : task_inputs) {
    sum += point_distance(store, store.embedding(idx), reference, cfg.kappa);
  }
  return sum / static_cast<double>(task_inputs.size());
}

double dataset_distance_external(const BenchmarkStore& store,
                                 const std::vector<std::vector<double>>& inputs,
                                 std::span<const std::size_t> reference,
                                 const DistanceConfig& cfg) {
  check_distance_config(cfg);
  if (inputs.empty()) throw DomainError("empty task input set");
  if (reference.empty()) throw EmptyStoreError("empty reference set");
  double sum = 0.0;
  for (const auto& q : inputs) {
    const auto normalized = store.normalize_query(q);
    sum += point_distance(store, normalized, reference, cfg.kappa);
  }
  return sum / static_cast<double>(inputs.size());
}

SmootherModel generate_pairs(const BenchmarkStore& store,
                             const PairGenerationConfig& cfg) {
  if (cfg.repeats < 1) throw DomainError("repeats must be >= 1");
  const std::vector<double> alphas =
      cfg.alphas.empty() ? default_alpha_grid() : cfg.alphas;
  const auto& tasks = store.task_ids();
  if (cfg.exclude_task && !store.has_task(*cfg.exclude_task)) {
    throw NotFoundError("unknown task: " + *cfg.exclude_task);
  }

  std::vector<std::size_t> active;  // indices into the full task list
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!cfg.exclude_task || tasks[t] != *cfg.exclude_task) active.push_back(t);
  }
  if (active.size() < 2) throw DomainError("generate_pairs needs at least 2 tasks");

  struct Triple {
    std::size_t task_idx, alpha_idx, repeat;
  };
  std::vector<Triple> triples;
  for (std::size_t t : active) {
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      for (std::size_t r = 0; r < cfg.repeats; ++r) triples.push_back({t, a, r});
    }
  }

  struct TripleResult {
    bool skipped = false;
    double u = 0.0;
    std::map<std::string, double> accuracy;
  };
  std::vector<TripleResult> results(triples.size());

  const auto run_triple = [&](std::size_t i) {
    const Triple& tr = triples[i];
    const std::string& task_id = tasks[tr.task_idx];
    const std::uint64_t seed =
        derive_seed(cfg.rng_seed, tr.task_idx, tr.alpha_idx, tr.repeat);
    auto [extras, eval] = build_mixed_reference(store, task_id,
                                                alphas[tr.alpha_idx],
                                                cfg.mix_cap, seed);
    if (eval.empty()) {
      results[i].skipped = true;
      return;
    }
    auto complement = store.dataset_complement(task_id);
    if (cfg.exclude_task) {
      std::erase_if(complement, [&](std::size_t idx) {
        return store.sample(idx).task_id == *cfg.exclude_task;
      });
    }
    const auto reference = merge_reference(complement, extras);
    const auto stats = evaluate_task_against_reference(
        store, eval, reference, cfg.predictor, cfg.distance, true);
    results[i].u = stats.u;
    results[i].accuracy = stats.accuracy;
  };

  std::size_t n_threads = cfg.threads > 0
                              ? cfg.threads
                              : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<std::size_t>(n_threads, triples.size());
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < triples.size(); ++i) run_triple(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < n_threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next.fetch_add(1); i < triples.size();
             i = next.fetch_add(1)) {
          run_triple(i);
        }
      }));
    }
    for (auto& f : workers) f.get();
  }

  SmootherModel model;
  model.sigma = cfg.sigma;
  for (const auto& m : store.models()) model.pairs[m.model_id] = {};
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (results[i].skipped) {
      ++model.skipped;
      continue;
    }
    const Triple& tr = triples[i];
    for (const auto& [model_id, p] : results[i].accuracy) {
      model.pairs[model_id].push_back({results[i].u, p, model_id,
                                       tasks[tr.task_idx], alphas[tr.alpha_idx],
                                       tr.repeat});
    }
  }
  return model;
}

double predict_p(const SmootherModel& model, const std::string& model_id,
                 double u_query) {
  auto it = model.pairs.find(model_id);
  if (it == model.pairs.end() || it->second.empty()) {
    throw NotFittedError("no distance-accuracy pairs for model " + model_id);
  }
  if (!(model.sigma > 0.0)) throw DomainError("sigma must be > 0");

  const double inv_two_sigma_sq = 1.0 / (2.0 * model.sigma * model.sigma);
  double num = 0.0, den = 0.0;
  for (const auto& pair : it->second) {
    const double d = u_query - pair.u;
    const double w = std::exp(-d * d * inv_two_sigma_sq);
    num += w * pair.p;
    den += w;
  }
  if (den == 0.0) {
    // All weights underflowed; fall back to the nearest pair.
    const auto nearest = std::min_element(
        it->second.begin(), it->second.end(),
        [&](const DistanceAccuracyPair& a, const DistanceAccuracyPair& b) {
          return std::abs(a.u - u_query) < std::abs(b.u - u_query);
        });
    return nearest->p;
  }
  return num / den;
}

double smoother_mae(const SmootherModel& model,
                    std::span<const DistanceAccuracyPair> heldout) {
  if (heldout.empty()) throw DomainError("empty held-out pair set");
  double sum = 0.0;
  for (const auto& pair : heldout) {
    sum += std::abs(predict_p(model, pair.model_id, pair.u) - pair.p);
  }
  return sum / static_cast<double>(heldout.size());
}

void save_pairs_csv(const SmootherModel& model,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pairs file: " + path.string());
  out << "model_id,u,p,source_task,alpha,repeat\n";
  out.precision(17);
  for (const auto& [model_id, pairs] : model.pairs) {
    for (const auto& pair : pairs) {
      out << model_id << ',' << pair.u << ',' << pair.p << ','
          << pair.source_task << ',' << pair.alpha << ',' << pair.repeat
          << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

SmootherModel load_pairs_csv(const std::filesystem::path& path, double sigma) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pairs file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "model_id,u,p,source_task,alpha,repeat") {
    throw SchemaError("pairs file missing expected header: " + path.string());
  }
  SmootherModel model;
  model.sigma = sigma;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    DistanceAccuracyPair pair;
    try {
      std::getline(ss, pair.model_id, ',');
      std::getline(ss, field, ',');
      pair.u = std::stod(field);
      std::getline(ss, field, ',');
      pair.p = std::stod(field);
      std::getline(ss, pair.source_task, ',');
      std::getline(ss, field, ',');
      pair.alpha = std::stod(field);
      std::getline(ss, field, ',');
      pair.repeat = static_cast<std::size_t>(std::stoul(field));
    } catch (const std::exception&) {
      throw SchemaError(path.string() + " line " + std::to_string(line_no) +
                        ": malformed pair row");
    }
    model.pairs[pair.model_id].push_back(std::move(pair));
  }
  return model;
}

}  // namespace llmrouter
