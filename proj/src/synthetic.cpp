#include "llmrouter/synthetic.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "llmrouter/errors.hpp"
#include "llmrouter/rng.hpp"

namespace llmrouter {

namespace {

std::vector<double> random_unit_vector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.next_gaussian();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

double cosine_distance(const std::vector<double>& a,
                       const std::vector<double>& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return 1.0 - dot;
}

std::string zero_pad(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_tasks < 1 || spec.samples_per_task < 1 || spec.n_models < 1) {
    throw DomainError("synthetic spec: counts must be positive");
  }
  if (spec.dimension < 2) throw DomainError("synthetic spec: dimension must be >= 2");
  for (double p : {spec.prob_inside, spec.prob_outside, spec.label_noise}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DomainError("synthetic spec: probabilities must lie in [0,1]");
    }
  }
  if (!(spec.cluster_spread >= 0.0)) {
    throw DomainError("synthetic spec: cluster_spread must be >= 0");
  }

  Rng rng(derive_seed(spec.rng_seed, 0xabcd));

  std::vector<std::vector<double>> task_centers;
  for (std::size_t t = 0; t < spec.n_tasks; ++t) {
    task_centers.push_back(random_unit_vector(rng, spec.dimension));
  }

  // Each model is competent near a random subset of task centers.
  std::vector<ModelRecord> models;
  std::vector<std::vector<std::size_t>> model_anchors(spec.n_models);
  const std::size_t regions =
      std::min(spec.regions_per_model, spec.n_tasks);
  for (std::size_t m = 0; m < spec.n_models; ++m) {
    ModelRecord rec;
    rec.model_id = "model-" + zero_pad(m, 2);
    rec.n_params_b = 3.0 + static_cast<double>(rng.next_below(68));
    rec.display_name = rec.model_id;
    models.push_back(rec);

    std::vector<std::size_t> anchors(spec.n_tasks);
    for (std::size_t t = 0; t < spec.n_tasks; ++t) anchors[t] = t;
    rng.shuffle(anchors);
    anchors.resize(regions);
    model_anchors[m] = anchors;
  }

  std::vector<BenchmarkStore::Sample> samples;
  std::vector<std::vector<double>> embeddings;
  std::map<std::string, std::map<std::string, double>> truth;

  for (std::size_t t = 0; t < spec.n_tasks; ++t) {
    const std::string task_id = "task-" + zero_pad(t, 2);
    std::map<std::string, double> expected_sum;
    for (const auto& m : models) expected_sum[m.model_id] = 0.0;

    for (std::size_t i = 0; i < spec.samples_per_task; ++i) {
      std::vector<double> point = task_centers[t];
      for (double& x : point) x += spec.cluster_spread * rng.next_gaussian();
      double norm = 0.0;
      for (double x : point) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) {
        point = task_centers[t];
        norm = 1.0;
      }
      for (double& x : point) x /= norm;

      BenchmarkStore::Sample s;
      s.task_id = task_id;
      s.sample_id = "s" + zero_pad(i, 5);
      for (std::size_t m = 0; m < spec.n_models; ++m) {
        bool inside = false;
        for (std::size_t anchor : model_anchors[m]) {
          if (cosine_distance(point, task_centers[anchor]) <
              spec.region_radius) {
            inside = true;
            break;
          }
        }
        const double prob = inside ? spec.prob_inside : spec.prob_outside;
        // Independent flip noise on top of the planted correctness draw.
        const double effective = prob * (1.0 - spec.label_noise) +
                                 (1.0 - prob) * spec.label_noise;
        const bool correct = rng.next_bernoulli(effective);
        s.labels[models[m].model_id] = correct ? 1.0 : 0.0;
        expected_sum[models[m].model_id] += effective;
        if (spec.with_ll) {
          // LL baseline loosely tracks correctness probability with noise.
          s.ll[models[m].model_id] =
              -4.0 + 3.0 * effective + 0.5 * rng.next_gaussian();
        }
      }
      samples.push_back(std::move(s));
      embeddings.push_back(std::move(point));
    }

    for (auto& [model_id, sum] : expected_sum) {
      truth[task_id][model_id] =
          sum / static_cast<double>(spec.samples_per_task);
    }
  }

  SyntheticResult result{
      BenchmarkStore::from_parts(spec.dimension, std::move(models),
                                 std::move(samples), std::move(embeddings),
                                 LabelMode::binary),
      std::move(truth)};
  return result;
}

void save_ground_truth(
    const std::map<std::string, std::map<std::string, double>>& truth,
    const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  for (const auto& [task_id, per_model] : truth) {
    for (const auto& [model_id, acc] : per_model) {
      j[task_id][model_id] = acc;
    }
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write ground truth file: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace llmrouter
