#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace llmrouter {

enum class LabelMode { binary, continuous };

struct ModelRecord {
  std::string model_id;
  double n_params_b = 0.0;  // parameter count, billions
  std::string display_name;

  bool operator==(const ModelRecord&) const = default;
};

struct IngestOptions {
  bool binarize = false;
  std::map<std::string, double> thresholds;  // task_id -> eta_d, used with binarize
  std::optional<double> label_min;           // continuous-label rescaling
  std::optional<double> label_max;
  std::optional<std::size_t> dimension;      // declared dimension; else from first sample
};

/// Immutable collection of embedded benchmark samples with per-model labels,
/// partitioned into tasks. All queries are read-only and safe to run
/// concurrently; embeddings are l2-normalized once at load.
class BenchmarkStore {
 public:
  struct Sample {
    std::string task_id;
    std::string sample_id;
    std::map<std::string, double> labels;       // model_id -> value in [0,1]
    std::map<std::string, double> raw_metrics;  // optional, pre-threshold metric
    std::map<std::string, double> ll;           // optional, mean log-likelihood

    bool operator==(const Sample&) const = default;
  };

  struct Neighbor {
    std::size_t index;
    double distance;  // cosine distance in [0, 2]
  };

  static BenchmarkStore load(const std::filesystem::path& samples_path,
                             const std::filesystem::path& models_path,
                             const IngestOptions& options = {});

  /// Builds a validated store from in-memory parts (synthetic generation,
  /// tests). Embeddings are normalized here, like at load.
  static BenchmarkStore from_parts(std::size_t dimension,
                                   std::vector<ModelRecord> models,
                                   std::vector<Sample> samples,
                                   std::vector<std::vector<double>> embeddings,
                                   LabelMode mode,
                                   std::map<std::string, double> thresholds = {});

  /// Canonical JSONL dump; load(save(s)) reproduces the store's logical
  /// content exactly.
  void save(const std::filesystem::path& samples_path,
            const std::filesystem::path& models_path) const;

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return samples_.size(); }
  LabelMode label_mode() const { return mode_; }
  const std::map<std::string, double>& thresholds() const { return thresholds_; }

  const std::vector<ModelRecord>& models() const { return models_; }
  bool has_model(const std::string& model_id) const;
  const ModelRecord& model(const std::string& model_id) const;

  /// Task ids in canonical (lexicographic) order.
  const std::vector<std::string>& task_ids() const { return task_order_; }
  bool has_task(const std::string& task_id) const;
  /// Sample indices of a task, in ingestion order.
  const std::vector<std::size_t>& task_samples(const std::string& task_id) const;

  const Sample& sample(std::size_t index) const { return samples_[index]; }
  std::span<const double> embedding(std::size_t index) const {
    return {matrix_.data() + index * dimension_, dimension_};
  }

  std::vector<std::size_t> all_indices() const;

  /// All samples outside task d.
  std::vector<std::size_t> dataset_complement(const std::string& task_id) const;

  /// Exhaustive exact kNN under cosine distance, ties broken by
  /// (task_id, sample_id). Returns min(k, candidates) neighbors.
  std::vector<Neighbor> knn_query(std::span<const double> query, std::size_t k,
                                  const std::optional<std::string>& exclude_task =
                                      std::nullopt) const;

  /// kNN restricted to an explicit candidate index set; the query must
  /// already be normalized (see normalize_query).
  std::vector<Neighbor> knn_among(std::span<const std::size_t> candidates,
                                  std::span<const double> normalized_query,
                                  std::size_t k) const;

  /// Validates dimension and returns the l2-normalized copy of a query.
  std::vector<double> normalize_query(std::span<const double> query) const;

  bool logically_equal(const BenchmarkStore& other) const;

 private:
  BenchmarkStore() = default;

  std::size_t dimension_ = 0;
  LabelMode mode_ = LabelMode::binary;
  std::vector<ModelRecord> models_;
  std::vector<Sample> samples_;
  std::vector<double> matrix_;  // row-major, normalized
  std::vector<std::string> task_order_;
  std::map<std::string, std::vector<std::size_t>> tasks_;
  std::map<std::string, double> thresholds_;
};

}  // namespace llmrouter
