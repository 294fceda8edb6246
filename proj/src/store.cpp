#include "llmrouter/store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "llmrouter/errors.hpp"

namespace llmrouter {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::map<std::string, double> read_number_map(const json& j, const char* field,
                                              std::size_t line) {
  std::map<std::string, double> out;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) {
      throw SchemaError("line " + std::to_string(line) + ": " + field + "[" +
                        key + "] is not a number");
    }
    out[key] = value.get<double>();
  }
  return out;
}

bool is_binary_value(double v) { return v == 0.0 || v == 1.0; }

}  // namespace

BenchmarkStore BenchmarkStore::from_parts(
    std::size_t dimension, std::vector<ModelRecord> models,
    std::vector<Sample> samples, std::vector<std::vector<double>> embeddings,
    LabelMode mode, std::map<std::string, double> thresholds) {
  if (dimension == 0) throw ValidationError("store dimension must be positive");
  if (models.empty()) throw ValidationError("model roster is empty");
  if (samples.size() != embeddings.size()) {
    throw ValidationError("samples/embeddings size mismatch");
  }
  if (samples.empty()) throw EmptyStoreError("store has no samples");

  BenchmarkStore store;
  store.dimension_ = dimension;
  store.mode_ = mode;
  store.thresholds_ = std::move(thresholds);

  std::set<std::string> model_ids;
  for (const auto& m : models) {
    if (m.model_id.empty()) throw ValidationError("empty model_id");
    if (!model_ids.insert(m.model_id).second) {
      throw ValidationError("duplicate model_id: " + m.model_id);
    }
    if (!(m.n_params_b > 0.0)) {
      throw ValidationError("model " + m.model_id + ": n_params_b must be > 0");
    }
  }
  store.models_ = std::move(models);

  store.matrix_.reserve(samples.size() * dimension);
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Sample& s = samples[i];
    const std::string where = "sample (" + s.task_id + ", " + s.sample_id + ")";
    if (!seen.insert({s.task_id, s.sample_id}).second) {
      throw ValidationError("duplicate " + where);
    }
    const auto& emb = embeddings[i];
    if (emb.size() != dimension) {
      throw SchemaError(where + ": embedding has " + std::to_string(emb.size()) +
                        " dims, store dimension is " + std::to_string(dimension));
    }
    for (double x : emb) {
      if (!std::isfinite(x)) throw ValidationError(where + ": non-finite embedding");
    }
    const double norm = l2_norm(emb);
    if (norm == 0.0) {
      throw ValidationError(where + ": zero-norm embedding cannot be normalized");
    }
    // Skip the division for unit vectors so that save/load is idempotent at
    // the bit level.
    const double scale = std::abs(norm - 1.0) <= 1e-12 ? 1.0 : norm;
    for (double x : emb) store.matrix_.push_back(x / scale);

    if (s.labels.size() != store.models_.size()) {
      throw ValidationError(where + ": label key set does not match model roster");
    }
    for (const auto& [model_id, value] : s.labels) {
      if (!model_ids.contains(model_id)) {
        throw ValidationError(where + ": unknown model_id " + model_id);
      }
      if (!(value >= 0.0 && value <= 1.0)) {
        throw ValidationError(where + ": label for " + model_id +
                              " outside [0,1]");
      }
      if (mode == LabelMode::binary && !is_binary_value(value)) {
        throw ValidationError(where + ": non-binary label for " + model_id +
                              " in a binary store");
      }
    }
    for (const auto& [model_id, value] : s.raw_metrics) {
      (void)value;
      if (!model_ids.contains(model_id)) {
        throw ValidationError(where + ": unknown model_id in raw_metrics: " +
                              model_id);
      }
    }
    for (const auto& [model_id, value] : s.ll) {
      (void)value;
      if (!model_ids.contains(model_id)) {
        throw ValidationError(where + ": unknown model_id in ll: " + model_id);
      }
    }

    store.tasks_[s.task_id].push_back(i);
    store.samples_.push_back(std::move(s));
  }

  for (const auto& [task_id, members] : store.tasks_) {
    (void)members;
    store.task_order_.push_back(task_id);
  }

  // Binarization consistency: y = 1 iff raw_metric > eta_d wherever both exist.
  if (!store.thresholds_.empty() && store.mode_ == LabelMode::binary) {
    for (const auto& s : store.samples_) {
      auto it = store.thresholds_.find(s.task_id);
      if (it == store.thresholds_.end()) continue;
      for (const auto& [model_id, metric] : s.raw_metrics) {
        auto lit = s.labels.find(model_id);
        if (lit == s.labels.end()) continue;
        const double expected = metric > it->second ? 1.0 : 0.0;
        if (lit->second != expected) {
          throw ValidationError("sample (" + s.task_id + ", " + s.sample_id +
                                "): label inconsistent with raw_metric and "
                                "threshold for " + model_id);
        }
      }
    }
  }
  return store;
}

BenchmarkStore BenchmarkStore::load(const std::filesystem::path& samples_path,
                                    const std::filesystem::path& models_path,
                                    const IngestOptions& options) {
  std::ifstream models_in(models_path);
  if (!models_in) throw IoError("cannot open models file: " + models_path.string());
  std::vector<ModelRecord> models;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(models_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(models_path.string() + " line " +
                        std::to_string(line_no) + ": " + e.what());
    }
    ModelRecord m;
    if (!j.contains("model_id") || !j["model_id"].is_string()) {
      throw SchemaError(models_path.string() + " line " +
                        std::to_string(line_no) + ": missing model_id");
    }
    m.model_id = j["model_id"].get<std::string>();
    if (!j.contains("n_params_b") || !j["n_params_b"].is_number()) {
      throw SchemaError(models_path.string() + " line " +
                        std::to_string(line_no) + ": missing n_params_b");
    }
    m.n_params_b = j["n_params_b"].get<double>();
    m.display_name = j.value("display_name", m.model_id);
    models.push_back(std::move(m));
  }

  std::ifstream samples_in(samples_path);
  if (!samples_in) {
    throw IoError("cannot open samples file: " + samples_path.string());
  }

  std::vector<Sample> samples;
  std::vector<std::vector<double>> embeddings;
  std::optional<std::size_t> dimension = options.dimension;
  bool saw_non_binary_label = false;

  line_no = 0;
  while (std::getline(samples_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(samples_path.string() + " line " +
                        std::to_string(line_no) + ": " + e.what());
    }
    Sample s;
    for (const char* field : {"task_id", "sample_id", "embedding", "labels"}) {
      if (!j.contains(field)) {
        throw SchemaError(samples_path.string() + " line " +
                          std::to_string(line_no) + ": missing field " + field);
      }
    }
    s.task_id = j["task_id"].get<std::string>();
    s.sample_id = j["sample_id"].get<std::string>();

    std::vector<double> emb;
    for (const auto& x : j["embedding"]) {
      if (!x.is_number()) {
        throw SchemaError(samples_path.string() + " line " +
                          std::to_string(line_no) + ": non-numeric embedding");
      }
      emb.push_back(x.get<double>());
    }
    if (!dimension) dimension = emb.size();
    if (emb.size() != *dimension) {
      throw SchemaError(samples_path.string() + " line " +
                        std::to_string(line_no) + ": embedding has " +
                        std::to_string(emb.size()) + " dims, expected " +
                        std::to_string(*dimension));
    }

    s.labels = read_number_map(j["labels"], "labels", line_no);
    if (j.contains("raw_metrics")) {
      s.raw_metrics = read_number_map(j["raw_metrics"], "raw_metrics", line_no);
    }
    if (j.contains("ll")) s.ll = read_number_map(j["ll"], "ll", line_no);

    if (options.binarize) {
      // Rebuild labels from raw metrics where present; otherwise labels must
      // already be binary.
      auto eta_it = options.thresholds.find(s.task_id);
      for (auto& [model_id, value] : s.labels) {
        auto rit = s.raw_metrics.find(model_id);
        if (rit != s.raw_metrics.end()) {
          if (eta_it == options.thresholds.end()) {
            throw ValidationError(samples_path.string() + " line " +
                                  std::to_string(line_no) +
                                  ": raw_metrics present but no threshold for "
                                  "task " + s.task_id);
          }
          value = rit->second > eta_it->second ? 1.0 : 0.0;
        }
      }
    } else if (options.label_min || options.label_max) {
      const double lo = options.label_min.value_or(0.0);
      const double hi = options.label_max.value_or(1.0);
      if (!(hi > lo)) throw DomainError("label_max must exceed label_min");
      for (auto& [model_id, value] : s.labels) {
        (void)model_id;
        value = (value - lo) / (hi - lo);
      }
    }
    for (const auto& [model_id, value] : s.labels) {
      (void)model_id;
      if (!is_binary_value(value)) saw_non_binary_label = true;
    }

    samples.push_back(std::move(s));
    embeddings.push_back(std::move(emb));
  }

  if (samples.empty()) throw EmptyStoreError("no samples in " + samples_path.string());

  LabelMode mode;
  if (options.binarize) {
    mode = LabelMode::binary;
  } else if (options.label_min || options.label_max) {
    mode = LabelMode::continuous;
  } else {
    mode = saw_non_binary_label ? LabelMode::continuous : LabelMode::binary;
  }

  return from_parts(*dimension, std::move(models), std::move(samples),
                    std::move(embeddings), mode,
                    options.binarize ? options.thresholds
                                     : std::map<std::string, double>{});
}

void BenchmarkStore::save(const std::filesystem::path& samples_path,
                          const std::filesystem::path& models_path) const {
  std::ofstream models_out(models_path);
  if (!models_out) {
    throw IoError("cannot write models file: " + models_path.string());
  }
  for (const auto& m : models_) {
    ordered_json j;
    j["model_id"] = m.model_id;
    j["n_params_b"] = m.n_params_b;
    j["display_name"] = m.display_name;
    models_out << j.dump() << '\n';
  }
  if (!models_out) throw IoError("write failed: " + models_path.string());

  std::ofstream samples_out(samples_path);
  if (!samples_out) {
    throw IoError("cannot write samples file: " + samples_path.string());
  }
  for (const auto& task_id : task_order_) {
    for (std::size_t idx : tasks_.at(task_id)) {
      const Sample& s = samples_[idx];
      ordered_json j;
      j["task_id"] = s.task_id;
      j["sample_id"] = s.sample_id;
      j["embedding"] = ordered_json::array();
      for (double x : embedding(idx)) j["embedding"].push_back(x);
      j["labels"] = s.labels;
      if (!s.raw_metrics.empty()) j["raw_metrics"] = s.raw_metrics;
      if (!s.ll.empty()) j["ll"] = s.ll;
      samples_out << j.dump() << '\n';
    }
  }
  if (!samples_out) throw IoError("write failed: " + samples_path.string());
}

bool BenchmarkStore::has_model(const std::string& model_id) const {
  return std::any_of(models_.begin(), models_.end(),
                     [&](const ModelRecord& m) { return m.model_id == model_id; });
}

const ModelRecord& BenchmarkStore::model(const std::string& model_id) const {
  for (const auto& m : models_) {
    if (m.model_id == model_id) return m;
  }
  throw NotFoundError("unknown model: " + model_id);
}

bool BenchmarkStore::has_task(const std::string& task_id) const {
  return tasks_.contains(task_id);
}

const std::vector<std::size_t>& BenchmarkStore::task_samples(
    const std::string& task_id) const {
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw NotFoundError("unknown task: " + task_id);
  return it->second;
}

std::vector<std::size_t> BenchmarkStore::all_indices() const {
  std::vector<std::size_t> out(samples_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

std::vector<std::size_t> BenchmarkStore::dataset_complement(
    const std::string& task_id) const {
  if (!tasks_.contains(task_id)) throw NotFoundError("unknown task: " + task_id);
  std::vector<std::size_t> out;
  out.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].task_id != task_id) out.push_back(i);
  }
  return out;
}

std::vector<double> BenchmarkStore::normalize_query(
    std::span<const double> query) const {
  if (query.size() != dimension_) {
    throw SchemaError("query has " + std::to_string(query.size()) +
                      " dims, store dimension is " + std::to_string(dimension_));
  }
  for (double x : query) {
    if (!std::isfinite(x)) throw DomainError("non-finite query component");
  }
  const double norm = l2_norm(query);
  if (norm == 0.0) throw DomainError("zero-norm query cannot be normalized");
  std::vector<double> out(query.begin(), query.end());
  if (std::abs(norm - 1.0) > 1e-12) {
    for (double& x : out) x /= norm;
  }
  return out;
}

std::vector<BenchmarkStore::Neighbor> BenchmarkStore::knn_among(
    std::span<const std::size_t> candidates,
    std::span<const double> normalized_query, std::size_t k) const {
  if (k < 1) throw DomainError("k must be >= 1");
  if (candidates.empty()) {
    throw EmptyStoreError("no candidate samples for kNN query");
  }
  std::vector<Neighbor> all;
  all.reserve(candidates.size());
  for (std::size_t idx : candidates) {
    const double* row = matrix_.data() + idx * dimension_;
    double dot = 0.0;
    for (std::size_t j = 0; j < dimension_; ++j) dot += row[j] * normalized_query[j];
    all.push_back({idx, 1.0 - dot});
  }
  const auto cmp = [this](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    const Sample& sa = samples_[a.index];
    const Sample& sb = samples_[b.index];
    if (sa.task_id != sb.task_id) return sa.task_id < sb.task_id;
    return sa.sample_id < sb.sample_id;
  };
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + take, all.end(), cmp);
  all.resize(take);
  return all;
}

std::vector<BenchmarkStore::Neighbor> BenchmarkStore::knn_query(
    std::span<const double> query, std::size_t k,
    const std::optional<std::string>& exclude_task) const {
  const std::vector<double> normalized = normalize_query(query);
  std::vector<std::size_t> candidates =
      exclude_task ? dataset_complement(*exclude_task) : all_indices();
  if (candidates.empty()) {
    throw EmptyStoreError("task exclusion left no candidate samples");
  }
  return knn_among(candidates, normalized, k);
}

bool BenchmarkStore::logically_equal(const BenchmarkStore& other) const {
  if (dimension_ != other.dimension_ || mode_ != other.mode_) return false;
  if (models_ != other.models_) return false;
  if (task_order_ != other.task_order_) return false;
  if (samples_.size() != other.samples_.size()) return false;
  for (const auto& task_id : task_order_) {
    const auto& a = tasks_.at(task_id);
    const auto& b = other.tasks_.at(task_id);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (samples_[a[i]] != other.samples_[b[i]]) return false;
      const auto ea = embedding(a[i]);
      const auto eb = other.embedding(b[i]);
      if (!std::equal(ea.begin(), ea.end(), eb.begin())) return false;
    }
  }
  return true;
}

}  // namespace llmrouter
