#include "llmrouter/routing_api.hpp"

#include <algorithm>
#include <cmath>

#include "llmrouter/eval_core.hpp"

namespace llmrouter {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::vector<std::vector<double>> parse_inputs(const BenchmarkStore& store,
                                              const json& request) {
  if (!request.is_object() || !request.contains("inputs") ||
      !request["inputs"].is_array()) {
    throw RequestError(400, "bad_request", "request must carry an inputs array");
  }
  const auto& arr = request["inputs"];
  if (arr.empty()) {
    throw RequestError(422, "empty_inputs", "inputs list is empty");
  }
  std::vector<std::vector<double>> inputs;
  for (const auto& row : arr) {
    if (!row.is_array()) {
      throw RequestError(400, "bad_request", "each input must be a vector");
    }
    std::vector<double> v;
    for (const auto& x : row) {
      if (!x.is_number()) {
        throw RequestError(400, "bad_request", "non-numeric embedding value");
      }
      v.push_back(x.get<double>());
    }
    if (v.size() != store.dimension()) {
      throw RequestError(400, "dimension_mismatch",
                         "input has " + std::to_string(v.size()) +
                             " dims, store dimension is " +
                             std::to_string(store.dimension()));
    }
    inputs.push_back(std::move(v));
  }
  return inputs;
}

std::vector<std::string> parse_candidates(const BenchmarkStore& store,
                                          const json& request) {
  std::vector<std::string> out;
  if (request.contains("candidates")) {
    for (const auto& id : request["candidates"]) {
      if (!id.is_string() || !store.has_model(id.get<std::string>())) {
        throw RequestError(400, "unknown_model",
                           "unknown candidate model in request");
      }
      out.push_back(id.get<std::string>());
    }
  } else {
    for (const auto& m : store.models()) out.push_back(m.model_id);
  }
  if (request.contains("max_params")) {
    const double cap = request["max_params"].get<double>();
    std::erase_if(out, [&](const std::string& id) {
      return store.model(id).n_params_b > cap;
    });
  }
  if (out.empty()) {
    throw RequestError(400, "empty_candidates",
                       "candidate filter removed every model");
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string best_on_average_among(const BenchmarkStore& store,
                                  const std::vector<std::string>& candidates) {
  std::map<std::string, double> sums;
  for (const auto& id : candidates) sums[id] = 0.0;
  for (const auto& task_id : store.task_ids()) {
    for (const auto& id : candidates) {
      sums[id] += oracle_score(store, id, store.task_samples(task_id));
    }
  }
  return argmax_model(store, sums);
}

}  // namespace

ordered_json handle_route_request(const RouteContext& ctx,
                                  const json& request) {
  const BenchmarkStore& store = *ctx.store;
  const auto inputs = parse_inputs(store, request);
  const auto candidates = parse_candidates(store, request);

  PredictorConfig predictor = ctx.predictor;
  DistanceConfig distance = ctx.distance;
  double eta = ctx.eta;
  if (request.contains("k")) predictor.k = request["k"].get<std::size_t>();
  if (request.contains("threshold")) {
    predictor.threshold = request["threshold"].get<double>();
  }
  if (request.contains("kappa")) {
    distance.kappa = request["kappa"].get<std::size_t>();
  }
  if (request.contains("eta")) eta = request["eta"].get<double>();

  ScoreKind score = ctx.default_score;
  if (request.contains("score")) {
    try {
      score = score_kind_from_string(request["score"].get<std::string>());
    } catch (const DomainError& e) {
      throw RequestError(400, "bad_score_kind", e.what());
    }
  }
  if (score != ScoreKind::s1 && score != ScoreKind::s2 &&
      score != ScoreKind::s3) {
    throw RequestError(400, "bad_score_kind",
                       "route supports scores s1, s2, and s3");
  }
  const bool per_instance = request.value("per_instance", false);

  // A new external task: the reference set is the entire store.
  const auto reference = store.all_indices();

  ordered_json response;
  response["score_kind"] = to_string(score);
  response["per_instance"] = per_instance;

  if (per_instance) {
    if (score != ScoreKind::s1) {
      throw RequestError(400, "bad_score_kind",
                         "per-instance routing uses score s1");
    }
    response["decisions"] = ordered_json::array();
    for (const auto& input : inputs) {
      auto [chosen, g] = route_per_instance(store, input, reference, predictor);
      if (candidates.size() != store.models().size()) {
        std::map<std::string, double> filtered;
        for (const auto& id : candidates) filtered[id] = g.at(id);
        chosen = argmax_model(store, filtered);
        g = std::move(filtered);
      }
      ordered_json decision;
      decision["chosen_model"] = chosen;
      decision["scores"] = g;
      response["decisions"].push_back(std::move(decision));
    }
    return response;
  }

  // Task-level routing: aggregate predictions over all inputs.
  const std::size_t k_search = std::max(predictor.k, distance.kappa);
  std::map<std::string, double> g_sum, gbar_sum;
  std::map<std::string, std::size_t> n1;
  for (const auto& id : candidates) {
    g_sum[id] = 0.0;
    gbar_sum[id] = 0.0;
    n1[id] = 0;
  }
  double u_sum = 0.0;
  for (const auto& input : inputs) {
    const auto normalized = store.normalize_query(input);
    const auto neighbors = store.knn_among(reference, normalized, k_search);
    const std::size_t kappa = std::min(distance.kappa, neighbors.size());
    double d = 0.0;
    for (std::size_t i = 0; i < kappa; ++i) d += neighbors[i].distance;
    u_sum += d / static_cast<double>(kappa);
    const std::size_t k = std::min(predictor.k, neighbors.size());
    for (const auto& id : candidates) {
      double label_sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        label_sum += store.sample(neighbors[i].index).labels.at(id);
      }
      const double g = label_sum / static_cast<double>(k);
      g_sum[id] += g;
      if (g > predictor.threshold) {
        gbar_sum[id] += 1.0;
        ++n1[id];
      }
    }
  }
  const double n = static_cast<double>(inputs.size());
  const double u = u_sum / n;
  response["u"] = u;

  std::map<std::string, double> values;
  ordered_json selection;
  std::string chosen;

  if (score == ScoreKind::s1) {
    for (const auto& id : candidates) values[id] = g_sum.at(id) / n;
    chosen = argmax_model(store, values);
    selection["rule"] = "argmax";
  } else if (score == ScoreKind::s2) {
    if (store.label_mode() != LabelMode::binary) {
      throw RequestError(400, "label_mode", "score s2 requires binary labels");
    }
    for (const auto& id : candidates) values[id] = gbar_sum.at(id) / n;
    chosen = argmax_model(store, values);
    selection["rule"] = "argmax";
  } else {
    if (store.label_mode() != LabelMode::binary) {
      throw RequestError(400, "label_mode", "score s3 requires binary labels");
    }
    if (ctx.smoother == nullptr) {
      throw RequestError(400, "smoother_not_fitted",
                         "score s3 needs a fitted accuracy smoother");
    }
    std::map<std::string, double> p_estimates;
    for (const auto& id : candidates) {
      double p;
      try {
        p = predict_p(*ctx.smoother, id, u);
      } catch (const NotFittedError& e) {
        throw RequestError(400, "smoother_not_fitted", e.what());
      }
      p_estimates[id] = p;
      values[id] = score_s3(gbar_sum.at(id) / n, p);
    }
    response["p_estimates"] = p_estimates;

    const std::string m_star = best_on_average_among(store, candidates);
    ScoreVector sv{ScoreKind::s3, "", values};
    const std::string m3 = argmax_model(store, values);
    std::map<std::string, CorrectnessDistribution> dists;
    for (const std::string& id : {m3, m_star}) {
      if (dists.contains(id)) continue;
      dists.emplace(id, correctness_distribution(
                            n1.at(id), inputs.size() - n1.at(id),
                            p_estimates.at(id)));
    }
    const SelectionOutcome sel = select_eta_gated(store, sv, m_star, dists, eta);
    chosen = sel.chosen_model;
    selection["rule"] = "eta_gated";
    selection["m3"] = sel.m3;
    selection["m_star"] = sel.m_star;
    if (sel.win_probability) selection["win_probability"] = *sel.win_probability;
    selection["eta"] = eta;
  }

  response["chosen_model"] = chosen;
  response["scores"] = values;
  response["selection"] = std::move(selection);
  return response;
}

}  // namespace llmrouter
