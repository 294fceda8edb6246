#include "llmrouter/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "llmrouter/errors.hpp"
#include "llmrouter/eval_core.hpp"
#include "llmrouter/rng.hpp"
#include "llmrouter/stats.hpp"

namespace llmrouter {

namespace {

bool store_has_ll(const BenchmarkStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& ll = store.sample(i).ll;
    for (const auto& m : store.models()) {
      if (!ll.contains(m.model_id)) return false;
    }
  }
  return true;
}

std::vector<std::string> candidate_models(
    const BenchmarkStore& store, const std::optional<double>& max_params,
    const std::optional<std::string>& exclude = std::nullopt) {
  std::vector<std::string> out;
  for (const auto& m : store.models()) {
    if (max_params && m.n_params_b > *max_params) continue;
    if (exclude && m.model_id == *exclude) continue;
    out.push_back(m.model_id);
  }
  if (out.empty()) throw DomainError("candidate model set is empty");
  return out;
}

std::vector<std::string> active_rows(const BenchmarkStore& store,
                                     const ExperimentConfig& cfg) {
  std::vector<std::string> rows;
  if (cfg.score_kinds.empty()) {
    rows = {"s1", "s2", "s3_true_p"};
    if (store.task_ids().size() >= 3) rows.insert(rows.begin() + 2, "s3");
    if (store_has_ll(store)) rows.push_back("ll");
  } else {
    for (ScoreKind kind : cfg.score_kinds) {
      const std::string name = to_string(kind);
      if (name != "oracle") rows.push_back(name);
    }
  }
  rows.push_back("bma");
  rows.push_back("oracle");
  return rows;
}

bool is_correlatable_row(const std::string& row) {
  return row != "bma" && row != "oracle";
}

std::map<std::string, double> restrict_to(
    const std::map<std::string, double>& values,
    const std::vector<std::string>& candidates) {
  std::map<std::string, double> out;
  for (const auto& id : candidates) out[id] = values.at(id);
  return out;
}

struct TaskResult {
  bool skipped = false;
  std::vector<TaskRow> rows;
  double predictor_accuracy = 0.0;
  double smoother_mae = 0.0;
  bool has_mae = false;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string();
}

RoutingReport run_loto_impl(const BenchmarkStore& store,
                            const ExperimentConfig& cfg, double alpha,
                            std::uint64_t run_seed,
                            const LotoSmoothers* smoothers,
                            const std::vector<std::string>& candidates) {
  if (store.label_mode() != LabelMode::binary) {
    throw ModeError("leave-one-task-out requires binary labels");
  }
  const auto& tasks = store.task_ids();
  if (tasks.size() < 2) throw DomainError("need at least 2 tasks");

  const std::vector<std::string> rows = active_rows(store, cfg);
  const bool need_s3 = std::count(rows.begin(), rows.end(), "s3") > 0;
  const bool need_ll = std::count(rows.begin(), rows.end(), "ll") > 0;

  LotoSmoothers local_smoothers;
  if (need_s3 && smoothers == nullptr) {
    local_smoothers = fit_loto_smoothers(store, cfg);
    smoothers = &local_smoothers;
  }

  // Full-task oracle scores, used for per-held-out-task m* and ranks.
  std::map<std::string, std::map<std::string, double>> task_oracle;
  std::map<std::string, double> oracle_sum;
  for (const auto& id : candidates) oracle_sum[id] = 0.0;
  for (const auto& task_id : tasks) {
    for (const auto& id : candidates) {
      const double s = oracle_score(store, id, store.task_samples(task_id));
      task_oracle[task_id][id] = s;
      oracle_sum[id] += s;
    }
  }

  std::vector<TaskResult> results(tasks.size());

  const auto run_task = [&](std::size_t t) {
    const std::string& task_id = tasks[t];
    TaskResult& res = results[t];

    auto [extras, eval] = build_mixed_reference(
        store, task_id, alpha, cfg.mix_cap, derive_seed(run_seed, t));
    if (eval.empty()) {
      res.skipped = true;
      return;
    }
    auto reference = store.dataset_complement(task_id);
    {
      std::vector<std::size_t> merged;
      merged.reserve(reference.size() + extras.size());
      std::merge(reference.begin(), reference.end(), extras.begin(),
                 extras.end(), std::back_inserter(merged));
      reference = std::move(merged);
    }

    const TaskEvalStats stats = evaluate_task_against_reference(
        store, eval, reference, cfg.predictor, cfg.distance, true);

    // True accuracy of every candidate on the eval remainder.
    std::map<std::string, double> acc;
    for (const auto& id : candidates) acc[id] = oracle_score(store, id, eval);
    const double best_acc =
        std::max_element(acc.begin(), acc.end(), [](auto& a, auto& b) {
          return a.second < b.second;
        })->second;

    // m*: best on average over the training tasks only.
    std::map<std::string, double> train_sums;
    for (const auto& id : candidates) {
      train_sums[id] = oracle_sum.at(id) - task_oracle.at(task_id).at(id);
    }
    const std::string m_star = argmax_model(store, train_sums);

    std::map<std::string, double> p_hat;
    if (need_s3) {
      const SmootherModel& smoother = smoothers->at(task_id);
      for (const auto& id : candidates) {
        p_hat[id] = predict_p(smoother, id, stats.u);
      }
    }
    const std::map<std::string, double> p_true =
        restrict_to(stats.accuracy, candidates);

    res.predictor_accuracy = 0.0;
    for (const auto& id : candidates) res.predictor_accuracy += p_true.at(id);
    res.predictor_accuracy /= static_cast<double>(candidates.size());
    if (need_s3) {
      res.has_mae = true;
      res.smoother_mae = 0.0;
      for (const auto& id : candidates) {
        res.smoother_mae += std::abs(p_hat.at(id) - p_true.at(id));
      }
      res.smoother_mae /= static_cast<double>(candidates.size());
    }

    std::map<std::string, double> ll_values;
    if (need_ll) {
      for (const auto& id : candidates) ll_values[id] = score_ll(store, id, eval);
    }

    const auto make_row = [&](const std::string& row,
                              const std::map<std::string, double>& values,
                              const std::string& chosen,
                              std::optional<double> win_prob) {
      TaskRow tr;
      tr.task_id = task_id;
      tr.row = row;
      tr.chosen_model = chosen;
      tr.accuracy = acc.at(chosen);
      tr.ratio_to_best = best_acc > 0.0 ? tr.accuracy / best_acc : 1.0;
      tr.u = stats.u;
      tr.params = store.model(chosen).n_params_b;
      tr.chose_bma = chosen == m_star;
      tr.win_probability = win_prob;
      std::size_t above = 0;
      for (const auto& id : candidates) {
        if (acc.at(id) > tr.accuracy) ++above;
      }
      tr.rank = static_cast<double>(above + 1);
      if (is_correlatable_row(row) && candidates.size() >= 2) {
        std::vector<double> xs, ys;
        for (const auto& id : candidates) {
          xs.push_back(values.at(id));
          ys.push_back(acc.at(id));
        }
        try {
          tr.pearson = pearson(xs, ys);
        } catch (const DomainError&) {
        }
        try {
          tr.spearman = spearman(xs, ys);
        } catch (const DomainError&) {
        }
      }
      res.rows.push_back(std::move(tr));
    };

    const auto gated_row = [&](const std::string& row, ScoreKind kind,
                               const std::map<std::string, double>& p_map) {
      std::map<std::string, double> s3_values;
      for (const auto& id : candidates) {
        s3_values[id] = score_s3(stats.gbar_mean.at(id), p_map.at(id));
      }
      ScoreVector sv{kind, task_id, s3_values};
      const std::string m3 = argmax_model(store, s3_values);
      std::map<std::string, CorrectnessDistribution> dists;
      const std::size_t n_eval = stats.n_eval;
      for (const std::string& id : {m3, m_star}) {
        if (dists.contains(id)) continue;
        const std::size_t n1 = stats.n1.at(id);
        dists.emplace(id,
                      correctness_distribution(n1, n_eval - n1, p_map.at(id)));
      }
      const SelectionOutcome sel =
          select_eta_gated(store, sv, m_star, dists, cfg.eta);
      make_row(row, s3_values, sel.chosen_model, sel.win_probability);
    };

    for (const std::string& row : rows) {
      if (row == "s1") {
        const auto values = restrict_to(stats.g_mean, candidates);
        make_row(row, values, argmax_model(store, values), std::nullopt);
      } else if (row == "s2") {
        const auto values = restrict_to(stats.gbar_mean, candidates);
        make_row(row, values, argmax_model(store, values), std::nullopt);
      } else if (row == "s3") {
        gated_row(row, ScoreKind::s3, p_hat);
      } else if (row == "s3_true_p") {
        gated_row(row, ScoreKind::s3_true_p, p_true);
      } else if (row == "ll") {
        make_row(row, ll_values, argmax_model(store, ll_values), std::nullopt);
      } else if (row == "bma") {
        make_row(row, {}, m_star, std::nullopt);
      } else if (row == "oracle") {
        make_row(row, acc, argmax_model(store, acc), std::nullopt);
      }
    }
  };

  std::size_t n_threads = cfg.threads > 0
                              ? cfg.threads
                              : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, tasks.size());
  if (n_threads <= 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < n_threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t t = next.fetch_add(1); t < tasks.size();
             t = next.fetch_add(1)) {
          run_task(t);
        }
      }));
    }
    for (auto& f : workers) f.get();
  }

  RoutingReport report;
  std::size_t n_tasks_done = 0;
  double pred_acc_sum = 0.0, mae_sum = 0.0;
  std::size_t mae_count = 0;
  for (const auto& res : results) {
    if (res.skipped) continue;
    ++n_tasks_done;
    pred_acc_sum += res.predictor_accuracy;
    if (res.has_mae) {
      mae_sum += res.smoother_mae;
      ++mae_count;
    }
    for (const auto& tr : res.rows) report.per_task.push_back(tr);
  }
  if (n_tasks_done == 0) throw DomainError("all tasks skipped in LOTO run");
  report.mean_predictor_accuracy =
      pred_acc_sum / static_cast<double>(n_tasks_done);
  report.smoother_mae =
      mae_count > 0 ? mae_sum / static_cast<double>(mae_count) : 0.0;

  for (const std::string& row : rows) {
    SummaryRow sr;
    sr.row = row;
    double acc = 0.0, ratio = 0.0, params = 0.0, rank = 0.0, bma = 0.0;
    double pe = 0.0, sp = 0.0;
    std::size_t n = 0, n_pe = 0, n_sp = 0;
    for (const auto& tr : report.per_task) {
      if (tr.row != row) continue;
      ++n;
      acc += tr.accuracy;
      ratio += tr.ratio_to_best;
      params += tr.params;
      rank += tr.rank;
      bma += tr.chose_bma ? 1.0 : 0.0;
      if (tr.pearson) {
        pe += *tr.pearson;
        ++n_pe;
      }
      if (tr.spearman) {
        sp += *tr.spearman;
        ++n_sp;
      }
    }
    const double dn = static_cast<double>(n);
    sr.accuracy = acc / dn;
    sr.ratio_to_best = ratio / dn;
    sr.mean_params = params / dn;
    sr.mean_rank = rank / dn;
    sr.pct_bma = bma / dn;
    if (n_pe > 0) sr.pearson = pe / static_cast<double>(n_pe);
    if (n_sp > 0) sr.spearman = sp / static_cast<double>(n_sp);
    report.summary.push_back(std::move(sr));
  }
  return report;
}

}  // namespace

LotoSmoothers fit_loto_smoothers(const BenchmarkStore& store,
                                 const ExperimentConfig& cfg) {
  LotoSmoothers out;
  const auto& tasks = store.task_ids();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    PairGenerationConfig pair_cfg;
    pair_cfg.predictor = cfg.predictor;
    pair_cfg.distance = cfg.distance;
    pair_cfg.alphas = cfg.pair_alphas;
    pair_cfg.repeats = cfg.pair_repeats;
    pair_cfg.mix_cap = cfg.mix_cap;
    pair_cfg.sigma = cfg.sigma;
    pair_cfg.threads = cfg.threads;
    pair_cfg.rng_seed = derive_seed(cfg.rng_seed, 0x510, t);
    pair_cfg.exclude_task = tasks[t];
    out.emplace(tasks[t], generate_pairs(store, pair_cfg));
  }
  return out;
}

RoutingReport leave_one_task_out(const BenchmarkStore& store,
                                 const ExperimentConfig& cfg, double alpha,
                                 std::uint64_t run_seed,
                                 const LotoSmoothers* smoothers) {
  return run_loto_impl(store, cfg, alpha, run_seed, smoothers,
                       candidate_models(store, cfg.max_params));
}

SweepResult ood_gap_sweep(const BenchmarkStore& store,
                          const ExperimentConfig& cfg) {
  if (cfg.repeats < 1) throw DomainError("repeats must be >= 1");
  const auto candidates = candidate_models(store, cfg.max_params);

  const std::vector<std::string> rows = active_rows(store, cfg);
  const bool need_s3 = std::count(rows.begin(), rows.end(), "s3") > 0;
  LotoSmoothers smoothers;
  if (need_s3) smoothers = fit_loto_smoothers(store, cfg);

  SweepResult sweep;
  for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
    std::map<std::string, std::vector<double>> acc_series;
    std::vector<double> pred_series, mae_series;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t run_seed = derive_seed(cfg.rng_seed, 0xa1, a, r);
      RoutingReport report =
          run_loto_impl(store, cfg, cfg.alphas[a], run_seed,
                        need_s3 ? &smoothers : nullptr, candidates);
      for (const auto& sr : report.summary) {
        acc_series[sr.row].push_back(sr.accuracy);
      }
      pred_series.push_back(report.mean_predictor_accuracy);
      mae_series.push_back(report.smoother_mae);
      sweep.runs.push_back({cfg.alphas[a], r, std::move(report)});
    }
    SweepCell cell;
    cell.alpha = cfg.alphas[a];
    for (const auto& [row, series] : acc_series) {
      cell.accuracy_mean[row] = mean(series);
      cell.accuracy_sd[row] = population_sd(series);
    }
    cell.predictor_accuracy_mean = mean(pred_series);
    cell.predictor_accuracy_sd = population_sd(pred_series);
    cell.smoother_mae_mean = mean(mae_series);
    cell.smoother_mae_sd = population_sd(mae_series);
    sweep.cells.push_back(std::move(cell));
  }
  return sweep;
}

SmallModelReport small_model_routing(const BenchmarkStore& store,
                                     const ExperimentConfig& cfg,
                                     const std::string& reference_model) {
  if (!store.has_model(reference_model)) {
    throw NotFoundError("unknown reference model: " + reference_model);
  }
  const auto candidates =
      candidate_models(store, cfg.max_params, reference_model);

  SmallModelReport out;
  out.reference_model = reference_model;
  out.routing = run_loto_impl(store, cfg, 0.0, cfg.rng_seed, nullptr, candidates);

  double sum = 0.0;
  for (const auto& task_id : store.task_ids()) {
    const double acc =
        oracle_score(store, reference_model, store.task_samples(task_id));
    out.reference_accuracy[task_id] = acc;
    sum += acc;
  }
  out.reference_mean = sum / static_cast<double>(store.task_ids().size());
  return out;
}

DistanceSubset subset_by_distance(const BenchmarkStore& store,
                                  std::span<const std::size_t> train,
                                  std::span<const std::size_t> test, double C,
                                  std::size_t nn_size) {
  if (!(C > 0.0)) throw DomainError("C must be > 0");
  if (nn_size < 1) throw DomainError("nn_size must be >= 1");
  if (train.empty()) throw EmptyStoreError("empty train set");
  DistanceSubset out;
  for (std::size_t idx : test) {
    const auto neighbors =
        store.knn_among(train, store.embedding(idx), nn_size);
    double sum = 0.0;
    for (const auto& n : neighbors) sum += n.distance;
    const double avg = sum / static_cast<double>(neighbors.size());
    if (avg < C) out.kept.push_back(idx);
  }
  out.retained_fraction =
      test.empty() ? 0.0
                   : static_cast<double>(out.kept.size()) /
                         static_cast<double>(test.size());
  return out;
}

CorrelationTable distance_correlation_table(const SweepResult& sweep) {
  CorrelationTable table;
  for (const auto& run : sweep.runs) {
    std::map<std::string, CorrelationRow> by_task;
    for (const auto& tr : run.report.per_task) {
      if (!is_correlatable_row(tr.row)) continue;
      auto& row = by_task[tr.task_id];
      row.task_id = tr.task_id;
      row.alpha = run.alpha;
      row.repeat = run.repeat;
      row.u = tr.u;
      if (tr.pearson) {
        row.pearson[tr.row] = *tr.pearson;
      } else {
        ++table.skipped;
      }
    }
    for (auto& [task_id, row] : by_task) {
      (void)task_id;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::string report_to_csv(const RoutingReport& report) {
  std::ostringstream out;
  out << "task_id,row,chosen_model,accuracy,ratio_to_best,pearson,spearman,"
         "rank,params,u,win_probability\n";
  for (const auto& tr : report.per_task) {
    out << tr.task_id << ',' << tr.row << ',' << tr.chosen_model << ','
        << fmt(tr.accuracy) << ',' << fmt(tr.ratio_to_best) << ','
        << fmt_opt(tr.pearson) << ',' << fmt_opt(tr.spearman) << ','
        << fmt(tr.rank) << ',' << fmt(tr.params) << ',' << fmt(tr.u) << ','
        << fmt_opt(tr.win_probability) << '\n';
  }
  return out.str();
}

std::string report_summary_json(const RoutingReport& report) {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& sr : report.summary) {
    nlohmann::ordered_json row;
    row["row"] = sr.row;
    row["accuracy"] = sr.accuracy;
    row["ratio_to_best"] = sr.ratio_to_best;
    if (sr.pearson) row["pearson"] = *sr.pearson;
    if (sr.spearman) row["spearman"] = *sr.spearman;
    row["pct_bma"] = sr.pct_bma;
    row["mean_params"] = sr.mean_params;
    row["mean_rank"] = sr.mean_rank;
    j["rows"].push_back(std::move(row));
  }
  j["mean_predictor_accuracy"] = report.mean_predictor_accuracy;
  j["smoother_mae"] = report.smoother_mae;
  return j.dump(2);
}

std::string sweep_to_csv(const SweepResult& sweep) {
  std::ostringstream out;
  out << "alpha,series,mean,sd\n";
  for (const auto& cell : sweep.cells) {
    for (const auto& [row, m] : cell.accuracy_mean) {
      out << fmt(cell.alpha) << ",accuracy_" << row << ',' << fmt(m) << ','
          << fmt(cell.accuracy_sd.at(row)) << '\n';
    }
    out << fmt(cell.alpha) << ",predictor_accuracy,"
        << fmt(cell.predictor_accuracy_mean) << ','
        << fmt(cell.predictor_accuracy_sd) << '\n';
    out << fmt(cell.alpha) << ",smoother_mae," << fmt(cell.smoother_mae_mean)
        << ',' << fmt(cell.smoother_mae_sd) << '\n';
  }
  return out.str();
}

std::string correlation_table_to_csv(const CorrelationTable& table) {
  // Collect the union of score rows for a stable header.
  std::vector<std::string> score_rows;
  for (const auto& row : table.rows) {
    for (const auto& [name, v] : row.pearson) {
      (void)v;
      if (std::find(score_rows.begin(), score_rows.end(), name) ==
          score_rows.end()) {
        score_rows.push_back(name);
      }
    }
  }
  std::sort(score_rows.begin(), score_rows.end());

  std::ostringstream out;
  out << "task_id,alpha,repeat,u";
  for (const auto& name : score_rows) out << ",pearson_" << name;
  out << '\n';
  for (const auto& row : table.rows) {
    out << row.task_id << ',' << fmt(row.alpha) << ',' << row.repeat << ','
        << fmt(row.u);
    for (const auto& name : score_rows) {
      auto it = row.pearson.find(name);
      out << ',' << (it != row.pearson.end() ? fmt(it->second) : std::string());
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace llmrouter
