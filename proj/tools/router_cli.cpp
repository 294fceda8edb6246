#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "llmrouter/errors.hpp"
#include "llmrouter/harness.hpp"
#include "llmrouter/ood.hpp"
#include "llmrouter/routing_api.hpp"
#include "llmrouter/scores.hpp"
#include "llmrouter/service.hpp"
#include "llmrouter/store.hpp"
#include "llmrouter/svg.hpp"
#include "llmrouter/synthetic.hpp"

namespace {

using namespace llmrouter;

struct StoreArgs {
  std::string samples;
  std::string models;
  bool binarize = false;
  std::vector<std::string> thresholds;  // task=eta
  double label_min = 0.0, label_max = 1.0;
  bool rescale = false;
  std::size_t dimension = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--samples", samples, "Samples JSONL file")
        ->required()
        ->envname("ROUTER_SAMPLES");
    cmd->add_option("--models", models, "Models JSONL file")
        ->required()
        ->envname("ROUTER_MODELS");
    cmd->add_flag("--binarize", binarize,
                  "Threshold raw metrics into binary labels");
    cmd->add_option("--threshold", thresholds,
                    "Per-task threshold, task_id=eta (repeatable)");
    cmd->add_flag("--rescale", rescale,
                  "Rescale continuous labels with --label-min/--label-max");
    cmd->add_option("--label-min", label_min, "Continuous label minimum");
    cmd->add_option("--label-max", label_max, "Continuous label maximum");
    cmd->add_option("--dimension", dimension, "Declared embedding dimension");
  }

  BenchmarkStore load() const {
    IngestOptions opts;
    opts.binarize = binarize;
    for (const auto& spec : thresholds) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos) {
        throw DomainError("--threshold expects task_id=value: " + spec);
      }
      opts.thresholds[spec.substr(0, eq)] = std::stod(spec.substr(eq + 1));
    }
    if (rescale) {
      opts.label_min = label_min;
      opts.label_max = label_max;
    }
    if (dimension > 0) opts.dimension = dimension;
    return BenchmarkStore::load(samples, models, opts);
  }
};

struct ExperimentArgs {
  std::size_t k = 5;
  double threshold = 0.5;
  std::size_t kappa = 19;
  double sigma = 0.09;
  double eta = 0.6;
  std::uint64_t seed = 0;
  std::size_t cap = 50;
  double max_params = 0.0;
  std::vector<double> pair_alphas;
  std::size_t pair_repeats = 2;
  std::vector<std::string> scores;

  void attach(CLI::App* cmd) {
    cmd->add_option("--k", k, "kNN neighbor count");
    cmd->add_option("--t,--pred-threshold", threshold,
                    "Correctness prediction threshold t");
    cmd->add_option("--kappa", kappa, "Dataset-distance neighbor count");
    cmd->add_option("--sigma", sigma, "Kernel smoother bandwidth");
    cmd->add_option("--eta", eta, "Selection gate threshold");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--cap", cap, "Mixing sample cap");
    cmd->add_option("--max-params", max_params,
                    "Candidate filter: max parameter count, billions");
    cmd->add_option("--pair-alphas", pair_alphas,
                    "Alpha grid for smoother replay");
    cmd->add_option("--pair-repeats", pair_repeats,
                    "Repeats for smoother replay");
    cmd->add_option("--scores", scores, "Score rows to evaluate");
  }

  ExperimentConfig to_config() const {
    ExperimentConfig cfg;
    cfg.predictor.k = k;
    cfg.predictor.threshold = threshold;
    cfg.distance.kappa = kappa;
    cfg.sigma = sigma;
    cfg.eta = eta;
    cfg.rng_seed = seed;
    cfg.mix_cap = cap;
    if (max_params > 0.0) cfg.max_params = max_params;
    if (!pair_alphas.empty()) cfg.pair_alphas = pair_alphas;
    cfg.pair_repeats = pair_repeats;
    for (const auto& s : scores) cfg.score_kinds.push_back(score_kind_from_string(s));
    return cfg;
  }
};

void write_text(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

int run(int argc, char** argv) {
  CLI::App app{"LLM routing from benchmark evaluation dumps"};
  app.require_subcommand(1);
  app.set_config("--config");

  // ingest / validate
  StoreArgs ingest_store, validate_store;
  std::string ingest_out_samples, ingest_out_models;
  auto* ingest = app.add_subcommand("ingest", "Load, validate, and canonicalize a dump");
  ingest_store.attach(ingest);
  ingest->add_option("--out-samples", ingest_out_samples)->required();
  ingest->add_option("--out-models", ingest_out_models)->required();

  auto* validate = app.add_subcommand("validate", "Validate a dump and print a summary");
  validate_store.attach(validate);

  // pairs
  StoreArgs pairs_store;
  ExperimentArgs pairs_exp;
  std::string pairs_out;
  std::size_t pairs_repeats = 10;
  std::vector<double> pairs_alphas;
  auto* pairs = app.add_subcommand("pairs", "Generate distance-accuracy replay pairs");
  pairs_store.attach(pairs);
  pairs_exp.attach(pairs);
  pairs->add_option("--out", pairs_out, "Output CSV")->required();
  pairs->add_option("--alphas", pairs_alphas, "Mixing alpha grid");
  pairs->add_option("--repeats", pairs_repeats, "Repeats per (task, alpha)");

  // route
  StoreArgs route_store;
  ExperimentArgs route_exp;
  std::string route_request_path, route_pairs_path, route_score;
  auto* route = app.add_subcommand("route", "Route a new task given its embedded inputs");
  route_store.attach(route);
  route_exp.attach(route);
  route->add_option("--request", route_request_path, "RouteRequest JSON file")
      ->required();
  route->add_option("--pairs", route_pairs_path,
                    "Replay pairs CSV (enables score s3)");
  route->add_option("--score", route_score, "Default score kind");

  // evaluate
  StoreArgs eval_store;
  ExperimentArgs eval_exp;
  std::string eval_out_csv, eval_out_json;
  auto* evaluate = app.add_subcommand("evaluate", "Leave-one-task-out routing report");
  eval_store.attach(evaluate);
  eval_exp.attach(evaluate);
  evaluate->add_option("--out-csv", eval_out_csv, "Per-task CSV ('-' = stdout)");
  evaluate->add_option("--out-json", eval_out_json, "Summary JSON ('-' = stdout)");

  // sweep
  StoreArgs sweep_store;
  ExperimentArgs sweep_exp;
  std::string sweep_mode = "ood", sweep_out, sweep_svg, sweep_reference;
  std::vector<double> sweep_alphas{0.0, 0.05, 0.1, 0.15, 0.2};
  std::size_t sweep_repeats = 3, sweep_nn = 5;
  std::vector<std::string> sweep_test_tasks;
  std::vector<double> sweep_C;
  auto* sweep = app.add_subcommand("sweep", "Protocol sweeps and analyses");
  sweep_store.attach(sweep);
  sweep_exp.attach(sweep);
  sweep->add_option("--mode", sweep_mode, "ood | small | subset | corr")
      ->check(CLI::IsMember({"ood", "small", "subset", "corr"}));
  sweep->add_option("--alphas", sweep_alphas, "Mixing alpha grid");
  sweep->add_option("--repeats", sweep_repeats, "Repeats per alpha");
  sweep->add_option("--out", sweep_out, "Output CSV ('-' = stdout)");
  sweep->add_option("--svg", sweep_svg, "Optional SVG figure output");
  sweep->add_option("--reference", sweep_reference,
                    "Reference model for --mode small");
  sweep->add_option("--test-task", sweep_test_tasks,
                    "Held-out test task(s) for --mode subset");
  sweep->add_option("--C", sweep_C, "Distance thresholds for --mode subset");
  sweep->add_option("--nn", sweep_nn, "Train-neighbor count for --mode subset");

  // synth
  SyntheticSpec synth_spec;
  std::string synth_samples, synth_models, synth_truth;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark store");
  synth->add_option("--out-samples", synth_samples)->required();
  synth->add_option("--out-models", synth_models)->required();
  synth->add_option("--out-truth", synth_truth, "Planted accuracy sidecar JSON");
  synth->add_option("--tasks", synth_spec.n_tasks);
  synth->add_option("--samples-per-task", synth_spec.samples_per_task);
  synth->add_option("--dim", synth_spec.dimension);
  synth->add_option("--n-models", synth_spec.n_models);
  synth->add_option("--spread", synth_spec.cluster_spread);
  synth->add_option("--regions", synth_spec.regions_per_model);
  synth->add_option("--radius", synth_spec.region_radius);
  synth->add_option("--p-inside", synth_spec.prob_inside);
  synth->add_option("--p-outside", synth_spec.prob_outside);
  synth->add_option("--noise", synth_spec.label_noise);
  synth->add_flag("--with-ll", synth_spec.with_ll);
  synth->add_option("--seed", synth_spec.rng_seed);

  // serve
  StoreArgs serve_store;
  ExperimentArgs serve_exp;
  std::string serve_host = "127.0.0.1", serve_pairs, serve_score;
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "Start the HTTP routing service");
  serve_store.attach(serve);
  serve_exp.attach(serve);
  serve->add_option("--host", serve_host)->envname("ROUTER_HOST");
  serve->add_option("--port", serve_port)->envname("ROUTER_PORT");
  serve->add_option("--pairs", serve_pairs, "Replay pairs CSV (enables s3)");
  serve->add_option("--score", serve_score, "Default score kind");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*ingest) {
    const BenchmarkStore store = ingest_store.load();
    store.save(ingest_out_samples, ingest_out_models);
    std::cout << "ingested D=" << store.task_ids().size()
              << " M=" << store.models().size() << " n=" << store.size()
              << '\n';
    return 0;
  }

  if (*validate) {
    const BenchmarkStore store = validate_store.load();
    std::cout << "valid D=" << store.task_ids().size()
              << " M=" << store.models().size() << " n=" << store.size()
              << " dim=" << store.dimension() << " mode="
              << (store.label_mode() == LabelMode::binary ? "binary"
                                                          : "continuous")
              << '\n';
    return 0;
  }

  if (*pairs) {
    const BenchmarkStore store = pairs_store.load();
    PairGenerationConfig cfg;
    cfg.predictor.k = pairs_exp.k;
    cfg.predictor.threshold = pairs_exp.threshold;
    cfg.distance.kappa = pairs_exp.kappa;
    cfg.alphas = pairs_alphas;
    cfg.repeats = pairs_repeats;
    cfg.mix_cap = pairs_exp.cap;
    cfg.rng_seed = pairs_exp.seed;
    cfg.sigma = pairs_exp.sigma;
    const SmootherModel model = generate_pairs(store, cfg);
    save_pairs_csv(model, pairs_out);
    std::size_t total = 0;
    for (const auto& [id, list] : model.pairs) {
      (void)id;
      total += list.size();
    }
    std::cout << "pairs " << total << " skipped " << model.skipped << '\n';
    return 0;
  }

  if (*route) {
    const BenchmarkStore store = route_store.load();
    SmootherModel smoother;
    RouteContext ctx;
    ctx.store = &store;
    ctx.predictor.k = route_exp.k;
    ctx.predictor.threshold = route_exp.threshold;
    ctx.distance.kappa = route_exp.kappa;
    ctx.eta = route_exp.eta;
    if (!route_pairs_path.empty()) {
      smoother = load_pairs_csv(route_pairs_path, route_exp.sigma);
      ctx.smoother = &smoother;
      ctx.default_score = ScoreKind::s3;
    }
    if (!route_score.empty()) {
      ctx.default_score = score_kind_from_string(route_score);
    }
    std::ifstream in(route_request_path);
    if (!in) throw IoError("cannot open request file: " + route_request_path);
    nlohmann::json request = nlohmann::json::parse(in);
    std::cout << handle_route_request(ctx, request).dump() << '\n';
    return 0;
  }

  if (*evaluate) {
    const BenchmarkStore store = eval_store.load();
    const ExperimentConfig cfg = eval_exp.to_config();
    const RoutingReport report = leave_one_task_out(store, cfg);
    if (!eval_out_csv.empty()) write_text(eval_out_csv, report_to_csv(report));
    if (!eval_out_json.empty() || eval_out_csv.empty()) {
      write_text(eval_out_json, report_summary_json(report) + "\n");
    }
    return 0;
  }

  if (*sweep) {
    const BenchmarkStore store = sweep_store.load();
    ExperimentConfig cfg = sweep_exp.to_config();
    cfg.alphas = sweep_alphas;
    cfg.repeats = sweep_repeats;

    if (sweep_mode == "ood" || sweep_mode == "corr") {
      const SweepResult result = ood_gap_sweep(store, cfg);
      if (sweep_mode == "ood") {
        write_text(sweep_out, sweep_to_csv(result));
        if (!sweep_svg.empty()) {
          std::map<std::string, SvgSeries> series;
          for (const auto& cell : result.cells) {
            for (const auto& [row, m] : cell.accuracy_mean) {
              auto& s = series[row];
              s.label = row;
              s.xs.push_back(cell.alpha);
              s.ys.push_back(m);
            }
          }
          std::vector<SvgSeries> list;
          for (auto& [row, s] : series) {
            (void)row;
            list.push_back(std::move(s));
          }
          write_svg(sweep_svg, list, "alpha", "selected-model accuracy");
        }
      } else {
        const CorrelationTable table = distance_correlation_table(result);
        write_text(sweep_out, correlation_table_to_csv(table));
        if (!sweep_svg.empty()) {
          SvgSeries s;
          s.label = "pearson_s3";
          s.line = false;
          for (const auto& row : table.rows) {
            auto it = row.pearson.find("s3");
            if (it == row.pearson.end()) continue;
            s.xs.push_back(row.u);
            s.ys.push_back(it->second);
          }
          write_svg(sweep_svg, {s}, "u(d')", "Pearson(S3, accuracy)");
        }
      }
      return 0;
    }

    if (sweep_mode == "small") {
      if (sweep_reference.empty()) {
        throw DomainError("--mode small requires --reference");
      }
      const SmallModelReport report =
          small_model_routing(store, cfg, sweep_reference);
      std::ostringstream out;
      out << "task_id,row,chosen_model,accuracy,reference_accuracy\n";
      for (const auto& tr : report.routing.per_task) {
        out << tr.task_id << ',' << tr.row << ',' << tr.chosen_model << ','
            << tr.accuracy << ',' << report.reference_accuracy.at(tr.task_id)
            << '\n';
      }
      write_text(sweep_out, out.str());
      return 0;
    }

    // subset mode
    if (sweep_test_tasks.empty()) {
      throw DomainError("--mode subset requires --test-task");
    }
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < store.size(); ++i) {
      const auto& task = store.sample(i).task_id;
      const bool is_test = std::find(sweep_test_tasks.begin(),
                                     sweep_test_tasks.end(),
                                     task) != sweep_test_tasks.end();
      (is_test ? test : train).push_back(i);
    }
    if (test.empty()) throw DomainError("no samples in the requested test tasks");
    if (sweep_C.empty()) sweep_C = {0.1, 0.2, 0.3, 0.5, 1.0, 2.0};

    const auto quality = [&](const std::vector<std::size_t>& points) {
      double sum = 0.0;
      for (std::size_t idx : points) {
        const auto [chosen, g] = route_per_instance(
            store, store.embedding(idx), train, cfg.predictor);
        (void)g;
        sum += store.sample(idx).labels.at(chosen);
      }
      return points.empty() ? 0.0 : sum / static_cast<double>(points.size());
    };
    const double full_quality = quality(test);

    std::ostringstream out;
    out << "C,retained_fraction,quality_subset,quality_full\n";
    for (double C : sweep_C) {
      const DistanceSubset subset =
          subset_by_distance(store, train, test, C, sweep_nn);
      out << C << ',' << subset.retained_fraction << ','
          << (subset.kept.empty() ? 0.0 : quality(subset.kept)) << ','
          << full_quality << '\n';
    }
    write_text(sweep_out, out.str());
    return 0;
  }

  if (*synth) {
    const SyntheticResult result = generate_synthetic(synth_spec);
    result.store.save(synth_samples, synth_models);
    if (!synth_truth.empty()) {
      save_ground_truth(result.planted_accuracy, synth_truth);
    }
    std::cout << "synthetic D=" << result.store.task_ids().size()
              << " M=" << result.store.models().size()
              << " n=" << result.store.size() << '\n';
    return 0;
  }

  if (*serve) {
    const BenchmarkStore store = serve_store.load();
    SmootherModel smoother;
    RouteContext ctx;
    ctx.store = &store;
    ctx.predictor.k = serve_exp.k;
    ctx.predictor.threshold = serve_exp.threshold;
    ctx.distance.kappa = serve_exp.kappa;
    ctx.eta = serve_exp.eta;
    if (!serve_pairs.empty()) {
      smoother = load_pairs_csv(serve_pairs, serve_exp.sigma);
      ctx.smoother = &smoother;
      ctx.default_score = ScoreKind::s3;
    }
    if (!serve_score.empty()) {
      ctx.default_score = score_kind_from_string(serve_score);
    }
    RoutingService service(std::move(ctx));
    std::cerr << "listening on " << serve_host << ':' << serve_port << '\n';
    service.listen(serve_host, serve_port);
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const llmrouter::RouterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
