#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "covshift/dataset.hpp"
#include "covshift/divergence.hpp"
#include "covshift/error.hpp"
#include "covshift/experiments.hpp"
#include "covshift/json_io.hpp"
#include "covshift/parallel.hpp"
#include "covshift/ratio.hpp"
#include "covshift/report.hpp"
#include "covshift/shift.hpp"

namespace {

using namespace covshift;

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw ValidationError("empty numeric list: " + text);
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_double_list(text)) out.push_back(static_cast<int>(v));
  return out;
}

TreeTask parse_task(const std::string& name) {
  if (name == "regression") return TreeTask::regression;
  if (name == "classification") return TreeTask::classification;
  throw ValidationError("task must be 'regression' or 'classification'");
}

Eigen::VectorXd load_weight_column(const std::string& path, bool has_header) {
  const Dataset ds = load_csv(path, has_header);
  if (ds.cols() != 1) {
    throw IngestError("weights CSV must hold a single column: " + path);
  }
  return ds.features.col(0);
}

void write_weight_csv(const std::string& path, const Eigen::VectorXd& weights) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot open file for writing: " + path);
  out << "weight\n";
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    out << format_double(weights[i]) << '\n';
  }
  if (!out) throw IngestError("write failed: " + path);
}

void write_json(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot open file for writing: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw IngestError("write failed: " + path);
}

Dataset split_rows(const Dataset& ds, const std::vector<bool>& mask, bool keep) {
  Eigen::Index count = 0;
  for (bool b : mask) count += (b == keep) ? 1 : 0;
  Dataset out;
  out.features.resize(count, ds.cols());
  if (ds.labels) out.labels = Eigen::VectorXd(count);
  Eigen::Index t = 0;
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)] != keep) continue;
    out.features.row(t) = ds.features.row(i);
    if (ds.labels) (*out.labels)[t] = (*ds.labels)[i];
    ++t;
  }
  out.class_labels = ds.class_labels;
  out.feature_names = ds.feature_names;
  return out;
}

constexpr const char* kGridFootnote =
    "Paper-derived defaults: ESS target 0.01, 32-feature noise augmentation, "
    "15-feature selection cap, logistic C grid of 10 log-spaced values in "
    "[1e-4, 5], tree min-leaf grid {5,15,25,40,50}, GMM components 1..15.";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covshift: covariate-shift adaptation toolkit"};
  app.set_config("--config", "", "flat key=value config file (flags override values)");
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads for parallel sections (0 = hardware default)");
  app.require_subcommand(1);
  app.footer(kGridFootnote);

  std::function<void()> action;

  // ess
  {
    auto* cmd = app.add_subcommand("ess", "empirical effective sample size of a weight column");
    auto weights_path = std::make_shared<std::string>();
    auto has_header = std::make_shared<bool>(false);
    cmd->add_option("--weights", *weights_path, "CSV with a single weight column")
        ->required();
    cmd->add_flag("--has-header", *has_header, "first line is a header row");
    cmd->callback([&action, weights_path, has_header] {
      action = [weights_path, has_header] {
        const WeightVector w{load_weight_column(*weights_path, *has_header)};
        std::cout << format_double(empirical_ess(w)) << '\n';
      };
    });
  }

  // bound
  {
    auto* cmd = app.add_subcommand("bound", "generalization bound from ESS*, Pdim, n, delta");
    auto params = std::make_shared<BoundParams>();
    cmd->add_option("--ess-star", params->ess_star, "population ESS in (0,1]")->required();
    cmd->add_option("--pdim", params->pdim, "pseudo-dimension of the loss class")->required();
    cmd->add_option("--n", params->n, "training sample size")->required();
    cmd->add_option("--delta", params->delta, "confidence level in (0,1)")->required();
    cmd->callback([&action, params] {
      action = [params] { std::cout << format_double(generalization_bound(*params)) << '\n'; };
    });
  }

  // inject
  {
    auto* cmd = app.add_subcommand(
        "inject", "inject covariate shift: probit scores along a random direction, "
                  "sigma calibrated until the train-side true-weight ESS drops below the target");
    struct InjectArgs {
      std::string input, train_out = "train.csv", test_out = "test.csv",
                  summary_out = "inject.json";
      std::optional<std::string> label_column;
      bool has_header = false;
      std::uint64_t seed = 0;
      double ess_target = 0.01;
      int resamples = 20;
    };
    auto args = std::make_shared<InjectArgs>();
    cmd->add_option("--input", args->input, "input CSV")->required();
    cmd->add_flag("--has-header", args->has_header, "first line is a header row");
    std::string label;
    cmd->add_option_function<std::string>(
        "--label-column", [args](const std::string& v) { args->label_column = v; },
        "label column name or 0-based index (kept in the output splits)");
    cmd->add_option("--seed", args->seed, "random seed (required)")->required();
    cmd->add_option("--ess-target", args->ess_target, "calibration ESS target")
        ->capture_default_str();
    cmd->add_option("--direction-resamples", args->resamples,
                    "directions to try before giving up")
        ->capture_default_str();
    cmd->add_option("--train-out", args->train_out, "training split CSV path")
        ->capture_default_str();
    cmd->add_option("--test-out", args->test_out, "test split CSV path")
        ->capture_default_str();
    cmd->add_option("--summary-out", args->summary_out, "JSON record path")
        ->capture_default_str();
    cmd->callback([&action, args] {
      action = [args] {
        const Dataset ds = load_csv(args->input, args->has_header, args->label_column);
        const Rng root(args->seed);
        ShiftAssignment shift;
        bool calibrated = false;
        int attempt = 0;
        for (; attempt < args->resamples && !calibrated; ++attempt) {
          Rng dir_rng = root.child(100 + static_cast<std::uint64_t>(attempt));
          const Eigen::VectorXd direction =
              sample_direction(static_cast<int>(ds.cols()), dir_rng);
          Rng cal_rng = root.child(200 + static_cast<std::uint64_t>(attempt));
          try {
            shift = calibrate_sigma(ds.features, direction, cal_rng,
                                    CalibrationConfig{args->ess_target, 60, 10});
            calibrated = true;
          } catch (const CalibrationError&) {
          }
        }
        if (!calibrated) {
          throw CalibrationError("inject: calibration failed after " +
                                 std::to_string(args->resamples) + " directions");
        }
        save_csv(split_rows(ds, shift.is_train, true), args->train_out);
        save_csv(split_rows(ds, shift.is_train, false), args->test_out);

        Json summary;
        summary["seed"] = args->seed;
        summary["directions_tried"] = attempt;
        summary["direction"] = Json::array();
        for (Eigen::Index j = 0; j < shift.direction.size(); ++j) {
          summary["direction"].push_back(shift.direction[j]);
        }
        summary["sigma"] = shift.sigma;
        summary["achieved_ess"] = empirical_ess(shift.true_weights_train);
        summary["train_rows"] = shift.true_weights_train.values.size();
        summary["test_rows"] =
            ds.rows() - shift.true_weights_train.values.size();
        write_json(args->summary_out, summary);
      };
    });
  }

  // fit-ratio
  {
    auto* cmd = app.add_subcommand(
        "fit-ratio", "estimate density-ratio weights by probabilistic classification "
                     "(tuned L1 logistic on the quadratic expansion)");
    struct RatioArgs {
      std::string source, target, query, weights_out = "weights.csv",
                  summary_out = "ratio.json";
      bool has_header = false;
      std::uint64_t seed = 0;
    };
    auto args = std::make_shared<RatioArgs>();
    cmd->add_option("--source", args->source, "source (training) rows CSV")->required();
    cmd->add_option("--target", args->target, "target (test) rows CSV")->required();
    cmd->add_option("--query", args->query, "rows to weight (CSV)")->required();
    cmd->add_flag("--has-header", args->has_header, "first line is a header row");
    cmd->add_option("--seed", args->seed, "random seed (required)")->required();
    cmd->add_option("--weights-out", args->weights_out, "output weight CSV")
        ->capture_default_str();
    cmd->add_option("--summary-out", args->summary_out, "JSON summary path")
        ->capture_default_str();
    cmd->callback([&action, args] {
      action = [args] {
        const Dataset source = load_csv(args->source, args->has_header);
        const Dataset target = load_csv(args->target, args->has_header);
        const Dataset query = load_csv(args->query, args->has_header);
        Rng rng(args->seed);
        double holdout = 0.0;
        const RatioModel model =
            fit_density_ratio(source.features, target.features, rng, {}, &holdout);
        write_weight_csv(args->weights_out, predict_weights(model, query.features).values);

        Json summary;
        summary["seed"] = args->seed;
        summary["chosen_c"] = model.logistic.reg_c;
        summary["holdout_log_loss"] = holdout;
        summary["source_weight_ess"] =
            empirical_ess(predict_weights(model, source.features));
        summary["prior_ratio"] = model.prior_ratio;
        write_json(args->summary_out, summary);
      };
    });
  }

  // mi-select
  {
    auto* cmd = app.add_subcommand(
        "mi-select", "GMM mutual-information feature selection (greedy forward, "
                     "1% relative stopping rule)");
    struct SelectArgs {
      std::string input, label_column, task = "regression", method = "forward",
                  output;
      bool has_header = false;
      double threshold = 0.01;
      int max_features = 15;
      std::uint64_t seed = 0;
    };
    auto args = std::make_shared<SelectArgs>();
    cmd->add_option("--input", args->input, "labeled CSV")->required();
    cmd->add_option("--label-column", args->label_column, "label column name or index")
        ->required();
    cmd->add_flag("--has-header", args->has_header, "first line is a header row");
    cmd->add_option("--task", args->task, "regression | classification")
        ->capture_default_str();
    cmd->add_option("--method", args->method, "forward | backward")
        ->capture_default_str();
    cmd->add_option("--threshold", args->threshold,
                    "relative improvement stopping threshold")
        ->capture_default_str();
    cmd->add_option("--max-features", args->max_features, "selection cap")
        ->capture_default_str();
    cmd->add_option("--seed", args->seed, "random seed (required)")->required();
    cmd->add_option("--output", args->output, "JSON output path (stdout when absent)");
    cmd->callback([&action, args] {
      action = [args] {
        const Dataset ds = load_csv(args->input, args->has_header, args->label_column);
        if (!ds.labels) throw ValidationError("mi-select: input has no labels");
        const TreeTask task = parse_task(args->task);
        MiConfig config;
        config.improvement_threshold = args->threshold;
        config.max_features = args->max_features;
        Rng rng(args->seed);
        SelectionResult result;
        if (args->method == "forward") {
          result = forward_select(ds.features, *ds.labels, task, config, rng);
        } else if (args->method == "backward") {
          result = backward_eliminate(ds.features, *ds.labels, task, config, rng);
        } else {
          throw ValidationError("method must be 'forward' or 'backward'");
        }
        Json doc = selection_to_json(result);
        doc["seed"] = args->seed;
        if (!ds.feature_names.empty()) {
          Json names = Json::array();
          for (int f : result.selected) {
            names.push_back(ds.feature_names[static_cast<std::size_t>(f)]);
          }
          doc["selected_names"] = names;
        }
        if (args->output.empty()) {
          std::cout << doc.dump(2) << '\n';
        } else {
          write_json(args->output, doc);
        }
      };
    });
  }

  // toy
  {
    auto* cmd = app.add_subcommand(
        "toy", "analytic divergence/ESS curves plus the weighted-tree "
               "deterioration simulation");
    struct ToyArgs {
      std::string lambdas = "0.25", dims = "1,2,4,8,16", output = "toy_report.json",
                  csv;
      int n = 20000, reps = 10, min_leaf = 10;
      std::uint64_t seed = 0;
    };
    auto args = std::make_shared<ToyArgs>();
    cmd->add_option("--lambdas", args->lambdas, "comma-separated shift magnitudes")
        ->capture_default_str();
    cmd->add_option("--dims", args->dims, "comma-separated dimensions")
        ->capture_default_str();
    cmd->add_option("--n", args->n, "rows per training/test set")->capture_default_str();
    cmd->add_option("--reps", args->reps, "replications per (lambda, d)")
        ->capture_default_str();
    cmd->add_option("--min-leaf", args->min_leaf, "tree min samples per leaf")
        ->capture_default_str();
    cmd->add_option("--seed", args->seed, "random seed (required)")->required();
    cmd->add_option("--output", args->output, "JSON report path")->capture_default_str();
    cmd->add_option("--csv", args->csv, "also write the flat CSV table here");
    cmd->callback([&action, args] {
      action = [args] {
        ToyConfig config;
        config.lambdas = parse_double_list(args->lambdas);
        config.dims = parse_int_list(args->dims);
        config.n_per_set = args->n;
        config.replications = args->reps;
        config.min_samples_leaf = args->min_leaf;
        config.seed = args->seed;
        const ToyReport result = run_toy(config);
        Report report = result.report();

        // analytic curves ride along in the JSON document
        Json curves = Json::array();
        for (const AnalyticRow& row : analytic_toy_curves(config.lambdas, config.dims)) {
          curves.push_back({{"lambda", row.lambda},
                            {"d", row.d},
                            {"d2", row.d2},
                            {"ess_star", row.ess_star}});
        }
        report.document["analytic"] = curves;

        emit_report(report, args->output, ReportFormat::json);
        if (!args->csv.empty()) emit_report(report, args->csv, ReportFormat::csv);
      };
    });
  }

  // bench
  {
    auto* cmd = app.add_subcommand(
        "bench", "four-scenario shift-injection benchmark (unweighted / true / "
                 "estimated / selected+estimated weights)");
    struct BenchArgs {
      std::string input, label_column, task = "regression",
                  output = "bench_report.json", csv;
      bool has_header = false;
      int friedman = 0;
      BenchConfig config;
    };
    auto args = std::make_shared<BenchArgs>();
    cmd->add_option("--input", args->input, "labeled CSV (omit when using --friedman)");
    cmd->add_option("--label-column", args->label_column, "label column name or index");
    cmd->add_flag("--has-header", args->has_header, "first line is a header row");
    cmd->add_option("--friedman", args->friedman,
                    "generate a synthetic friedman regression dataset of this size");
    cmd->add_option("--task", args->task, "regression | classification")
        ->capture_default_str();
    cmd->add_option("--sims", args->config.simulations, "number of injected shifts")
        ->capture_default_str();
    cmd->add_option("--ess-target", args->config.ess_target, "calibration ESS target")
        ->capture_default_str();
    cmd->add_option("--noise-width", args->config.noise_target_width,
                    "noise-augmented feature count")
        ->capture_default_str();
    cmd->add_option("--max-rows", args->config.max_rows, "subsample cap per simulation")
        ->capture_default_str();
    cmd->add_option("--ratio-fraction", args->config.ratio_train_fraction,
                    "test-set share used to train the ratio model")
        ->capture_default_str();
    cmd->add_option("--threshold", args->config.selection.improvement_threshold,
                    "selection stopping threshold")
        ->capture_default_str();
    cmd->add_option("--max-features", args->config.selection.max_features,
                    "selection cap")
        ->capture_default_str();
    cmd->add_option("--gmm-components", args->config.selection.gmm.max_components,
                    "GMM component search upper bound")
        ->capture_default_str();
    cmd->add_option("--gmm-restarts", args->config.selection.gmm.fit.restarts,
                    "EM restarts per GMM fit")
        ->capture_default_str();
    cmd->add_option("--seed", args->config.seed, "random seed (required)")->required();
    cmd->add_option("--output", args->output, "JSON report path")->capture_default_str();
    cmd->add_option("--csv", args->csv, "also write the flat CSV table here");
    cmd->callback([&action, args] {
      action = [args] {
        Dataset ds;
        if (args->friedman > 0) {
          Rng data_rng(mix64(args->config.seed) ^ 0x5eedda7aULL);
          ds = generate_friedman(args->friedman, data_rng);
        } else if (!args->input.empty()) {
          if (args->label_column.empty()) {
            throw ValidationError("bench: --label-column is required with --input");
          }
          ds = load_csv(args->input, args->has_header, args->label_column);
        } else {
          throw ValidationError("bench: provide --input or --friedman");
        }
        const BenchReport result =
            run_benchmark(ds, args->config, parse_task(args->task));
        const Report report = result.report();
        emit_report(report, args->output, ReportFormat::json);
        if (!args->csv.empty()) emit_report(report, args->csv, ReportFormat::csv);
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    std::cerr << "run with --help for usage\n";
    return 1;
  }

  set_threads(threads);
  try {
    action();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
