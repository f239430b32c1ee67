#include "covshift/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "covshift/error.hpp"
#include "covshift/ratio.hpp"
#include "covshift/shift.hpp"

namespace covshift {

const std::array<std::string, kScenarios> kScenarioNames = {
    "unweighted", "true_weights", "estimated_weights", "selected_estimated"};

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(sq / static_cast<double>(v.size()));
  return m;
}

}  // namespace

std::vector<AnalyticRow> analytic_toy_curves(const std::vector<double>& lambdas,
                                             const std::vector<int>& dims) {
  std::vector<AnalyticRow> rows;
  rows.reserve(lambdas.size() * dims.size());
  for (double lambda : lambdas) {
    for (int d : dims) {
      if (d < 1) throw ValidationError("analytic_toy_curves: dims must be >= 1");
      AnalyticRow row;
      row.lambda = lambda;
      row.d = d;
      row.d2 = static_cast<double>(d) * lambda * lambda;
      row.ess_star = std::exp(-row.d2);
      rows.push_back(row);
    }
  }
  return rows;
}

ShiftPair gaussian_shift_pair(int d, double lambda, int n, Rng& rng) {
  if (d < 1 || n < 1) throw ValidationError("gaussian_shift_pair: need d >= 1, n >= 1");

  auto make = [&](double mean_shift) {
    Dataset ds;
    ds.features.resize(n, d);
    ds.labels = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) ds.features(i, j) = rng.normal() + mean_shift;
      (*ds.labels)[i] = 100.0 * ds.features(i, 0) + rng.normal();
    }
    ds.feature_names.reserve(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
    return ds;
  };

  ShiftPair pair;
  pair.train = make(0.0);
  pair.test = make(lambda);

  pair.true_train_weights.values.resize(n);
  const double offset = 0.5 * static_cast<double>(d) * lambda * lambda;
  for (int i = 0; i < n; ++i) {
    pair.true_train_weights.values[i] =
        std::exp(lambda * pair.train.features.row(i).sum() - offset);
  }
  return pair;
}

ToyReport run_toy(const ToyConfig& config) {
  if (config.n_per_set < 1 || config.replications < 1 || config.min_samples_leaf < 1) {
    throw ValidationError("run_toy: invalid config");
  }
  for (int d : config.dims) {
    if (d < 1) throw ValidationError("run_toy: dims must be >= 1");
  }
  for (double lambda : config.lambdas) {
    if (!std::isfinite(lambda)) throw ValidationError("run_toy: bad lambda");
  }

  const Rng root(config.seed);
  const int max_dim = *std::max_element(config.dims.begin(), config.dims.end());
  const std::size_t tasks =
      config.lambdas.size() * static_cast<std::size_t>(config.replications);
  // rmse[task][dim index]; one task draws a max_dim pair shared by every d
  // (common random numbers across the dim sequence, so the dimension effect
  // is not masked by independent sampling noise).
  std::vector<std::vector<double>> rmse(tasks);
  std::exception_ptr error;

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(tasks); ++t) {
    try {
      const double lambda =
          config.lambdas[static_cast<std::size_t>(t) / config.replications];
      Rng rng = root.child(static_cast<std::uint64_t>(t));
      const ShiftPair base =
          gaussian_shift_pair(max_dim, lambda, config.n_per_set, rng);
      const TreeConfig tree_config{config.min_samples_leaf, TreeTask::regression, {}};

      std::vector<double> per_dim;
      per_dim.reserve(config.dims.size());
      for (int d : config.dims) {
        const Eigen::MatrixXd train = base.train.features.leftCols(d);
        const Eigen::MatrixXd test = base.test.features.leftCols(d);
        WeightVector weights{Eigen::VectorXd(train.rows())};
        const double offset = 0.5 * static_cast<double>(d) * lambda * lambda;
        for (Eigen::Index i = 0; i < train.rows(); ++i) {
          weights.values[i] = std::exp(lambda * train.row(i).sum() - offset);
        }
        const DecisionTree tree =
            fit_tree(train, *base.train.labels, weights, tree_config);
        const double mse =
            evaluate(predict(tree, test), *base.test.labels, TreeTask::regression);
        per_dim.push_back(std::sqrt(mse));
      }
      rmse[static_cast<std::size_t>(t)] = std::move(per_dim);
    } catch (...) {
#pragma omp critical(covshift_toy_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  ToyReport report;
  report.config = config;
  for (std::size_t li = 0; li < config.lambdas.size(); ++li) {
    for (std::size_t di = 0; di < config.dims.size(); ++di) {
      std::vector<double> values;
      values.reserve(static_cast<std::size_t>(config.replications));
      for (int rep = 0; rep < config.replications; ++rep) {
        values.push_back(rmse[li * config.replications + rep][di]);
      }
      const MeanStd ms = mean_std(values);
      ToyRow row;
      row.lambda = config.lambdas[li];
      row.d = config.dims[di];
      row.mean_rmse = ms.mean;
      row.std_rmse = ms.std;
      report.rows.push_back(row);
    }
  }
  return report;
}

Dataset generate_friedman(int n, Rng& rng) {
  if (n < 1) throw ValidationError("generate_friedman: need n >= 1");
  Dataset ds;
  ds.features.resize(n, 10);
  ds.labels = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 10; ++j) ds.features(i, j) = rng.uniform();
    const auto row = ds.features.row(i);
    (*ds.labels)[i] = 10.0 * std::sin(M_PI * row[0] * row[1]) +
                      20.0 * (row[2] - 0.5) * (row[2] - 0.5) + 10.0 * row[3] +
                      5.0 * row[4] + rng.normal();
  }
  for (int j = 0; j < 10; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  return ds;
}

namespace {

struct SplitViews {
  Eigen::MatrixXd x_train, x_ratio, x_eval;
  Eigen::VectorXd y_train, y_eval;
};

SplitViews split_simulation(const Dataset& prep, const ShiftAssignment& shift,
                            double ratio_fraction, Rng& rng) {
  const Eigen::Index n = prep.rows();
  std::vector<Eigen::Index> train_rows, test_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    (shift.is_train[static_cast<std::size_t>(i)] ? train_rows : test_rows).push_back(i);
  }
  std::shuffle(test_rows.begin(), test_rows.end(), rng.engine());
  const std::size_t n_ratio =
      static_cast<std::size_t>(std::llround(ratio_fraction * double(test_rows.size())));

  SplitViews v;
  auto fill = [&](const std::vector<Eigen::Index>& rows, std::size_t lo, std::size_t hi,
                  Eigen::MatrixXd& X, Eigen::VectorXd* y) {
    X.resize(static_cast<Eigen::Index>(hi - lo), prep.cols());
    if (y) y->resize(static_cast<Eigen::Index>(hi - lo));
    for (std::size_t r = lo; r < hi; ++r) {
      X.row(static_cast<Eigen::Index>(r - lo)) = prep.features.row(rows[r]);
      if (y) (*y)[static_cast<Eigen::Index>(r - lo)] = (*prep.labels)[rows[r]];
    }
  };
  fill(train_rows, 0, train_rows.size(), v.x_train, &v.y_train);
  fill(test_rows, 0, n_ratio, v.x_ratio, nullptr);
  fill(test_rows, n_ratio, test_rows.size(), v.x_eval, &v.y_eval);
  return v;
}

SimulationRecord run_simulation(const Dataset& ds, const BenchConfig& config,
                                TreeTask task, int sim_index, const Rng& root) {
  SimulationRecord rec;
  rec.index = sim_index;
  Rng sim = root.child(static_cast<std::uint64_t>(sim_index));

  Dataset prep = ds;
  {
    Rng r = sim.child(0);
    prep = subsample(prep, static_cast<std::size_t>(config.max_rows), r);
  }
  {
    Rng r = sim.child(1);
    prep = augment_with_noise(prep, config.noise_target_width, r);
  }
  prep = standardize(prep).first;
  if (task == TreeTask::classification && !prep.class_labels) {
    prep = binarize_labels(prep);
  }

  ShiftAssignment shift;
  bool calibrated = false;
  for (int attempt = 0; attempt < config.direction_resamples && !calibrated; ++attempt) {
    Rng dir_rng = sim.child(100 + static_cast<std::uint64_t>(attempt));
    const Eigen::VectorXd direction =
        sample_direction(static_cast<int>(prep.cols()), dir_rng);
    Rng cal_rng = sim.child(200 + static_cast<std::uint64_t>(attempt));
    try {
      shift = calibrate_sigma(prep.features, direction, cal_rng,
                              CalibrationConfig{config.ess_target, 60, 10});
      calibrated = true;
    } catch (const CalibrationError&) {
    }
  }
  if (!calibrated) {
    rec.skipped = true;
    rec.skip_reason = "calibration failed after " +
                      std::to_string(config.direction_resamples) + " directions";
    return rec;
  }
  rec.sigma = shift.sigma;
  rec.shift_ess = empirical_ess(shift.true_weights_train);

  Rng split_rng = sim.child(2);
  const SplitViews v =
      split_simulation(prep, shift, config.ratio_train_fraction, split_rng);
  rec.train_rows = static_cast<int>(v.x_train.rows());
  rec.test_rows = static_cast<int>(v.x_ratio.rows() + v.x_eval.rows());
  rec.eval_rows = static_cast<int>(v.x_eval.rows());
  if (v.x_train.rows() < 20 || v.x_eval.rows() < 5) {
    rec.skipped = true;
    rec.skip_reason = "degenerate train/eval split";
    return rec;
  }

  auto scenario_error = [&](const Eigen::MatrixXd& Xtr, const Eigen::MatrixXd& Xev,
                            const WeightVector& w, std::uint64_t tag) {
    Rng tree_rng = sim.child(tag);
    const DecisionTree tree = tune_min_leaf(Xtr, v.y_train, w, task, tree_rng);
    return evaluate(predict(tree, Xev), v.y_eval, task);
  };

  // (i) all features, unit weights
  WeightVector unit{Eigen::VectorXd::Ones(v.x_train.rows())};
  rec.error[0] = scenario_error(v.x_train, v.x_eval, unit, 10);
  rec.ess[0] = 1.0;

  // (ii) all features, true weights
  rec.error[1] = scenario_error(v.x_train, v.x_eval, shift.true_weights_train, 11);
  rec.ess[1] = rec.shift_ess;

  // (iii) all features, estimated weights
  {
    Rng ratio_rng = sim.child(12);
    const RatioModel model =
        fit_density_ratio(v.x_train, v.x_ratio, ratio_rng, config.solver);
    const WeightVector w = predict_weights(model, v.x_train);
    rec.error[2] = scenario_error(v.x_train, v.x_eval, w, 13);
    rec.ess[2] = empirical_ess(w);
  }

  // (iv) selected features, estimated weights
  {
    Rng select_rng = sim.child(14);
    SelectionResult sel =
        forward_select(v.x_train, v.y_train, task, config.selection, select_rng);
    std::vector<int> cols = sel.selected;
    std::sort(cols.begin(), cols.end());
    rec.selected_features = static_cast<int>(cols.size());

    const Eigen::MatrixXd xtr = select_columns(v.x_train, cols);
    const Eigen::MatrixXd xratio = select_columns(v.x_ratio, cols);
    const Eigen::MatrixXd xev = select_columns(v.x_eval, cols);
    Rng ratio_rng = sim.child(15);
    const RatioModel model = fit_density_ratio(xtr, xratio, ratio_rng, config.solver);
    const WeightVector w = predict_weights(model, xtr);
    rec.error[3] = scenario_error(xtr, xev, w, 16);
    rec.ess[3] = empirical_ess(w);
  }

  if (!(rec.error[0] > 0.0)) {
    rec.skipped = true;
    rec.skip_reason = "baseline scenario has zero error";
    return rec;
  }
  for (int s = 0; s < kScenarios; ++s) rec.rel_error[s] = rec.error[s] / rec.error[0];
  return rec;
}

}  // namespace

BenchReport run_benchmark(const Dataset& ds, const BenchConfig& config, TreeTask task) {
  ds.validate();
  if (!ds.labels) throw ValidationError("run_benchmark: dataset must be labeled");
  if (config.simulations < 1) throw ValidationError("run_benchmark: simulations >= 1");
  if (!(config.ratio_train_fraction > 0.0 && config.ratio_train_fraction < 1.0)) {
    throw ValidationError("run_benchmark: ratio_train_fraction must be in (0, 1)");
  }
  if (config.noise_target_width < ds.cols()) {
    throw ValidationError("run_benchmark: noise_target_width below dataset width");
  }

  const Rng root(config.seed);
  BenchReport report;
  report.task = task;
  report.seed = config.seed;
  report.simulations.resize(static_cast<std::size_t>(config.simulations));

  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < config.simulations; ++s) {
    try {
      report.simulations[static_cast<std::size_t>(s)] =
          run_simulation(ds, config, task, s, root);
    } catch (...) {
#pragma omp critical(covshift_bench_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  std::array<std::vector<double>, kScenarios> rel;
  for (const SimulationRecord& rec : report.simulations) {
    if (rec.skipped) {
      ++report.skipped;
      continue;
    }
    ++report.completed;
    for (int s = 0; s < kScenarios; ++s) rel[static_cast<std::size_t>(s)].push_back(rec.rel_error[s]);
    if (rec.ess[3] >= rec.ess[2]) ++report.ess_majority_count;
  }
  for (int s = 0; s < kScenarios; ++s) {
    const MeanStd ms = mean_std(rel[static_cast<std::size_t>(s)]);
    report.aggregate[static_cast<std::size_t>(s)] = {ms.mean, ms.std};
  }
  return report;
}

Report ToyReport::report() const {
  Report out;
  Json& doc = out.document;
  doc["experiment"] = "toy";
  doc["config"] = {{"lambdas", config.lambdas},
                   {"dims", config.dims},
                   {"n_per_set", config.n_per_set},
                   {"replications", config.replications},
                   {"min_samples_leaf", config.min_samples_leaf},
                   {"seed", config.seed}};
  doc["rows"] = Json::array();
  out.table.columns = {"lambda", "d", "mean_rmse", "std_rmse"};
  for (const ToyRow& row : rows) {
    doc["rows"].push_back({{"lambda", row.lambda},
                           {"d", row.d},
                           {"mean_rmse", row.mean_rmse},
                           {"std_rmse", row.std_rmse}});
    out.table.rows.push_back(
        {row.lambda, static_cast<double>(row.d), row.mean_rmse, row.std_rmse});
  }
  return out;
}

Report BenchReport::report() const {
  Report out;
  Json& doc = out.document;
  doc["experiment"] = "bench";
  doc["task"] = task == TreeTask::regression ? "regression" : "classification";
  doc["seed"] = seed;
  doc["completed"] = completed;
  doc["skipped"] = skipped;
  doc["ess_majority_count"] = ess_majority_count;
  doc["aggregate"] = Json::object();
  for (int s = 0; s < kScenarios; ++s) {
    doc["aggregate"][kScenarioNames[static_cast<std::size_t>(s)]] = {
        {"mean_rel_error", aggregate[static_cast<std::size_t>(s)].mean_rel_error},
        {"std_rel_error", aggregate[static_cast<std::size_t>(s)].std_rel_error}};
  }
  doc["simulations"] = Json::array();
  out.table.columns = {"simulation", "scenario",  "raw_error", "rel_error",
                       "ess",        "n_features"};
  for (const SimulationRecord& rec : simulations) {
    Json sim = {{"index", rec.index}, {"skipped", rec.skipped}};
    if (rec.skipped) {
      sim["skip_reason"] = rec.skip_reason;
      doc["simulations"].push_back(sim);
      continue;
    }
    sim["sigma"] = rec.sigma;
    sim["shift_ess"] = rec.shift_ess;
    sim["train_rows"] = rec.train_rows;
    sim["test_rows"] = rec.test_rows;
    sim["eval_rows"] = rec.eval_rows;
    sim["selected_features"] = rec.selected_features;
    for (int s = 0; s < kScenarios; ++s) {
      const auto name = kScenarioNames[static_cast<std::size_t>(s)];
      sim[name] = {{"error", rec.error[static_cast<std::size_t>(s)]},
                   {"rel_error", rec.rel_error[static_cast<std::size_t>(s)]},
                   {"ess", rec.ess[static_cast<std::size_t>(s)]}};
      const double n_features =
          s == 3 ? rec.selected_features
                 : static_cast<double>(0);  // 0 marks "all features"
      out.table.rows.push_back({static_cast<double>(rec.index),
                                static_cast<double>(s + 1),
                                rec.error[static_cast<std::size_t>(s)],
                                rec.rel_error[static_cast<std::size_t>(s)],
                                rec.ess[static_cast<std::size_t>(s)], n_features});
    }
    doc["simulations"].push_back(sim);
  }
  return out;
}

}  // namespace covshift
