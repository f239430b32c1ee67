#include "covshift/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "covshift/error.hpp"

namespace covshift {
namespace {

struct SplitChoice {
  bool found = false;
  double decrease = 0.0;
  double threshold = 0.0;
};

struct SortedRow {
  double v, w, y;
  Eigen::Index idx;
};

// Weighted SSE of one side given its sums.
inline double side_sse(double sw, double swy, double swyy) {
  return sw > 0.0 ? std::max(0.0, swyy - swy * swy / sw) : 0.0;
}

// Weighted Gini measure of one side: W - sum_c Wc^2 / W.
inline double side_gini(double sw, const double* wc, int num_classes) {
  if (sw <= 0.0) return 0.0;
  double sq = 0.0;
  for (int c = 0; c < num_classes; ++c) sq += wc[c] * wc[c];
  return std::max(0.0, sw - sq / sw);
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
              const Eigen::VectorXd& w, const TreeConfig& config, int num_classes)
      : X_(X), y_(y), w_(w), config_(config), num_classes_(num_classes) {
    order_.resize(static_cast<std::size_t>(X.rows()));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  }

  DecisionTree build() {
    DecisionTree tree;
    tree.task = config_.task;
    tree.num_classes = num_classes_;
    build_node(tree, 0, static_cast<Eigen::Index>(order_.size()), 0);
    return tree;
  }

 private:
  void node_stats(Eigen::Index lo, Eigen::Index hi, double& weight, double& impurity,
                  Eigen::VectorXd& value) const {
    const Eigen::Index count = hi - lo;
    if (config_.task == TreeTask::regression) {
      double sw = 0.0, swy = 0.0, swyy = 0.0, sy = 0.0;
      for (Eigen::Index t = lo; t < hi; ++t) {
        const Eigen::Index i = order_[static_cast<std::size_t>(t)];
        sw += w_[i];
        swy += w_[i] * y_[i];
        swyy += w_[i] * y_[i] * y_[i];
        sy += y_[i];
      }
      weight = sw;
      impurity = side_sse(sw, swy, swyy);
      value = Eigen::VectorXd::Constant(
          1, sw > 0.0 ? swy / sw : sy / static_cast<double>(count));
    } else {
      Eigen::VectorXd wc = Eigen::VectorXd::Zero(num_classes_);
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_classes_);
      double sw = 0.0;
      for (Eigen::Index t = lo; t < hi; ++t) {
        const Eigen::Index i = order_[static_cast<std::size_t>(t)];
        const int c = static_cast<int>(y_[i]);
        wc[c] += w_[i];
        counts[c] += 1.0;
        sw += w_[i];
      }
      weight = sw;
      impurity = side_gini(sw, wc.data(), num_classes_);
      value = sw > 0.0 ? (wc / sw).eval() : (counts / static_cast<double>(count)).eval();
    }
  }

  void gather_sorted(Eigen::Index lo, Eigen::Index hi, int feature,
                     std::vector<SortedRow>& rows) const {
    rows.resize(static_cast<std::size_t>(hi - lo));
    for (Eigen::Index t = lo; t < hi; ++t) {
      const Eigen::Index i = order_[static_cast<std::size_t>(t)];
      rows[static_cast<std::size_t>(t - lo)] = {X_(i, feature), w_[i], y_[i], i};
    }
    std::sort(rows.begin(), rows.end(), [](const SortedRow& a, const SortedRow& b) {
      return a.v < b.v || (a.v == b.v && a.idx < b.idx);
    });
  }

  // Thresholds scanned in ascending order, strict improvement only, so a
  // tied decrease keeps the lowest threshold.
  SplitChoice best_split_regression(const std::vector<SortedRow>& rows,
                                    double node_impurity) const {
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    double tw = 0.0, twy = 0.0, twyy = 0.0;
    for (const SortedRow& r : rows) {
      tw += r.w;
      twy += r.w * r.y;
      twyy += r.w * r.y * r.y;
    }
    SplitChoice best;
    const int min_leaf = config_.min_samples_leaf;
    double lw = 0.0, lwy = 0.0, lwyy = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const SortedRow& r = rows[static_cast<std::size_t>(i)];
      lw += r.w;
      lwy += r.w * r.y;
      lwyy += r.w * r.y * r.y;
      if (r.v == rows[static_cast<std::size_t>(i + 1)].v) continue;
      const Eigen::Index left_n = i + 1;
      if (left_n < min_leaf || n - left_n < min_leaf) continue;
      const double decrease = node_impurity - side_sse(lw, lwy, lwyy) -
                              side_sse(tw - lw, twy - lwy, twyy - lwyy);
      if (!best.found || decrease > best.decrease) {
        best.found = true;
        best.decrease = decrease;
        best.threshold = 0.5 * (r.v + rows[static_cast<std::size_t>(i + 1)].v);
      }
    }
    return best;
  }

  SplitChoice best_split_classification(const std::vector<SortedRow>& rows,
                                        double node_impurity) const {
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    std::vector<double> total_c(static_cast<std::size_t>(num_classes_), 0.0);
    double tw = 0.0;
    for (const SortedRow& r : rows) {
      total_c[static_cast<std::size_t>(static_cast<int>(r.y))] += r.w;
      tw += r.w;
    }
    SplitChoice best;
    const int min_leaf = config_.min_samples_leaf;
    std::vector<double> left_c(static_cast<std::size_t>(num_classes_), 0.0);
    std::vector<double> right_c(static_cast<std::size_t>(num_classes_), 0.0);
    double lw = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const SortedRow& r = rows[static_cast<std::size_t>(i)];
      left_c[static_cast<std::size_t>(static_cast<int>(r.y))] += r.w;
      lw += r.w;
      if (r.v == rows[static_cast<std::size_t>(i + 1)].v) continue;
      const Eigen::Index left_n = i + 1;
      if (left_n < min_leaf || n - left_n < min_leaf) continue;
      for (int c = 0; c < num_classes_; ++c) {
        right_c[static_cast<std::size_t>(c)] = total_c[static_cast<std::size_t>(c)] -
                                               left_c[static_cast<std::size_t>(c)];
      }
      const double decrease = node_impurity -
                              side_gini(lw, left_c.data(), num_classes_) -
                              side_gini(tw - lw, right_c.data(), num_classes_);
      if (!best.found || decrease > best.decrease) {
        best.found = true;
        best.decrease = decrease;
        best.threshold = 0.5 * (r.v + rows[static_cast<std::size_t>(i + 1)].v);
      }
    }
    return best;
  }

  int build_node(DecisionTree& tree, Eigen::Index lo, Eigen::Index hi, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    {
      TreeNode& node = tree.nodes.back();
      node.row_count = static_cast<int>(hi - lo);
      double weight = 0.0, impurity = 0.0;
      node_stats(lo, hi, weight, impurity, node.value);
      node.weighted_count = weight;

      const bool depth_capped = config_.max_depth && depth >= *config_.max_depth;
      if (hi - lo < 2 * config_.min_samples_leaf || impurity <= 0.0 || depth_capped) {
        return node_id;
      }

      const int d = static_cast<int>(X_.cols());
      std::vector<SplitChoice> per_feature(static_cast<std::size_t>(d));
#pragma omp parallel for schedule(dynamic) if (d > 1 && (hi - lo) > 2048)
      for (int f = 0; f < d; ++f) {
        std::vector<SortedRow> rows;
        gather_sorted(lo, hi, f, rows);
        per_feature[static_cast<std::size_t>(f)] =
            config_.task == TreeTask::regression
                ? best_split_regression(rows, impurity)
                : best_split_classification(rows, impurity);
      }

      int best_f = -1;
      SplitChoice best;
      for (int f = 0; f < d; ++f) {  // ascending scan: ties keep lowest feature
        const SplitChoice& c = per_feature[static_cast<std::size_t>(f)];
        if (c.found && (best_f < 0 || c.decrease > best.decrease)) {
          best_f = f;
          best = c;
        }
      }
      if (best_f < 0 || best.decrease <= 0.0) return node_id;

      node.feature = best_f;
      node.threshold = best.threshold;
    }

    const int feature = tree.nodes[static_cast<std::size_t>(node_id)].feature;
    const double threshold = tree.nodes[static_cast<std::size_t>(node_id)].threshold;
    auto mid_it = std::stable_partition(
        order_.begin() + lo, order_.begin() + hi,
        [&](Eigen::Index i) { return X_(i, feature) <= threshold; });
    const Eigen::Index mid = mid_it - order_.begin();

    const int left_id = build_node(tree, lo, mid, depth + 1);
    const int right_id = build_node(tree, mid, hi, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
    tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  const Eigen::VectorXd& w_;
  const TreeConfig& config_;
  int num_classes_;
  std::vector<Eigen::Index> order_;
};

}  // namespace

DecisionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const WeightVector& w, const TreeConfig& config) {
  if (X.rows() != y.size() || X.rows() != w.values.size()) {
    throw ValidationError("fit_tree: length mismatch");
  }
  if (X.rows() < 1) throw ValidationError("fit_tree: empty input");
  if (!X.allFinite()) throw ValidationError("fit_tree: non-finite feature");
  if (config.min_samples_leaf < 1) {
    throw ValidationError("fit_tree: min_samples_leaf must be >= 1");
  }
  w.validate();

  int num_classes = 0;
  if (config.task == TreeTask::classification) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y[i] < 0.0 || y[i] != std::floor(y[i])) {
        throw ValidationError("fit_tree: classification labels must be ids 0..C-1");
      }
      num_classes = std::max(num_classes, static_cast<int>(y[i]) + 1);
    }
  }

  TreeBuilder builder(X, y, w.values, config, num_classes);
  return builder.build();
}

Eigen::VectorXd predict(const DecisionTree& tree, const Eigen::MatrixXd& X) {
  int max_feature = -1;
  for (const TreeNode& node : tree.nodes) {
    max_feature = std::max(max_feature, node.feature);
  }
  if (X.cols() <= max_feature) throw ValidationError("predict: feature width too small");

  Eigen::VectorXd out(X.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int node = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
      const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
      node = X(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    const Eigen::VectorXd& value = tree.nodes[static_cast<std::size_t>(node)].value;
    if (tree.task == TreeTask::regression) {
      out[i] = value[0];
    } else {
      Eigen::Index arg = 0;
      value.maxCoeff(&arg);  // first maximum: lowest class id wins ties
      out[i] = static_cast<double>(arg);
    }
  }
  return out;
}

double evaluate(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y,
                TreeTask task, const WeightVector* w) {
  if (predictions.size() != y.size()) throw ValidationError("evaluate: length mismatch");
  if (w) {
    w->validate();
    if (w->values.size() != y.size()) throw ValidationError("evaluate: weight length mismatch");
  }
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double wi = w ? w->values[i] : 1.0;
    const double err = task == TreeTask::regression
                           ? (predictions[i] - y[i]) * (predictions[i] - y[i])
                           : (predictions[i] != y[i] ? 1.0 : 0.0);
    num += wi * err;
    den += wi;
  }
  return num / den;
}

DecisionTree tune_min_leaf(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const WeightVector& w, TreeTask task, Rng& rng, int* chosen) {
  const Eigen::Index n = X.rows();
  if (n < 20) throw ValidationError("tune_min_leaf: need n >= 20");
  if (X.rows() != y.size() || w.values.size() != n) {
    throw ValidationError("tune_min_leaf: length mismatch");
  }

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  const Eigen::Index half = n / 2;

  auto slice = [&](Eigen::Index lo, Eigen::Index hi, Eigen::MatrixXd& Xs,
                   Eigen::VectorXd& ys, WeightVector& ws) {
    Xs.resize(hi - lo, X.cols());
    ys.resize(hi - lo);
    ws.values.resize(hi - lo);
    for (Eigen::Index i = lo; i < hi; ++i) {
      Xs.row(i - lo) = X.row(idx[static_cast<std::size_t>(i)]);
      ys[i - lo] = y[idx[static_cast<std::size_t>(i)]];
      ws.values[i - lo] = w.values[idx[static_cast<std::size_t>(i)]];
    }
  };
  Eigen::MatrixXd Xa, Xb;
  Eigen::VectorXd ya, yb;
  WeightVector wa, wb;
  slice(0, half, Xa, ya, wa);
  slice(half, n, Xb, yb, wb);

  double best_score = std::numeric_limits<double>::infinity();
  int best_leaf = kMinLeafGrid[0];
  for (int leaf : kMinLeafGrid) {
    TreeConfig cfg{leaf, task, std::nullopt};
    const DecisionTree ta = fit_tree(Xa, ya, wa, cfg);
    const DecisionTree tb = fit_tree(Xb, yb, wb, cfg);
    const double score = 0.5 * (evaluate(predict(ta, Xb), yb, task, &wb) +
                                evaluate(predict(tb, Xa), ya, task, &wa));
    if (score <= best_score) {  // ties prefer the larger min_leaf
      best_score = score;
      best_leaf = leaf;
    }
  }

  if (chosen) *chosen = best_leaf;
  return fit_tree(X, y, w, TreeConfig{best_leaf, task, std::nullopt});
}

}  // namespace covshift
