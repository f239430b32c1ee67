#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "covshift/rng.hpp"
#include "covshift/weights.hpp"

namespace covshift {

enum class TreeTask { regression, classification };

struct TreeConfig {
  int min_samples_leaf = 1;  // unweighted row count per leaf
  TreeTask task = TreeTask::regression;
  std::optional<int> max_depth;  // unlimited when absent
};

// feature == -1 marks a leaf. Rows with value <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  Eigen::VectorXd value;  // regression: length 1; classification: class probs
  double weighted_count = 0.0;
  int row_count = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at index 0
  TreeTask task = TreeTask::regression;
  int num_classes = 0;  // classification only

  const TreeNode& root() const { return nodes.front(); }
};

// Greedy CART: candidate thresholds are midpoints of consecutive distinct
// sorted values, the split maximizes weighted impurity decrease (variance /
// Gini), ties break to the lowest feature index then the lowest threshold,
// and a split must leave min_samples_leaf rows on each side and strictly
// decrease impurity.
DecisionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const WeightVector& w, const TreeConfig& config);

// Regression: leaf values. Classification: argmax class id (ties to the
// lowest id).
Eigen::VectorXd predict(const DecisionTree& tree, const Eigen::MatrixXd& X);

// Random 2-fold cross-validation over min_samples_leaf in {5,15,25,40,50};
// ties prefer the larger (more regularized) value; winner refit on all rows.
DecisionTree tune_min_leaf(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const WeightVector& w, TreeTask task, Rng& rng,
                           int* chosen = nullptr);

inline constexpr int kMinLeafGrid[] = {5, 15, 25, 40, 50};

// Weighted mean squared error (regression) or weighted misclassification
// rate (classification); unit weights when w is absent.
double evaluate(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y,
                TreeTask task, const WeightVector* w = nullptr);

}  // namespace covshift
