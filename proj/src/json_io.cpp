#include "covshift/json_io.hpp"

#include "covshift/error.hpp"

namespace covshift {
namespace {

Json vector_to_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const Json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i];
  return v;
}

}  // namespace

Json mixture_to_json(const GaussianMixture& g) {
  Json j;
  j["components"] = g.components();
  j["dim"] = g.dim();
  j["weights"] = vector_to_json(g.weights);
  j["means"] = Json::array();
  j["covariances"] = Json::array();
  for (int k = 0; k < g.components(); ++k) {
    j["means"].push_back(vector_to_json(g.means[static_cast<std::size_t>(k)]));
    const Eigen::MatrixXd& cov = g.covariances[static_cast<std::size_t>(k)];
    Json flat = Json::array();  // row-major
    for (Eigen::Index r = 0; r < cov.rows(); ++r) {
      for (Eigen::Index c = 0; c < cov.cols(); ++c) flat.push_back(cov(r, c));
    }
    j["covariances"].push_back(flat);
  }
  return j;
}

GaussianMixture mixture_from_json(const Json& j) {
  GaussianMixture g;
  const int k = j.at("components");
  const Eigen::Index q = j.at("dim");
  g.weights = vector_from_json(j.at("weights"));
  for (int c = 0; c < k; ++c) {
    g.means.push_back(vector_from_json(j.at("means").at(static_cast<std::size_t>(c))));
    const Json& flat = j.at("covariances").at(static_cast<std::size_t>(c));
    if (flat.size() != static_cast<std::size_t>(q * q)) {
      throw ValidationError("mixture_from_json: covariance size mismatch");
    }
    Eigen::MatrixXd cov(q, q);
    for (Eigen::Index r = 0; r < q; ++r) {
      for (Eigen::Index col = 0; col < q; ++col) {
        cov(r, col) = flat[static_cast<std::size_t>(r * q + col)];
      }
    }
    g.covariances.push_back(cov);
  }
  g.validate();
  return g;
}

Json tree_to_json(const DecisionTree& tree) {
  Json j;
  j["task"] = tree.task == TreeTask::regression ? "regression" : "classification";
  j["num_classes"] = tree.num_classes;
  j["nodes"] = Json::array();
  for (const TreeNode& node : tree.nodes) {
    j["nodes"].push_back({{"feature", node.feature},
                          {"threshold", node.threshold},
                          {"left", node.left},
                          {"right", node.right},
                          {"value", vector_to_json(node.value)},
                          {"weighted_count", node.weighted_count},
                          {"row_count", node.row_count}});
  }
  return j;
}

DecisionTree tree_from_json(const Json& j) {
  DecisionTree tree;
  tree.task = j.at("task") == "regression" ? TreeTask::regression : TreeTask::classification;
  tree.num_classes = j.at("num_classes");
  for (const Json& nj : j.at("nodes")) {
    TreeNode node;
    node.feature = nj.at("feature");
    node.threshold = nj.at("threshold");
    node.left = nj.at("left");
    node.right = nj.at("right");
    node.value = vector_from_json(nj.at("value"));
    node.weighted_count = nj.at("weighted_count");
    node.row_count = nj.at("row_count");
    tree.nodes.push_back(std::move(node));
  }
  if (tree.nodes.empty()) throw ValidationError("tree_from_json: empty node array");
  return tree;
}

Json selection_to_json(const SelectionResult& result) {
  Json j;
  j["selected"] = result.selected;
  j["mi_trajectory"] = result.mi_trajectory;
  j["stop_reason"] = to_string(result.stop_reason);
  return j;
}

}  // namespace covshift
