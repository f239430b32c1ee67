#pragma once

#include "covshift/gmm.hpp"
#include "covshift/mutual_info.hpp"
#include "covshift/report.hpp"
#include "covshift/tree.hpp"

namespace covshift {

// Weights, means, and row-major covariances.
Json mixture_to_json(const GaussianMixture& g);
GaussianMixture mixture_from_json(const Json& j);

// Node array; feature -1 marks leaves.
Json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const Json& j);

Json selection_to_json(const SelectionResult& result);

}  // namespace covshift
