#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covshift/rng.hpp"

namespace covshift {

// Feature matrix plus optional labels; the unit every pipeline stage
// consumes and produces. Immutable by convention once built: operations
// return new datasets.
struct Dataset {
  Eigen::MatrixXd features;                // n x d, all entries finite
  std::optional<Eigen::VectorXd> labels;   // length n when present
  bool class_labels = false;               // labels hold ids 0..C-1
  std::vector<std::string> feature_names;  // size d

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }

  // Number of classes (max id + 1); requires class labels.
  int num_classes() const;

  // Throws ValidationError when any invariant is broken.
  void validate() const;
};

struct ScalerParams {
  Eigen::VectorXd means;
  Eigen::VectorXd stddevs;  // strictly positive; constant columns recorded as 1
};

// x -> matrix * (x - offset). matrix must have full row rank (checked with
// a rank-revealing QR at tolerance 1e-10).
struct ProjectionSpec {
  Eigen::MatrixXd matrix;  // d' x d
  Eigen::VectorXd offset;  // length d
};

// Comma-separated, '.' decimal, optional header. label_column is either a
// header name or a 0-based column index given as digits. Non-numeric label
// cells are mapped to class ids in order of first appearance.
Dataset load_csv(const std::string& path, bool has_header,
                 const std::optional<std::string>& label_column = std::nullopt);

// Writes a header row; floats use shortest round-trip decimals.
void save_csv(const Dataset& ds, const std::string& path,
              const std::string& label_name = "label");

// Uniform sample without replacement down to max_rows (input order kept);
// identity when n <= max_rows.
Dataset subsample(const Dataset& ds, std::size_t max_rows, Rng& rng);

// Column-wise mean 0 / stddev 1 using the n-1 convention. Constant columns
// become all zeros with stddev recorded as 1.
std::pair<Dataset, ScalerParams> standardize(const Dataset& ds);

ScalerParams fit_scaler(const Eigen::MatrixXd& features);

Eigen::MatrixXd apply_scaler(const Eigen::MatrixXd& features, const ScalerParams& params);

// Appends i.i.d. standard normal columns named noise_0, noise_1, ... until
// the dataset has target_width features.
Dataset augment_with_noise(const Dataset& ds, Eigen::Index target_width, Rng& rng);

// Real labels -> classes: 1 iff y > median(y) (lower median for even n).
Dataset binarize_labels(const Dataset& ds);

Dataset project(const Dataset& ds, const ProjectionSpec& spec);

// Lower median: sorted element at index (n-1)/2.
double lower_median(Eigen::VectorXd values);

}  // namespace covshift
