#include "covshift/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <Eigen/QR>

#include "covshift/error.hpp"

namespace covshift {
namespace {

std::string trimmed(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& cell, double& out) {
  const std::string t = trimmed(cell);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

int Dataset::num_classes() const {
  if (!labels || !class_labels) {
    throw ValidationError("num_classes: dataset has no class labels");
  }
  return static_cast<int>(labels->maxCoeff()) + 1;
}

void Dataset::validate() const {
  if (rows() < 1 || cols() < 1) {
    throw ValidationError("Dataset: need n >= 1 and d >= 1");
  }
  if (!features.allFinite()) {
    throw ValidationError("Dataset: non-finite feature entry");
  }
  if (labels && labels->size() != rows()) {
    throw ValidationError("Dataset: label length does not match row count");
  }
  if (!feature_names.empty() &&
      feature_names.size() != static_cast<std::size_t>(cols())) {
    throw ValidationError("Dataset: feature_names size does not match width");
  }
}

Dataset load_csv(const std::string& path, bool has_header,
                 const std::optional<std::string>& label_column) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open CSV file: " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && trimmed(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw IngestError("empty CSV file: " + path);

  std::vector<std::string> header;
  std::size_t first_data = 0;
  if (has_header) {
    header = split_line(lines[0]);
    for (auto& h : header) h = trimmed(h);
    first_data = 1;
    if (lines.size() == first_data) {
      throw IngestError("CSV has a header but no data rows: " + path);
    }
  }

  const std::size_t ncols = split_line(lines[first_data]).size();
  if (has_header && header.size() != ncols) {
    throw IngestError("CSV header width differs from row 2 width in " + path);
  }

  // Resolve the label column: header name first, then a digit index.
  int label_idx = -1;
  if (label_column) {
    const std::string want = trimmed(*label_column);
    if (has_header) {
      for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == want) label_idx = static_cast<int>(j);
      }
    }
    if (label_idx < 0) {
      int idx = -1;
      auto [p, ec] = std::from_chars(want.data(), want.data() + want.size(), idx);
      if (ec == std::errc() && p == want.data() + want.size() && idx >= 0 &&
          idx < static_cast<int>(ncols)) {
        label_idx = idx;
      } else {
        throw IngestError("label column '" + want + "' not found in " + path);
      }
    }
  }

  const std::size_t nrows = lines.size() - first_data;
  const std::size_t nfeat = label_idx >= 0 ? ncols - 1 : ncols;
  if (nfeat == 0) throw IngestError("CSV has no feature columns: " + path);

  Eigen::MatrixXd features(nrows, nfeat);
  Eigen::VectorXd labels(nrows);
  std::vector<std::string> raw_labels(nrows);
  bool labels_all_numeric = true;

  for (std::size_t r = 0; r < nrows; ++r) {
    const std::size_t line_no = first_data + r + 1;  // 1-based, header counted
    auto cells = split_line(lines[first_data + r]);
    if (cells.size() != ncols) {
      throw IngestError("ragged CSV row " + std::to_string(line_no) + " in " + path +
                        ": expected " + std::to_string(ncols) + " cells, got " +
                        std::to_string(cells.size()));
    }
    std::size_t fj = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
      if (static_cast<int>(c) == label_idx) {
        double v = 0.0;
        if (parse_double(cells[c], v)) {
          labels[static_cast<Eigen::Index>(r)] = v;
        } else {
          labels_all_numeric = false;
        }
        raw_labels[r] = trimmed(cells[c]);
        continue;
      }
      double v = 0.0;
      if (!parse_double(cells[c], v) || !std::isfinite(v)) {
        throw IngestError("non-numeric feature cell at row " + std::to_string(line_no) +
                          ", column " + std::to_string(c + 1) + " in " + path);
      }
      features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(fj++)) = v;
    }
  }

  Dataset ds;
  ds.features = std::move(features);
  if (label_idx >= 0) {
    if (labels_all_numeric) {
      ds.labels = std::move(labels);
      ds.class_labels = false;
    } else {
      // Class ids in order of first appearance.
      std::unordered_map<std::string, int> ids;
      Eigen::VectorXd mapped(nrows);
      for (std::size_t r = 0; r < nrows; ++r) {
        auto [it, inserted] = ids.emplace(raw_labels[r], static_cast<int>(ids.size()));
        mapped[static_cast<Eigen::Index>(r)] = it->second;
      }
      ds.labels = std::move(mapped);
      ds.class_labels = true;
    }
  }

  ds.feature_names.reserve(nfeat);
  if (has_header) {
    for (std::size_t c = 0; c < ncols; ++c) {
      if (static_cast<int>(c) != label_idx) ds.feature_names.push_back(header[c]);
    }
  } else {
    for (std::size_t j = 0; j < nfeat; ++j) {
      ds.feature_names.push_back("x" + std::to_string(j));
    }
  }

  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path, const std::string& label_name) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot open file for writing: " + path);

  for (Eigen::Index j = 0; j < ds.cols(); ++j) {
    if (j > 0) out << ',';
    out << (ds.feature_names.empty() ? "x" + std::to_string(j) : ds.feature_names[j]);
  }
  if (ds.labels) out << ',' << label_name;
  out << '\n';

  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(ds.features(i, j));
    }
    if (ds.labels) out << ',' << format_double((*ds.labels)[i]);
    out << '\n';
  }
  if (!out) throw IngestError("write failed: " + path);
}

Dataset subsample(const Dataset& ds, std::size_t max_rows, Rng& rng) {
  ds.validate();
  if (max_rows < 1) throw ValidationError("subsample: max_rows must be >= 1");
  const std::size_t n = static_cast<std::size_t>(ds.rows());
  if (n <= max_rows) return ds;

  // Partial Fisher-Yates, then restore input order.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < max_rows; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_rows);
  std::sort(idx.begin(), idx.end());

  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(max_rows), ds.cols());
  if (ds.labels) out.labels = Eigen::VectorXd(static_cast<Eigen::Index>(max_rows));
  for (std::size_t i = 0; i < max_rows; ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        ds.features.row(static_cast<Eigen::Index>(idx[i]));
    if (ds.labels) (*out.labels)[static_cast<Eigen::Index>(i)] = (*ds.labels)[static_cast<Eigen::Index>(idx[i])];
  }
  out.class_labels = ds.class_labels;
  out.feature_names = ds.feature_names;
  return out;
}

ScalerParams fit_scaler(const Eigen::MatrixXd& features) {
  const Eigen::Index n = features.rows();
  if (n < 2) throw ValidationError("fit_scaler: need n >= 2");
  ScalerParams params;
  params.means = features.colwise().mean();
  params.stddevs.resize(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double var =
        (features.col(j).array() - params.means[j]).square().sum() / double(n - 1);
    const double sd = std::sqrt(var);
    params.stddevs[j] = sd > 0.0 ? sd : 1.0;
  }
  return params;
}

std::pair<Dataset, ScalerParams> standardize(const Dataset& ds) {
  ds.validate();
  ScalerParams params = fit_scaler(ds.features);
  Dataset out = ds;
  out.features = apply_scaler(ds.features, params);
  return {std::move(out), std::move(params)};
}

Eigen::MatrixXd apply_scaler(const Eigen::MatrixXd& features, const ScalerParams& params) {
  if (features.cols() != params.means.size()) {
    throw ValidationError("apply_scaler: width mismatch");
  }
  Eigen::MatrixXd out = features;
  out.rowwise() -= params.means.transpose();
  out.array().rowwise() /= params.stddevs.transpose().array();
  return out;
}

Dataset augment_with_noise(const Dataset& ds, Eigen::Index target_width, Rng& rng) {
  ds.validate();
  if (target_width < ds.cols()) {
    throw ValidationError("augment_with_noise: target_width < current width");
  }
  if (target_width == ds.cols()) return ds;

  Dataset out = ds;
  out.features.conservativeResize(Eigen::NoChange, target_width);
  for (Eigen::Index j = ds.cols(); j < target_width; ++j) {
    for (Eigen::Index i = 0; i < ds.rows(); ++i) out.features(i, j) = rng.normal();
    out.feature_names.push_back("noise_" + std::to_string(j - ds.cols()));
  }
  return out;
}

double lower_median(Eigen::VectorXd values) {
  if (values.size() == 0) throw ValidationError("lower_median: empty vector");
  std::vector<double> v(values.data(), values.data() + values.size());
  const std::size_t k = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

Dataset binarize_labels(const Dataset& ds) {
  ds.validate();
  if (!ds.labels) throw ValidationError("binarize_labels: dataset has no labels");
  if (ds.class_labels) throw ValidationError("binarize_labels: labels already classes");

  const double med = lower_median(*ds.labels);
  Dataset out = ds;
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    (*out.labels)[i] = ((*ds.labels)[i] > med) ? 1.0 : 0.0;
  }
  out.class_labels = true;
  return out;
}

Dataset project(const Dataset& ds, const ProjectionSpec& spec) {
  ds.validate();
  if (spec.matrix.cols() != ds.cols()) {
    throw ValidationError("project: matrix width does not match dataset width");
  }
  if (spec.offset.size() != ds.cols()) {
    throw ValidationError("project: offset length does not match dataset width");
  }
  if (spec.matrix.rows() < 1 || spec.matrix.rows() > spec.matrix.cols()) {
    throw ValidationError("project: need 1 <= d' <= d");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(spec.matrix.transpose());
  qr.setThreshold(1e-10);
  if (qr.rank() != spec.matrix.rows()) {
    throw ValidationError("project: matrix is rank deficient");
  }

  Dataset out;
  out.features =
      (ds.features.rowwise() - spec.offset.transpose()) * spec.matrix.transpose();
  out.labels = ds.labels;
  out.class_labels = ds.class_labels;
  out.feature_names.reserve(static_cast<std::size_t>(spec.matrix.rows()));
  for (Eigen::Index j = 0; j < spec.matrix.rows(); ++j) {
    out.feature_names.push_back("proj_" + std::to_string(j));
  }
  return out;
}

}  // namespace covshift
