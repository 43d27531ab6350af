#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adafl/error.hpp"

namespace adafl {

/// Labelled samples: one row of `features` per sample.
struct Dataset {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t num_features() const { return static_cast<std::size_t>(features.cols()); }
  bool empty() const { return labels.empty(); }

  /// Throws if row count and label count disagree or a label is out of range.
  void validate() const {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
      throw DimensionError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                           std::to_string(labels.size()) + " labels");
    }
    if (num_classes <= 0) throw InvalidArgument("dataset class count must be positive");
    for (int label : labels) {
      if (label < 0 || label >= num_classes) {
        throw InvalidArgument("label " + std::to_string(label) + " outside [0, " +
                              std::to_string(num_classes) + ")");
      }
    }
  }

  /// Rows picked by `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.num_classes = num_classes;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(indices[i]));
      out.labels.push_back(labels[indices[i]]);
    }
    return out;
  }

  bool operator==(const Dataset& other) const {
    return num_classes == other.num_classes && labels == other.labels &&
           features.rows() == other.features.rows() && features.cols() == other.features.cols() &&
           features == other.features;
  }
};

}  // namespace adafl
