#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace safeqml {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Feature matrix (one sample per row) with integer class labels.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int n_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t n_features() const noexcept { return static_cast<std::size_t>(features.cols()); }

    /// Throws EmptyDataset, ShapeMismatch, LabelOutOfRange or InvalidSpec
    /// (non-finite entries, fewer samples than classes).
    void validate() const;

    /// Rows selected by `indices`, in that order.
    Dataset subset(const std::vector<std::size_t>& indices) const;

    /// Per-class sample counts.
    std::vector<std::size_t> class_counts() const;

    bool operator==(const Dataset& other) const {
        return n_classes == other.n_classes && labels == other.labels &&
               features.rows() == other.features.rows() &&
               features.cols() == other.features.cols() && features == other.features;
    }
};

}  // namespace safeqml
