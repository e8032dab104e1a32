#include "safeqml/dataset.hpp"

#include <cmath>
#include <string>

#include "safeqml/error.hpp"

namespace safeqml {

void Dataset::validate() const {
    if (labels.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no samples");
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw Error(ErrorCode::ShapeMismatch, std::to_string(features.rows()) + " feature rows but " +
                                                  std::to_string(labels.size()) + " labels");
    }
    if (features.cols() == 0) throw Error(ErrorCode::InvalidSpec, "dataset has no features");
    if (n_classes < 2) throw Error(ErrorCode::InvalidSpec, "at least two classes are required");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_classes) {
            throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(labels[i]) +
                                                        " at sample " + std::to_string(i));
        }
    }
    if (!features.allFinite()) throw Error(ErrorCode::InvalidSpec, "non-finite feature value");
    if (labels.size() < static_cast<std::size_t>(n_classes)) {
        throw Error(ErrorCode::InvalidSpec, "fewer samples than classes");
    }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.n_classes = n_classes;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        out.features.row(static_cast<Eigen::Index>(r)) =
            features.row(static_cast<Eigen::Index>(indices[r]));
        out.labels.push_back(labels[indices[r]]);
    }
    return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(n_classes, 0)), 0);
    for (int y : labels) {
        if (y >= 0 && y < n_classes) ++counts[static_cast<std::size_t>(y)];
    }
    return counts;
}

}  // namespace safeqml
