#include "safeqml/error.hpp"

namespace safeqml {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionOverflow: return "DimensionOverflow";
    case ErrorCode::QubitOutOfRange: return "QubitOutOfRange";
    case ErrorCode::ControlEqualsTarget: return "ControlEqualsTarget";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::NonPositiveMean: return "NonPositiveMean";
    case ErrorCode::ConstantReference: return "ConstantReference";
    case ErrorCode::SingleClassSplit: return "SingleClassSplit";
    case ErrorCode::DegenerateGrid: return "DegenerateGrid";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::NonDifferentiableModel: return "NonDifferentiableModel";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

bool Error::is_data_error() const noexcept {
    switch (code_) {
    case ErrorCode::MalformedHeader:
    case ErrorCode::NonNumericCell:
    case ErrorCode::EmptyFile:
    case ErrorCode::LabelOutOfRange:
    case ErrorCode::EmptyDataset:
    case ErrorCode::ClassTooSmall:
    case ErrorCode::InvalidSpec:
        return true;
    default:
        return false;
    }
}

}  // namespace safeqml
