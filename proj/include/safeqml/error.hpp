#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace safeqml {

enum class ErrorCode {
    ZeroVector,
    DimensionOverflow,
    QubitOutOfRange,
    ControlEqualsTarget,
    ShapeMismatch,
    EmptyDataset,
    EmptyInput,
    LabelOutOfRange,
    NonPositiveMean,
    ConstantReference,
    SingleClassSplit,
    DegenerateGrid,
    ClassTooSmall,
    NonDifferentiableModel,
    MalformedHeader,
    NonNumericCell,
    EmptyFile,
    InvalidSpec,
    InvalidConfig,
    IoFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library. The code is the
/// stable, testable part; the message is for humans.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// Errors caused by user-supplied data rather than by the computation.
    bool is_data_error() const noexcept;

  private:
    ErrorCode code_;
};

/// Raised while parsing dataset CSV files. Row and column are zero-based
/// positions in the data section (the header is not counted).
class CsvError : public Error {
  public:
    CsvError(ErrorCode code, const std::string& message, std::size_t row, std::size_t column)
        : Error(code, message + " (row " + std::to_string(row) + ", column " +
                          std::to_string(column) + ")"),
          row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

  private:
    std::size_t row_;
    std::size_t column_;
};

}  // namespace safeqml
