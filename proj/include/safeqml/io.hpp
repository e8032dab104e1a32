#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "safeqml/dataset.hpp"
#include "safeqml/eval_harness.hpp"

namespace safeqml {

/// Reads `f0,...,f{d-1},label` CSV. Labels are nonnegative integers and
/// n_classes = max label + 1.
/// Throws EmptyFile, MalformedHeader, NonNumericCell(row, col), LabelOutOfRange(row).
Dataset load_dataset_csv(const std::filesystem::path& path);
Dataset parse_dataset_csv(std::istream& in);

/// Writes the same schema with shortest round-trip decimals.
void save_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);
void write_dataset_csv(const Dataset& dataset, std::ostream& out);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Isotropic Gaussian blobs, one per class.
struct SyntheticSpec {
    std::size_t n_samples = 600;
    std::size_t n_features = 64;
    int n_classes = 3;
    /// Minimum distance between class centres in units of sqrt(d) * within_std.
    double separation = 6.0;
    double within_std = 1.0;
    std::uint64_t seed = 7;

    void validate() const;  ///< InvalidSpec
};

/// Centres are seeded Gaussian draws rescaled so every pair is at least
/// separation * sqrt(d) * within_std apart; class counts differ by at most one.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Writes `report.json` plus `curve_<kind>_<variant>.csv` (fold-mean curves,
/// columns level,score) into out_dir, creating it if needed.
/// Returns the written paths. Throws IoFailure.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               const std::filesystem::path& out_dir);

/// Writes one curve as `level,score` CSV; missing scores are left empty.
void write_curve_csv(const RgCurve& curve, const std::filesystem::path& path);

/// Entry point of the `safeqml` tool. Exit codes: 0 success, 1 usage or
/// configuration error, 2 data error, 3 runtime failure.
int cli_main(int argc, const char* const* argv);

}  // namespace safeqml
