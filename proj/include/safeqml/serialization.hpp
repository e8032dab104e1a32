#pragma once

// JSON documents: experiment configs, reports and model checkpoints.
// Doubles are written in shortest round-trip form, so save/load is bit-exact.

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "safeqml/eval_harness.hpp"
#include "safeqml/hybrid_model.hpp"

namespace safeqml {

using Json = nlohmann::ordered_json;

Json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});

Json to_json(const CurveConfig& config);
CurveConfig curve_config_from_json(const Json& j, CurveConfig base = {});

Json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig base = {});

/// 16 hex digits of FNV-1a over the canonical config document. Changes iff
/// a semantic field changes (the thread count is not semantic).
std::string config_hash(const ExperimentConfig& config);

Json to_json(const RgCurve& curve);
RgCurve curve_from_json(const Json& j);

Json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const Json& j);

/// A trained classifier plus what is needed to apply it to raw features.
struct Checkpoint {
    Classifier model;
    TrainConfig config;
    std::optional<Scaler> scaler;
};

Json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const Json& j);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Reads a whole JSON file; IoFailure / InvalidConfig on failure.
Json read_json_file(const std::filesystem::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const Json& j, const std::filesystem::path& path);

}  // namespace safeqml
