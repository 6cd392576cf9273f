#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tlae/data.hpp"
#include "tlae/forecaster.hpp"
#include "tlae/model.hpp"
#include "tlae/trainer.hpp"

namespace tlae {

struct DatasetSection {
  std::optional<std::filesystem::path> path;   // CSV file
  std::optional<SyntheticSpec> synthetic;      // or a generated panel
  Normalization normalization = Normalization::none;
  TimestampColumn timestamp = TimestampColumn::automatic;
  std::size_t max_steps = 0;                   // keep the first max_steps columns; 0 keeps all
};

struct EvalSection {
  RollingSpec rolling;
  std::vector<std::string> metrics;
  std::size_t num_quantiles = 20;  // CRPS pinball grid size
  EnsembleOptions ensemble;
};

struct SweepSection {
  std::string axis;            // batch_size | lambda | latent_dim
  std::vector<double> values;
};

// Declarative description of one run. Every field is validated on load and
// unknown keys anywhere in the document are rejected with their path.
struct RunConfig {
  DatasetSection dataset;
  ModelConfig model;          // input_dim is filled from the dataset
  TrainConfig train;          // train.seed mirrors `seed`
  EvalSection eval;
  std::filesystem::path output_dir = "tlae-out";
  std::uint64_t seed = 0;
  std::optional<SweepSection> sweep;

  // Checks that need the dataset shape (d < n, enough steps for the split).
  void validate_against(std::size_t series, std::size_t steps) const;
};

// `base_dir` resolves relative dataset paths.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Fully resolved configuration; parsing it back yields an equal run.
nlohmann::ordered_json to_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

nlohmann::ordered_json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace tlae
