#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tlae/config.hpp"
#include "tlae/data.hpp"
#include "tlae/error.hpp"
#include "tlae/forecaster.hpp"
#include "tlae/metrics.hpp"
#include "tlae/trainer.hpp"

namespace tlae {

// Dataset loaded per the config, split and normalised. Normalisation
// statistics come from the training range only.
struct PreparedData {
  Dataset raw;     // original units
  Dataset scaled;  // what the model sees
  Normalizer normalizer;
  Split split;
  std::string label;  // path or synthetic description, for report metadata
};

PreparedData prepare_data(const RunConfig& config);
// Copy of `config` with model.input_dim taken from the data, validated against it.
RunConfig resolve(const RunConfig& config, const PreparedData& data);

// Trains on the columns before the test region.
FitResult train_model(const RunConfig& config, const PreparedData& data,
                      const FitOptions& options = {});

// Rolling forecast over the test region with forecasts, samples and actuals
// mapped back to original units.
RollingResult forecast_test(const RunConfig& config, const PreparedData& data,
                            const ModelParams& params);

// Scores every metric named in config.eval.metrics.
MetricsReport score(const RunConfig& config, const PreparedData& data, const RollingResult& result);

MetricsReport evaluate_params(const RunConfig& config, const PreparedData& data,
                              const ModelParams& params);

struct TrainArtifacts {
  FitResult fit;
  std::filesystem::path best_checkpoint;
  std::filesystem::path final_checkpoint;
  std::string best_hash;
};

// Files under config.output_dir: checkpoint_best.bin, checkpoint_final.bin,
// train_log.jsonl, config.json (resolved, rerunnable), run.json (hashes),
// dataset.json.
TrainArtifacts cmd_train(const RunConfig& config);

// Writes metrics.json and metrics.txt under config.output_dir.
MetricsReport cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint);

// Writes forecast.csv (per series: point and each quantile level),
// actuals.csv and forecast.json.
RollingResult cmd_forecast(const RunConfig& config, const std::filesystem::path& checkpoint);

struct SweepRun {
  double value = 0.0;
  std::uint64_t seed = 0;
  std::optional<MetricsReport> report;
  std::string error;  // set when the run failed
};

struct SweepReport {
  std::string axis;
  std::vector<SweepRun> runs;

  std::string to_json() const;
  std::string to_table() const;
};

// Applies one sweep value to a config (batch_size, lambda or latent_dim).
RunConfig apply_sweep_value(const RunConfig& config, const std::string& axis, double value);

// Run i uses seed + i and writes its outputs under <output_dir>/<axis>-<i>.
// Failed runs are recorded and the sweep continues. Also writes sweep.json,
// sweep.txt and sweep.svg.
SweepReport cmd_sweep(const RunConfig& config);

// One SVG per series (at most `max_series`, 0 for all) from forecast.csv and
// actuals.csv as written by cmd_forecast.
std::vector<std::filesystem::path> cmd_plot(const std::filesystem::path& forecast_csv,
                                            const std::filesystem::path& actuals_csv,
                                            const std::filesystem::path& out_dir,
                                            std::size_t max_series = 0);

struct AblationReport {
  MetricsReport nonlinear;
  MetricsReport linear;

  std::string to_json() const;
  std::string to_table() const;
};

// Trains ReLU and purely linear encoder/decoder variants with the same seed
// and budget and scores WAPE, MAPE and SMAPE.
AblationReport ablate(const RunConfig& config, const PreparedData& data);
AblationReport cmd_ablate(const RunConfig& config);

// Process exit status for an error kind: config 2, data 3, numeric 4, io 5, other 1.
int exit_code(ErrorKind kind) noexcept;

}  // namespace tlae
