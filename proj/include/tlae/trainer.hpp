#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tlae/data.hpp"
#include "tlae/model.hpp"
#include "tlae/objective.hpp"

namespace tlae {

// Window length b, L and mode come from the ModelConfig the trainer is given.
struct TrainConfig {
  std::size_t batch_size = 2;  // b
  std::size_t stride = 1;
  std::size_t epochs = 1;
  double learning_rate = 1e-4;
  double lambda = 0.5;
  int p = 1;
  int q = 2;
  std::uint64_t seed = 0;
  std::size_t validation = 0;          // m, held-out tail steps
  std::size_t validation_horizon = 0;  // steps per validation window; 0 means m
  std::size_t validation_samples = 100;
  double clip_norm = 0.0;              // global gradient-norm clip; 0 disables

  void validate(const ModelConfig& model) const;
};

struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

// Windows [s, s + b) for s = 0, stride, 2 stride, ... while s + b <= T.
std::vector<Window> make_windows(std::size_t total_steps, std::size_t batch, std::size_t stride);

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_shapes(const std::vector<Matrix>& params);
};

// Bias-corrected Adam update in place. Non-finite gradients throw
// ErrorKind::numeric naming the offending slot.
void adam_step(std::vector<Matrix>& params, const GradientSet& grads, AdamState& state, double lr);

// Loss of one window; fills `grads` when given. `latent_noise` is required in
// probabilistic mode (the reparameterisation draw) and ignored otherwise.
LossBreakdown batch_loss(const ModelParams& params, const Matrix& window, const TrainConfig& tc,
                         const Matrix* latent_noise, GradientSet* grads = nullptr);

// Reparameterisation noise used for window `index` during `epoch`.
Matrix training_noise(const ModelConfig& model, const TrainConfig& tc, std::size_t epoch,
                      std::size_t index);

// Mean of batch losses over every training window of [0, T - m) at fixed
// parameters, with the noise draws of `epoch`.
LossBreakdown overall_loss(const ModelParams& params, const Matrix& series, const TrainConfig& tc,
                           std::size_t epoch = 0);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t windows = 0;
  double loss = 0.0;
  double recon = 0.0;
  double latent = 0.0;
  std::optional<double> validation;  // WAPE or CRPS-sum
  std::string validation_metric;
  double seconds = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 means the initial parameters

  // One JSON object per line.
  std::string to_jsonl() const;
  static std::string record_json(const EpochRecord& r);
};

struct FitOptions {
  // Called after every epoch with the new record.
  std::function<void(const EpochRecord&)> on_epoch;
  // Where the last good parameters go if training diverges; empty skips the dump.
  std::filesystem::path divergence_checkpoint;
  // Validation metrics are computed in original units when given.
  const Normalizer* normalizer = nullptr;
};

struct FitResult {
  ModelParams params;     // best validation epoch, or last epoch when m == 0
  ModelParams final_params;
  TrainingLog log;
};

FitResult fit(const Matrix& series, const ModelConfig& model, const TrainConfig& tc,
              const FitOptions& options = {});
FitResult fit(const Matrix& series, ModelParams init, const TrainConfig& tc,
              const FitOptions& options = {});

// Validation score for `params` on the last m columns of `series`.
double validation_score(const ModelParams& params, const Matrix& series, const TrainConfig& tc,
                        const Normalizer* normalizer = nullptr);

}  // namespace tlae
