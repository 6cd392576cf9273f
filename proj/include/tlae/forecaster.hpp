#pragma once

#include <cstdint>
#include <vector>

#include "tlae/matrix.hpp"
#include "tlae/model.hpp"

namespace tlae {

struct RollingSpec {
  std::size_t horizon = 1;        // tau, steps per window
  std::size_t windows = 1;        // k
  std::size_t context = 0;        // columns of true history per window; 0 means L
  std::size_t samples = 1;        // S, ensemble members (1 for point-only runs)
  std::vector<double> quantiles;  // strictly increasing levels in (0, 1)

  std::size_t context_for(const ModelConfig& config) const {
    return context == 0 ? config.seq_len : context;
  }
  void validate() const;
};

struct EnsembleOptions {
  // Feed each member's own latent draw forward instead of the mean path.
  bool trajectory_sampling = false;
  // Multiplies the latent noise; 0 collapses every member onto the mean path.
  double noise_scale = 1.0;
};

// Forecasts over H columns (H = tau for one call, k * tau after rolling).
struct ForecastEnsemble {
  Matrix point;                  // n x H, decoded latent means
  std::vector<Matrix> samples;   // S matrices, n x H each
  std::vector<double> levels;
  std::vector<Matrix> quantiles;  // one n x H matrix per level

  std::size_t horizon() const noexcept { return point.cols(); }
};

// Latent mean path for tau steps after `context` (n x L_c, L_c >= L). The
// LSTM runs from zero state over the encoded context, then feeds each
// prediction back as its next input. Returns d x tau.
Matrix forecast_latent_means(const ModelParams& params, const Matrix& context, std::size_t tau);

Matrix forecast_point(const ModelParams& params, const Matrix& context, std::size_t tau);

// Members are independent: member s draws from RngStream(seed, s).
ForecastEnsemble forecast_ensemble(const ModelParams& params, const Matrix& context,
                                   std::size_t tau, std::size_t samples, std::uint64_t seed,
                                   const EnsembleOptions& options = {});

// Per-cell empirical quantiles (linear interpolation between order statistics).
std::vector<Matrix> ensemble_quantiles(const std::vector<Matrix>& samples,
                                       const std::vector<double>& levels);

struct RollingResult {
  ForecastEnsemble forecast;
  Matrix actuals;          // n x (k tau), aligned with forecast columns
  std::size_t start = 0;   // first forecast column index in the full series
};

// Test region is the final k * tau columns of `series`. Window w forecasts
// columns [start + w tau, start + (w+1) tau) from the true values just
// before it; earlier forecasts never re-enter as context. Window w uses seed
// mix_seed(seed, w). With samples == 1 and no quantiles only the point path is
// produced.
RollingResult rolling_evaluate(const ModelParams& params, const Matrix& series,
                               const RollingSpec& spec, std::uint64_t seed,
                               const EnsembleOptions& options = {});

}  // namespace tlae
