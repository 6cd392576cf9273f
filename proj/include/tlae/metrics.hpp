#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tlae/matrix.hpp"

namespace tlae {

// Point metrics. Undefined cases (e.g. all-zero targets) throw ErrorKind::domain.
double wape(const Matrix& yhat, const Matrix& y);
// Cells with y == 0 are excluded from both the sum and the count.
double mape(const Matrix& yhat, const Matrix& y);
// Denominator is |yhat + y| on cells with y != 0.
double smape(const Matrix& yhat, const Matrix& y);
double mse(const Matrix& yhat, const Matrix& y);

// D_rho(yhat, y) = (rho - 1{yhat <= y}) (yhat - y), the form used by R_rho.
// Note this is minimised by the (1 - rho)-quantile, not the rho-quantile.
double pinball(double yhat, double y, double rho) noexcept;
// Standard quantile score (y - q)(level - 1{y < q}), minimised in expectation
// by the level-quantile. CRPS is built from this one.
double quantile_score(double q, double y, double level) noexcept;
// R_rho = 2 sum D_rho / sum |y|, with yhat_rho the predictive rho-quantile.
double quantile_loss(const Matrix& yhat_rho, const Matrix& y, double rho);

// Empirical quantile of sorted samples, linear interpolation between order
// statistics at position (S - 1) * level.
double quantile_sorted(std::span<const double> sorted, double level) noexcept;

// Quantile levels {(i - 1/2) / Q : i = 1..Q}.
std::vector<double> crps_quantile_grid(std::size_t num_quantiles);

// Mean over cells of the quantile-based CRPS estimate
//   (2/Q) sum_i quantile_score(q_i, y, level_i)
// where q_i are empirical quantiles of that cell's samples. `samples` holds S
// matrices each shaped like `y`. Requires S >= num_quantiles.
double crps_pinball(std::span<const Matrix> samples, const Matrix& y,
                    std::size_t num_quantiles = 20);

// crps_pinball applied to the per-time-step sums across series (rows).
double crps_sum(std::span<const Matrix> samples, const Matrix& y,
                std::size_t num_quantiles = 20);

// Row-sums (1 x H) of a series-by-time matrix.
Matrix sum_over_series(const Matrix& m);

struct MetricsReport {
  std::map<std::string, double> values;
  std::size_t series = 0;
  std::size_t horizon = 0;
  std::size_t samples = 0;
  std::size_t num_quantiles = 0;
  std::uint64_t seed = 0;
  std::string dataset;
  std::string config_hash;

  std::string to_json() const;
  std::string to_table() const;
};

// Metric names accepted by report builders.
bool is_point_metric(const std::string& name);
bool is_probabilistic_metric(const std::string& name);

}  // namespace tlae
