#include "tlae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlae/error.hpp"

namespace tlae {

namespace {

void check_pair(const Matrix& yhat, const Matrix& y, const char* name) {
  require_same_shape(yhat, y, name);
  if (y.empty()) fail(ErrorKind::domain, std::string(name) + ": no cells");
}

double abs_sum(const Matrix& y) {
  double s = 0.0;
  for (double v : y.data()) s += std::fabs(v);
  return s;
}

}  // namespace

double wape(const Matrix& yhat, const Matrix& y) {
  check_pair(yhat, y, "wape");
  const double denom = abs_sum(y);
  if (denom == 0.0) fail(ErrorKind::domain, "wape undefined: sum of |y| is zero");
  double num = 0.0;
  auto a = yhat.data();
  auto b = y.data();
  for (std::size_t i = 0; i < a.size(); ++i) num += std::fabs(a[i] - b[i]);
  return num / denom;
}

double mape(const Matrix& yhat, const Matrix& y) {
  check_pair(yhat, y, "mape");
  double total = 0.0;
  std::size_t count = 0;
  auto a = yhat.data();
  auto b = y.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::fabs(b[i]) > 0.0) {
      total += std::fabs(a[i] - b[i]) / std::fabs(b[i]);
      ++count;
    }
  }
  if (count == 0) fail(ErrorKind::domain, "mape undefined: all targets are zero");
  return total / static_cast<double>(count);
}

double smape(const Matrix& yhat, const Matrix& y) {
  check_pair(yhat, y, "smape");
  double total = 0.0;
  std::size_t count = 0;
  auto a = yhat.data();
  auto b = y.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(std::fabs(b[i]) > 0.0)) continue;
    const double denom = std::fabs(a[i] + b[i]);
    if (denom == 0.0) {
      fail(ErrorKind::domain, "smape undefined: yhat + y == 0 at flat index " + std::to_string(i));
    }
    total += 2.0 * std::fabs(a[i] - b[i]) / denom;
    ++count;
  }
  if (count == 0) fail(ErrorKind::domain, "smape undefined: all targets are zero");
  return total / static_cast<double>(count);
}

double mse(const Matrix& yhat, const Matrix& y) {
  check_pair(yhat, y, "mse");
  double s = 0.0;
  auto a = yhat.data();
  auto b = y.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double pinball(double yhat, double y, double rho) noexcept {
  return (rho - (yhat <= y ? 1.0 : 0.0)) * (yhat - y);
}

double quantile_score(double q, double y, double level) noexcept {
  return (y - q) * (level - (y < q ? 1.0 : 0.0));
}

double quantile_loss(const Matrix& yhat_rho, const Matrix& y, double rho) {
  check_pair(yhat_rho, y, "quantile_loss");
  if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::domain, "quantile_loss: rho must be in (0,1)");
  const double denom = abs_sum(y);
  if (denom == 0.0) fail(ErrorKind::domain, "quantile_loss undefined: sum of |y| is zero");
  double num = 0.0;
  auto a = yhat_rho.data();
  auto b = y.data();
  for (std::size_t i = 0; i < a.size(); ++i) num += pinball(a[i], b[i], rho);
  return 2.0 * num / denom;
}

double quantile_sorted(std::span<const double> sorted, double level) noexcept {
  if (sorted.size() == 1) return sorted[0];
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> crps_quantile_grid(std::size_t num_quantiles) {
  std::vector<double> levels(num_quantiles);
  for (std::size_t i = 0; i < num_quantiles; ++i) {
    levels[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(num_quantiles);
  }
  return levels;
}

double crps_pinball(std::span<const Matrix> samples, const Matrix& y, std::size_t num_quantiles) {
  if (samples.empty()) fail(ErrorKind::contract, "crps: no samples");
  if (num_quantiles == 0) fail(ErrorKind::contract, "crps: need at least one quantile");
  if (samples.size() < num_quantiles) {
    fail(ErrorKind::contract, "crps: " + std::to_string(samples.size()) +
                                  " samples is fewer than " + std::to_string(num_quantiles) +
                                  " quantiles");
  }
  for (const Matrix& s : samples) require_same_shape(s, y, "crps: sample vs target");
  if (y.empty()) fail(ErrorKind::domain, "crps: no cells");

  const auto levels = crps_quantile_grid(num_quantiles);
  const std::size_t cells = y.size();
  std::vector<double> buf(samples.size());
  double total = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t s = 0; s < samples.size(); ++s) buf[s] = samples[s].data()[c];
    std::sort(buf.begin(), buf.end());
    const double obs = y.data()[c];
    double acc = 0.0;
    for (double level : levels) acc += quantile_score(quantile_sorted(buf, level), obs, level);
    total += 2.0 * acc / static_cast<double>(num_quantiles);
  }
  return total / static_cast<double>(cells);
}

Matrix sum_over_series(const Matrix& m) {
  Matrix out(1, m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(0, c) += m(r, c);
  return out;
}

double crps_sum(std::span<const Matrix> samples, const Matrix& y, std::size_t num_quantiles) {
  std::vector<Matrix> summed;
  summed.reserve(samples.size());
  for (const Matrix& s : samples) {
    require_same_shape(s, y, "crps_sum: sample vs target");
    summed.push_back(sum_over_series(s));
  }
  return crps_pinball(summed, sum_over_series(y), num_quantiles);
}

bool is_point_metric(const std::string& name) {
  return name == "wape" || name == "mape" || name == "smape" || name == "mse";
}

bool is_probabilistic_metric(const std::string& name) {
  return name == "crps" || name == "crps-sum" || name == "quantile-loss-0.5" ||
         name == "quantile-loss-0.9" || name == "coverage-90";
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [k, v] : values) metrics[k] = v;
  j["metrics"] = metrics;
  j["metadata"] = {{"dataset", dataset},   {"series", series},
                   {"horizon", horizon},   {"samples", samples},
                   {"num_quantiles", num_quantiles}, {"seed", seed},
                   {"config_hash", config_hash}};
  return j.dump(2) + "\n";
}

std::string MetricsReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(20) << "metric" << "value\n";
  os << std::string(32, '-') << "\n";
  for (const auto& [k, v] : values) {
    os << std::left << std::setw(20) << k << std::setprecision(6) << v << "\n";
  }
  os << "(n=" << series << ", horizon=" << horizon << ", S=" << samples << ", seed=" << seed
     << ")\n";
  return os.str();
}

}  // namespace tlae
