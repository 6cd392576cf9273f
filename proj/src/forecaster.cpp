#include "tlae/forecaster.hpp"

#include <algorithm>

#include "tlae/error.hpp"
#include "tlae/metrics.hpp"
#include "tlae/rng.hpp"
#include "tlae/tape.hpp"

namespace tlae {

void RollingSpec::validate() const {
  if (horizon == 0) fail(ErrorKind::config, "eval.horizon must be >= 1");
  if (windows == 0) fail(ErrorKind::config, "eval.windows must be >= 1");
  if (samples == 0) fail(ErrorKind::config, "eval.samples must be >= 1");
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    if (!(quantiles[i] > 0.0 && quantiles[i] < 1.0)) {
      fail(ErrorKind::config, "eval.quantiles must lie in (0, 1)");
    }
    if (i > 0 && !(quantiles[i] > quantiles[i - 1])) {
      fail(ErrorKind::config, "eval.quantiles must be strictly increasing");
    }
  }
}

namespace {

void check_context(const ModelParams& params, const Matrix& context, std::size_t tau) {
  const ModelConfig& cfg = params.config();
  if (tau == 0) fail(ErrorKind::config, "forecast horizon must be >= 1");
  if (context.rows() != cfg.input_dim) {
    fail(ErrorKind::dimension, "forecast context has " + std::to_string(context.rows()) +
                                   " series, model expects " + std::to_string(cfg.input_dim));
  }
  if (context.cols() < cfg.seq_len) {
    fail(ErrorKind::data, "forecast context has " + std::to_string(context.cols()) +
                              " steps, model needs at least L=" + std::to_string(cfg.seq_len));
  }
}

// Runs the LSTM over the encoded context; returns the first prediction.
Var warm_up(Tape& tape, const BoundModel& model, const Matrix& context, LstmState& state) {
  const Var x = encode(tape, model, tape.constant(context));
  state = lstm_zero_state(tape, model, 1);
  Var pred;
  for (std::size_t t = 0; t < context.cols(); ++t) {
    pred = lstm_step(tape, model, state, tape.slice_cols(x, t, t + 1));
  }
  return pred;
}

LstmState replicate(Tape& tape, const LstmState& s, std::size_t copies) {
  LstmState out;
  for (std::size_t l = 0; l < s.h.size(); ++l) {
    const std::vector<Var> hs(copies, s.h[l]);
    const std::vector<Var> cs(copies, s.c[l]);
    out.h.push_back(tape.concat_cols(hs));
    out.c.push_back(tape.concat_cols(cs));
  }
  return out;
}

}  // namespace

Matrix forecast_latent_means(const ModelParams& params, const Matrix& context, std::size_t tau) {
  check_context(params, context, tau);
  Tape tape;
  const BoundModel model = bind(tape, params, false);
  LstmState state;
  Var pred = warm_up(tape, model, context, state);
  std::vector<Var> path{pred};
  for (std::size_t h = 1; h < tau; ++h) {
    pred = lstm_step(tape, model, state, pred);
    path.push_back(pred);
  }
  return tape.value(tape.concat_cols(path));
}

Matrix forecast_point(const ModelParams& params, const Matrix& context, std::size_t tau) {
  return decode(params, forecast_latent_means(params, context, tau));
}

std::vector<Matrix> ensemble_quantiles(const std::vector<Matrix>& samples,
                                       const std::vector<double>& levels) {
  std::vector<Matrix> out;
  if (levels.empty()) return out;
  if (samples.empty()) fail(ErrorKind::contract, "quantiles: no samples");
  const Matrix& first = samples.front();
  for (const Matrix& s : samples) require_same_shape(s, first, "quantiles: sample shapes");
  out.assign(levels.size(), Matrix(first.rows(), first.cols()));
  std::vector<double> buf(samples.size());
  for (std::size_t c = 0; c < first.size(); ++c) {
    for (std::size_t s = 0; s < samples.size(); ++s) buf[s] = samples[s].data()[c];
    std::sort(buf.begin(), buf.end());
    for (std::size_t q = 0; q < levels.size(); ++q) {
      out[q].data()[c] = quantile_sorted(buf, levels[q]);
    }
  }
  return out;
}

ForecastEnsemble forecast_ensemble(const ModelParams& params, const Matrix& context,
                                   std::size_t tau, std::size_t samples, std::uint64_t seed,
                                   const EnsembleOptions& options) {
  if (samples == 0) fail(ErrorKind::config, "ensemble needs at least one sample");
  check_context(params, context, tau);
  const std::size_t d = params.config().latent_dim();
  const std::size_t n = params.config().input_dim;

  Tape tape;
  const BoundModel model = bind(tape, params, false);
  LstmState state;
  Var mean = warm_up(tape, model, context, state);

  std::vector<RngStream> members;
  members.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) members.emplace_back(seed, s);
  auto draw = [&](const Matrix& centre) {
    // centre is d x 1 (shared mean) or d x S (per-member means).
    Matrix x(d, samples);
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t r = 0; r < d; ++r) {
        const double mu = centre.cols() == 1 ? centre(r, 0) : centre(r, s);
        x(r, s) = mu + options.noise_scale * members[s].normal();
      }
    }
    return x;
  };

  ForecastEnsemble out;
  std::vector<Var> mean_path;
  std::vector<Matrix> draws;  // d x S per horizon step
  LstmState member_state;
  Var member_mean;
  for (std::size_t h = 0; h < tau; ++h) {
    if (h > 0) mean = lstm_step(tape, model, state, mean);
    mean_path.push_back(mean);
    if (!options.trajectory_sampling) {
      draws.push_back(draw(tape.value(mean)));
      continue;
    }
    if (h == 0) {
      member_state = replicate(tape, state, samples);
      member_mean = mean;
    } else {
      member_mean = lstm_step(tape, model, member_state, tape.constant(draws.back()));
    }
    draws.push_back(draw(tape.value(member_mean)));
  }
  out.point = decode(params, tape.value(tape.concat_cols(mean_path)));

  out.samples.assign(samples, Matrix(n, tau));
  for (std::size_t h = 0; h < tau; ++h) {
    const Matrix decoded = decode(params, draws[h]);  // n x S
    for (std::size_t s = 0; s < samples; ++s)
      for (std::size_t i = 0; i < n; ++i) out.samples[s](i, h) = decoded(i, s);
  }
  return out;
}

RollingResult rolling_evaluate(const ModelParams& params, const Matrix& series,
                               const RollingSpec& spec, std::uint64_t seed,
                               const EnsembleOptions& options) {
  spec.validate();
  const ModelConfig& cfg = params.config();
  const std::size_t ctx = spec.context_for(cfg);
  if (ctx < cfg.seq_len) {
    fail(ErrorKind::config, "eval.context " + std::to_string(ctx) + " is shorter than L=" +
                                std::to_string(cfg.seq_len));
  }
  const std::size_t test = spec.horizon * spec.windows;
  const std::size_t T = series.cols();
  if (T < ctx + test) {
    fail(ErrorKind::data, "rolling evaluation needs " + std::to_string(ctx + test) +
                              " steps (context " + std::to_string(ctx) + " + " +
                              std::to_string(spec.windows) + " x " + std::to_string(spec.horizon) +
                              "), series has " + std::to_string(T));
  }
  if (series.rows() != cfg.input_dim) {
    fail(ErrorKind::dimension, "series has " + std::to_string(series.rows()) +
                                   " rows, model expects " + std::to_string(cfg.input_dim));
  }

  RollingResult res;
  res.start = T - test;
  res.actuals = series.col_range(res.start, T);
  const bool ensemble = spec.samples > 1 || !spec.quantiles.empty();
  res.forecast.point = Matrix(series.rows(), test);
  if (ensemble) res.forecast.samples.assign(spec.samples, Matrix(series.rows(), test));

  for (std::size_t w = 0; w < spec.windows; ++w) {
    const std::size_t origin = res.start + w * spec.horizon;
    const Matrix context = series.col_range(origin - ctx, origin);
    const std::size_t col = w * spec.horizon;
    if (!ensemble) {
      res.forecast.point.set_col_range(col, forecast_point(params, context, spec.horizon));
      continue;
    }
    const ForecastEnsemble fw = forecast_ensemble(params, context, spec.horizon, spec.samples,
                                                  mix_seed(seed, w), options);
    res.forecast.point.set_col_range(col, fw.point);
    for (std::size_t s = 0; s < spec.samples; ++s) {
      res.forecast.samples[s].set_col_range(col, fw.samples[s]);
    }
  }
  if (ensemble) {
    res.forecast.levels = spec.quantiles;
    res.forecast.quantiles = ensemble_quantiles(res.forecast.samples, spec.quantiles);
  }
  return res;
}

}  // namespace tlae
