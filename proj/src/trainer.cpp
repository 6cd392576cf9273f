#include "tlae/trainer.hpp"

#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "tlae/checkpoint.hpp"
#include "tlae/error.hpp"
#include "tlae/forecaster.hpp"
#include "tlae/metrics.hpp"
#include "tlae/rng.hpp"

namespace tlae {

namespace {
constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;
constexpr std::uint64_t kValidationSalt = 0x76616c6964ULL;
constexpr std::size_t kCrpsQuantiles = 20;
}  // namespace

void TrainConfig::validate(const ModelConfig& model) const {
  if (batch_size <= model.seq_len) {
    fail(ErrorKind::config, "train.batch_size " + std::to_string(batch_size) +
                                " must exceed model.seq_len " + std::to_string(model.seq_len));
  }
  if (stride == 0) fail(ErrorKind::config, "train.stride must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorKind::config, "train.learning_rate must be positive");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    fail(ErrorKind::config, "train.lambda must be >= 0");
  }
  if (p != 1 && p != 2) fail(ErrorKind::config, "train.p must be 1 or 2");
  if (q != 1 && q != 2) fail(ErrorKind::config, "train.q must be 1 or 2");
  if (!(clip_norm >= 0.0)) fail(ErrorKind::config, "train.clip_norm must be >= 0");
  if (validation > 0) {
    const std::size_t h = validation_horizon == 0 ? validation : validation_horizon;
    if (validation % h != 0) {
      fail(ErrorKind::config, "train.validation must be a multiple of train.validation_horizon");
    }
    if (model.mode == Mode::probabilistic && validation_samples < kCrpsQuantiles) {
      fail(ErrorKind::config, "train.validation_samples must be >= 20 in probabilistic mode");
    }
  }
}

std::vector<Window> make_windows(std::size_t total_steps, std::size_t batch, std::size_t stride) {
  if (batch == 0 || stride == 0) fail(ErrorKind::config, "windows: batch and stride must be >= 1");
  if (total_steps < batch) {
    fail(ErrorKind::data, "dataset too short: " + std::to_string(total_steps) +
                              " training steps, window needs " + std::to_string(batch));
  }
  std::vector<Window> out;
  for (std::size_t s = 0; s + batch <= total_steps; s += stride) out.push_back({s, s + batch});
  return out;
}

AdamState AdamState::for_shapes(const std::vector<Matrix>& params) {
  AdamState st;
  for (const Matrix& p : params) {
    st.m.emplace_back(p.rows(), p.cols());
    st.v.emplace_back(p.rows(), p.cols());
  }
  return st;
}

void adam_step(std::vector<Matrix>& params, const GradientSet& grads, AdamState& state, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    fail(ErrorKind::dimension, "adam: " + std::to_string(params.size()) + " parameters, " +
                                   std::to_string(grads.size()) + " gradients, " +
                                   std::to_string(state.m.size()) + " moment slots");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_same_shape(params[k], grads[k], "adam: parameter vs gradient");
    if (!grads[k].all_finite()) {
      fail(ErrorKind::numeric, "adam: non-finite gradient in parameter slot " + std::to_string(k) +
                                   " at step " + std::to_string(state.step + 1));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].data();
    auto g = grads[k].data();
    auto m = state.m[k].data();
    auto v = state.v[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.epsilon);
    }
  }
}

LossBreakdown batch_loss(const ModelParams& params, const Matrix& window, const TrainConfig& tc,
                         const Matrix* latent_noise, GradientSet* grads) {
  const ModelConfig& cfg = params.config();
  const bool probabilistic = cfg.mode == Mode::probabilistic;
  if (probabilistic && latent_noise == nullptr) {
    fail(ErrorKind::contract, "probabilistic batch loss needs a latent noise draw");
  }
  Tape tape;
  const BoundModel model = bind(tape, params, grads != nullptr);
  const Var y = tape.constant(window);
  const BatchVars fw = forward_batch(tape, model, y, probabilistic ? latent_noise : nullptr);
  const LossVars loss =
      probabilistic
          ? loss_probabilistic(tape, y, fw.yhat, fw.x, fw.mu, cfg.seq_len, tc.lambda, tc.p)
          : loss_deterministic(tape, y, fw.yhat, fw.x, fw.mu, cfg.seq_len, tc.lambda, tc.p, tc.q);
  if (grads != nullptr) *grads = tape.backward(loss.total, params.tensors());
  return loss.values;
}

Matrix training_noise(const ModelConfig& model, const TrainConfig& tc, std::size_t epoch,
                      std::size_t index) {
  if (model.mode != Mode::probabilistic) return {};
  RngStream rng(mix_seed(tc.seed, kNoiseSalt + epoch), index);
  return sample_std_normal(rng, model.latent_dim(), tc.batch_size - model.seq_len);
}

namespace {

struct EpochSums {
  double total = 0.0, recon = 0.0, latent = 0.0;
  void add(const LossBreakdown& l) {
    total += l.total;
    recon += l.recon;
    latent += l.latent;
  }
};

std::size_t fit_steps(const Matrix& series, const TrainConfig& tc) {
  if (series.cols() < tc.batch_size + tc.validation) {
    fail(ErrorKind::data, "series of " + std::to_string(series.cols()) +
                              " steps is shorter than window " + std::to_string(tc.batch_size) +
                              " plus validation " + std::to_string(tc.validation));
  }
  return series.cols() - tc.validation;
}

double global_norm(const GradientSet& grads) {
  double s = 0.0;
  for (const Matrix& g : grads)
    for (double v : g.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

LossBreakdown overall_loss(const ModelParams& params, const Matrix& series, const TrainConfig& tc,
                           std::size_t epoch) {
  tc.validate(params.config());
  const std::size_t T = fit_steps(series, tc);
  const auto windows = make_windows(T, tc.batch_size, tc.stride);
  EpochSums sums;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const Matrix noise = training_noise(params.config(), tc, epoch, w);
    sums.add(batch_loss(params, series.col_range(windows[w].begin, windows[w].end), tc, &noise));
  }
  const double k = static_cast<double>(windows.size());
  LossBreakdown out;
  out.total = sums.total / k;
  out.recon = sums.recon / k;
  out.latent = sums.latent / k;
  out.lambda = tc.lambda;
  out.p = tc.p;
  out.q = tc.q;
  return out;
}

double validation_score(const ModelParams& params, const Matrix& series, const TrainConfig& tc,
                        const Normalizer* normalizer) {
  if (tc.validation == 0) fail(ErrorKind::contract, "validation_score needs train.validation > 0");
  const bool probabilistic = params.config().mode == Mode::probabilistic;
  RollingSpec spec;
  spec.horizon = tc.validation_horizon == 0 ? tc.validation : tc.validation_horizon;
  spec.windows = tc.validation / spec.horizon;
  spec.samples = probabilistic ? tc.validation_samples : 1;
  RollingResult r = rolling_evaluate(params, series, spec, mix_seed(tc.seed, kValidationSalt));
  auto units = [&](const Matrix& m) { return normalizer ? normalizer->inverse(m) : m; };
  const Matrix actual = units(r.actuals);
  if (!probabilistic) return wape(units(r.forecast.point), actual);
  for (Matrix& s : r.forecast.samples) s = units(s);
  return crps_sum(r.forecast.samples, actual, kCrpsQuantiles);
}

FitResult fit(const Matrix& series, const ModelConfig& model, const TrainConfig& tc,
              const FitOptions& options) {
  model.validate();
  return fit(series, ModelParams::initialize(model, tc.seed), tc, options);
}

FitResult fit(const Matrix& series, ModelParams init, const TrainConfig& tc,
              const FitOptions& options) {
  const ModelConfig cfg = init.config();
  tc.validate(cfg);
  if (series.rows() != cfg.input_dim) {
    fail(ErrorKind::dimension, "training series has " + std::to_string(series.rows()) +
                                   " rows, model expects " + std::to_string(cfg.input_dim));
  }
  const std::size_t T = fit_steps(series, tc);
  const Matrix train = series.col_range(0, T);
  const auto windows = make_windows(T, tc.batch_size, tc.stride);
  const bool probabilistic = cfg.mode == Mode::probabilistic;

  FitResult res;
  res.params = init;
  ModelParams params = std::move(init);
  AdamState adam = AdamState::for_shapes(params.tensors());
  double best = INFINITY;
  GradientSet grads;

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochSums sums;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const Matrix window = train.col_range(windows[w].begin, windows[w].end);
      const Matrix noise = training_noise(cfg, tc, epoch, w);
      try {
        const LossBreakdown l = batch_loss(params, window, tc, probabilistic ? &noise : nullptr,
                                           &grads);
        if (!std::isfinite(l.total)) fail(ErrorKind::numeric, "loss is not finite");
        if (tc.clip_norm > 0.0) {
          const double norm = global_norm(grads);
          if (norm > tc.clip_norm) {
            for (Matrix& g : grads)
              for (double& v : g.data()) v *= tc.clip_norm / norm;
          }
        }
        // adam_step validates every gradient before touching any parameter.
        adam_step(params.tensors(), grads, adam, tc.learning_rate);
        sums.add(l);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::numeric) throw;
        std::string where = "training diverged at epoch " + std::to_string(epoch) + ", window " +
                            std::to_string(w) + " [" + std::to_string(windows[w].begin) + ", " +
                            std::to_string(windows[w].end) + "): " + e.what();
        if (!options.divergence_checkpoint.empty()) {
          save_checkpoint(options.divergence_checkpoint, params);
          where += "; last good parameters written to " + options.divergence_checkpoint.string();
        }
        fail(ErrorKind::numeric, where);
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.windows = windows.size();
    const double k = static_cast<double>(windows.size());
    rec.loss = sums.total / k;
    rec.recon = sums.recon / k;
    rec.latent = sums.latent / k;
    if (tc.validation > 0) {
      rec.validation_metric = probabilistic ? "crps-sum" : "wape";
      rec.validation = validation_score(params, series, tc, options.normalizer);
      if (*rec.validation < best) {
        best = *rec.validation;
        res.params = params;
        res.log.best_epoch = epoch;
      }
    } else {
      res.params = params;
      res.log.best_epoch = epoch;
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  res.final_params = std::move(params);
  return res;
}

std::string TrainingLog::record_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["windows"] = r.windows;
  j["loss"] = r.loss;
  j["recon"] = r.recon;
  j["latent"] = r.latent;
  if (r.validation) {
    j["validation_metric"] = r.validation_metric;
    j["validation"] = *r.validation;
  }
  j["seconds"] = r.seconds;
  return j.dump();
}

std::string TrainingLog::to_jsonl() const {
  std::string out;
  for (const EpochRecord& r : epochs) out += record_json(r) + "\n";
  return out;
}

}  // namespace tlae
