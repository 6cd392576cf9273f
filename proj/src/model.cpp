#include "tlae/model.hpp"

#include <cmath>

#include "tlae/error.hpp"
#include "tlae/rng.hpp"

namespace tlae {

const char* to_string(Mode mode) noexcept {
  return mode == Mode::deterministic ? "deterministic" : "probabilistic";
}

const char* to_string(Activation act) noexcept {
  return act == Activation::relu ? "relu" : "linear";
}

Mode parse_mode(const std::string& s) {
  if (s == "deterministic") return Mode::deterministic;
  if (s == "probabilistic") return Mode::probabilistic;
  fail(ErrorKind::config, "unknown mode '" + s + "' (expected deterministic|probabilistic)");
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  fail(ErrorKind::config, "unknown activation '" + s + "' (expected relu|linear)");
}

std::vector<std::size_t> ModelConfig::decoder_dims() const {
  std::vector<std::size_t> dims;
  for (std::size_t i = encoder_dims.size(); i-- > 1;) dims.push_back(encoder_dims[i - 1]);
  dims.push_back(input_dim);
  return dims;
}

void ModelConfig::validate() const {
  if (input_dim == 0) fail(ErrorKind::config, "model.input_dim must be positive");
  if (encoder_dims.empty()) fail(ErrorKind::config, "model.encoder_dims must be nonempty");
  for (std::size_t v : encoder_dims) {
    if (v == 0) fail(ErrorKind::config, "model.encoder_dims entries must be positive");
  }
  if (latent_dim() > input_dim) {
    fail(ErrorKind::config, "latent dim " + std::to_string(latent_dim()) +
                                " exceeds input dim " + std::to_string(input_dim));
  }
  if (lstm_layers == 0) fail(ErrorKind::config, "model.lstm_layers must be >= 1");
  if (lstm_hidden == 0) fail(ErrorKind::config, "model.lstm_hidden must be >= 1");
  if (seq_len == 0) fail(ErrorKind::config, "model.seq_len must be >= 1");
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t n = config.input_dim;
  const std::size_t d = config.latent_dim();
  const std::size_t h = config.lstm_hidden;
  auto add = [this](std::string name, std::size_t rows, std::size_t cols) {
    names_.push_back(std::move(name));
    tensors_.emplace_back(rows, cols);
  };
  std::size_t prev = n;
  for (std::size_t k = 0; k < config.encoder_dims.size(); ++k) {
    add("encoder." + std::to_string(k) + ".weight", config.encoder_dims[k], prev);
    add("encoder." + std::to_string(k) + ".bias", config.encoder_dims[k], 1);
    prev = config.encoder_dims[k];
  }
  const auto dec = config.decoder_dims();
  prev = d;
  for (std::size_t k = 0; k < dec.size(); ++k) {
    add("decoder." + std::to_string(k) + ".weight", dec[k], prev);
    add("decoder." + std::to_string(k) + ".bias", dec[k], 1);
    prev = dec[k];
  }
  for (std::size_t l = 0; l < config.lstm_layers; ++l) {
    const std::size_t in = l == 0 ? d : h;
    add("lstm." + std::to_string(l) + ".weight_input", 4 * h, in);
    add("lstm." + std::to_string(l) + ".weight_hidden", 4 * h, h);
    add("lstm." + std::to_string(l) + ".bias", 4 * h, 1);
  }
  add("projection.weight", d, h);
  add("projection.bias", d, 1);
}

ModelParams ModelParams::zeros(const ModelConfig& config) { return ModelParams(config); }

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p(config);
  RngStream rng(seed, 0);
  for (Matrix& t : p.tensors_) {
    if (t.cols() == 1) continue;  // biases
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols()));
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
  }
  const std::size_t h = config.lstm_hidden;
  for (std::size_t l = 0; l < config.lstm_layers; ++l) {
    Matrix& b = p.tensors_[p.lstm_bias(l)];
    for (std::size_t r = h; r < 2 * h; ++r) b(r, 0) = 1.0;
  }
  return p;
}

std::size_t ModelParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const Matrix& t : tensors_) n += t.size();
  return n;
}

BoundModel bind(Tape& tape, const ModelParams& params, bool track_gradients) {
  BoundModel m;
  m.params = &params;
  m.vars.reserve(params.tensors().size());
  for (std::size_t i = 0; i < params.tensors().size(); ++i) {
    m.vars.push_back(track_gradients ? tape.parameter(params[i], i)
                                     : tape.constant(params[i]));
  }
  return m;
}

namespace {

void require_rows(const Matrix& m, std::size_t rows, const char* what) {
  if (m.rows() != rows) {
    fail(ErrorKind::dimension, std::string(what) + ": expected " + std::to_string(rows) +
                                   " rows, got " + m.shape_string());
  }
}

// Feed-forward stack; activation after every layer except the last.
Var feed_forward(Tape& tape, const BoundModel& model, Var x, std::size_t first_tensor,
                 std::size_t layers) {
  const bool relu = model.params->config().activation == Activation::relu;
  for (std::size_t k = 0; k < layers; ++k) {
    const Var w = model.vars[first_tensor + 2 * k];
    const Var b = model.vars[first_tensor + 2 * k + 1];
    x = tape.add_bias(tape.matmul(w, x), b);
    if (relu && k + 1 < layers) x = tape.relu(x);
  }
  return x;
}

// Standard LSTM cell (no peepholes) given the precomputed input projection.
void lstm_cell(Tape& tape, const BoundModel& model, std::size_t layer, Var input_proj, Var& h,
               Var& c) {
  const ModelParams& p = *model.params;
  const std::size_t hd = p.config().lstm_hidden;
  Var z = tape.add(input_proj, tape.matmul(model.vars[p.lstm_hidden_weight(layer)], h));
  z = tape.add_bias(z, model.vars[p.lstm_bias(layer)]);
  const Var i = tape.sigmoid(tape.slice_rows(z, 0, hd));
  const Var f = tape.sigmoid(tape.slice_rows(z, hd, 2 * hd));
  const Var g = tape.tanh(tape.slice_rows(z, 2 * hd, 3 * hd));
  const Var o = tape.sigmoid(tape.slice_rows(z, 3 * hd, 4 * hd));
  c = tape.add(tape.mul(f, c), tape.mul(i, g));
  h = tape.mul(o, tape.tanh(c));
}

Var project(Tape& tape, const BoundModel& model, Var top_hidden) {
  const ModelParams& p = *model.params;
  return tape.add_bias(tape.matmul(model.vars[p.projection_weight()], top_hidden),
                       model.vars[p.projection_bias()]);
}

}  // namespace

Var encode(Tape& tape, const BoundModel& model, Var y) {
  const ModelConfig& cfg = model.params->config();
  require_rows(tape.value(y), cfg.input_dim, "encode");
  return feed_forward(tape, model, y, 0, cfg.encoder_dims.size());
}

Var decode(Tape& tape, const BoundModel& model, Var x) {
  const ModelConfig& cfg = model.params->config();
  require_rows(tape.value(x), cfg.latent_dim(), "decode");
  return feed_forward(tape, model, x, model.params->decoder_weight(0), cfg.encoder_dims.size());
}

LstmState lstm_zero_state(Tape& tape, const BoundModel& model, std::size_t batch) {
  const ModelConfig& cfg = model.params->config();
  LstmState s;
  const Var zero = tape.constant(Matrix(cfg.lstm_hidden, batch));
  s.h.assign(cfg.lstm_layers, zero);
  s.c.assign(cfg.lstm_layers, zero);
  return s;
}

Var lstm_step(Tape& tape, const BoundModel& model, LstmState& state, Var x) {
  const ModelParams& p = *model.params;
  require_rows(tape.value(x), p.config().latent_dim(), "lstm_step");
  Var input = x;
  for (std::size_t l = 0; l < p.config().lstm_layers; ++l) {
    const Var proj = tape.matmul(model.vars[p.lstm_input_weight(l)], input);
    lstm_cell(tape, model, l, proj, state.h[l], state.c[l]);
    input = state.h[l];
  }
  return project(tape, model, input);
}

Var lstm_forecast(Tape& tape, const BoundModel& model, Var x) {
  const ModelParams& p = *model.params;
  const ModelConfig& cfg = p.config();
  const Matrix& xv = tape.value(x);
  require_rows(xv, cfg.latent_dim(), "lstm_forecast");
  const std::size_t b = xv.cols();
  const std::size_t L = cfg.seq_len;
  if (b <= L) {
    fail(ErrorKind::contract, "window too short: b=" + std::to_string(b) +
                                  " must exceed seq_len L=" + std::to_string(L));
  }
  const std::size_t steps = b - 1;
  // Layer-major unroll: each layer's input projection is one matmul over all
  // steps. Column j of a product does not depend on other columns, so this
  // matches lstm_step bit for bit.
  Var layer_input = tape.slice_cols(x, 0, steps);
  std::vector<Var> hs(steps);
  for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
    const Var proj_all = tape.matmul(model.vars[p.lstm_input_weight(l)], layer_input);
    Var h = tape.constant(Matrix(cfg.lstm_hidden, 1));
    Var c = h;
    for (std::size_t t = 0; t < steps; ++t) {
      lstm_cell(tape, model, l, tape.slice_cols(proj_all, t, t + 1), h, c);
      hs[t] = h;
    }
    if (l + 1 < cfg.lstm_layers) layer_input = tape.concat_cols(hs);
  }
  // Steps with 1-based input index i >= L emit x^_{i+1}.
  const Var top = tape.concat_cols(std::span<const Var>(hs).subspan(L - 1));
  return project(tape, model, top);
}

BatchVars forward_batch(Tape& tape, const BoundModel& model, Var y, const Matrix* latent_noise) {
  const std::size_t L = model.params->config().seq_len;
  BatchVars out;
  out.x = encode(tape, model, y);
  out.mu = lstm_forecast(tape, model, out.x);
  out.decoded = out.mu;
  if (latent_noise != nullptr) {
    require_same_shape(tape.value(out.mu), *latent_noise, "forward_batch: latent noise");
    out.decoded = tape.add(out.mu, tape.constant(*latent_noise));
  }
  const Var parts[] = {tape.slice_cols(out.x, 0, L), out.decoded};
  out.yhat = decode(tape, model, tape.concat_cols(parts));
  return out;
}

Matrix encode(const ModelParams& params, const Matrix& y) {
  Tape tape;
  const BoundModel m = bind(tape, params, false);
  return tape.value(encode(tape, m, tape.constant(y)));
}

Matrix decode(const ModelParams& params, const Matrix& x) {
  Tape tape;
  const BoundModel m = bind(tape, params, false);
  return tape.value(decode(tape, m, tape.constant(x)));
}

Matrix lstm_forecast(const ModelParams& params, const Matrix& x) {
  Tape tape;
  const BoundModel m = bind(tape, params, false);
  return tape.value(lstm_forecast(tape, m, tape.constant(x)));
}

BatchOutput forward_batch(const ModelParams& params, const Matrix& y) {
  Tape tape;
  const BoundModel m = bind(tape, params, false);
  const BatchVars v = forward_batch(tape, m, tape.constant(y));
  return {tape.value(v.yhat), {tape.value(v.x), tape.value(v.mu)}};
}

}  // namespace tlae
