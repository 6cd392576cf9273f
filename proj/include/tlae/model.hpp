#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tlae/matrix.hpp"
#include "tlae/tape.hpp"

namespace tlae {

enum class Mode { deterministic, probabilistic };
// Activation between encoder/decoder layers. `linear` strips it (ablation).
enum class Activation { relu, linear };

const char* to_string(Mode mode) noexcept;
const char* to_string(Activation act) noexcept;
Mode parse_mode(const std::string& s);
Activation parse_activation(const std::string& s);

struct ModelConfig {
  std::size_t input_dim = 0;               // n
  std::vector<std::size_t> encoder_dims;   // last entry is the latent dim d
  std::size_t lstm_layers = 1;
  std::size_t lstm_hidden = 32;
  std::size_t seq_len = 1;                 // L, LSTM burn-in steps per window
  Mode mode = Mode::deterministic;
  Activation activation = Activation::relu;

  std::size_t latent_dim() const { return encoder_dims.back(); }
  // Reversed encoder sizes ending at n, e.g. [96,64,32,16] -> [32,64,96,n].
  std::vector<std::size_t> decoder_dims() const;
  // Throws config errors. Requires d <= n (d == n only for identity probes).
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// All learnable weights in a fixed canonical order:
//   encoder (W, b) per layer, decoder (W, b) per layer,
//   LSTM (W_input, W_hidden, b) per layer with gate rows [input|forget|cell|output],
//   projection (W, b) from the top hidden state to the latent dim.
class ModelParams {
 public:
  ModelParams() = default;

  // Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)]; biases 0 except forget gates (1.0).
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);
  static ModelParams zeros(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }
  std::vector<Matrix>& tensors() noexcept { return tensors_; }
  const std::vector<Matrix>& tensors() const noexcept { return tensors_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t parameter_count() const noexcept;

  std::size_t encoder_weight(std::size_t layer) const { return 2 * layer; }
  std::size_t encoder_bias(std::size_t layer) const { return 2 * layer + 1; }
  std::size_t decoder_weight(std::size_t layer) const { return decoder_offset() + 2 * layer; }
  std::size_t decoder_bias(std::size_t layer) const { return decoder_offset() + 2 * layer + 1; }
  std::size_t lstm_input_weight(std::size_t layer) const { return lstm_offset() + 3 * layer; }
  std::size_t lstm_hidden_weight(std::size_t layer) const { return lstm_offset() + 3 * layer + 1; }
  std::size_t lstm_bias(std::size_t layer) const { return lstm_offset() + 3 * layer + 2; }
  std::size_t projection_weight() const { return tensors_.size() - 2; }
  std::size_t projection_bias() const { return tensors_.size() - 1; }

  Matrix& operator[](std::size_t i) { return tensors_[i]; }
  const Matrix& operator[](std::size_t i) const { return tensors_[i]; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  explicit ModelParams(const ModelConfig& config);
  std::size_t decoder_offset() const { return 2 * config_.encoder_dims.size(); }
  std::size_t lstm_offset() const { return 4 * config_.encoder_dims.size(); }

  ModelConfig config_;
  std::vector<Matrix> tensors_;
  std::vector<std::string> names_;
};

// Model weights registered on a tape, either as tracked parameters or constants.
struct BoundModel {
  const ModelParams* params = nullptr;
  std::vector<Var> vars;
};

BoundModel bind(Tape& tape, const ModelParams& params, bool track_gradients);

// Recurrent state per LSTM layer; each matrix is hidden x batch.
struct LstmState {
  std::vector<Var> h;
  std::vector<Var> c;
};

Var encode(Tape& tape, const BoundModel& model, Var y);
Var decode(Tape& tape, const BoundModel& model, Var x);
LstmState lstm_zero_state(Tape& tape, const BoundModel& model, std::size_t batch);
// Consumes one latent column block (d x batch) and returns the projected
// one-step-ahead prediction (d x batch).
Var lstm_step(Tape& tape, const BoundModel& model, LstmState& state, Var x);
// Unrolls over x_1..x_{b-1} from zero state; returns predictions x^_{L+1..b}
// as a d x (b-L) matrix. The first L steps are burn-in.
Var lstm_forecast(Tape& tape, const BoundModel& model, Var x);

struct BatchVars {
  Var yhat;     // n x b
  Var x;        // d x b, encoder output
  Var mu;       // d x (b-L), LSTM predictions
  Var decoded;  // d x (b-L), latent actually decoded (mu, or mu + noise)
};

// Two-part reconstruction: columns 1..L decode the encoder latents directly,
// columns L+1..b decode the LSTM predictions. With `latent_noise` (d x (b-L))
// the decoded latents are mu + noise, the reparameterised sample.
BatchVars forward_batch(Tape& tape, const BoundModel& model, Var y,
                        const Matrix* latent_noise = nullptr);

// Matrix-level conveniences (run on a private tape, no gradients).
struct LatentPath {
  Matrix x;     // d x b
  Matrix xhat;  // d x (b-L); also the Gaussian means in probabilistic mode
  const Matrix& mu() const noexcept { return xhat; }
};

struct BatchOutput {
  Matrix yhat;
  LatentPath path;
};

Matrix encode(const ModelParams& params, const Matrix& y);
Matrix decode(const ModelParams& params, const Matrix& x);
Matrix lstm_forecast(const ModelParams& params, const Matrix& x);
BatchOutput forward_batch(const ModelParams& params, const Matrix& y);

}  // namespace tlae
