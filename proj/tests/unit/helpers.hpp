#pragma once

#include <gtest/gtest.h>

#include "tlae/error.hpp"
#include "tlae/matrix.hpp"
#include "tlae/model.hpp"
#include "tlae/rng.hpp"

namespace tlae::test {

inline Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  RngStream rng(seed, 99);
  Matrix m(r, c);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

inline ModelConfig tiny_config(std::size_t n = 6, std::vector<std::size_t> enc = {5, 3},
                               std::size_t hidden = 4, std::size_t L = 3,
                               Mode mode = Mode::deterministic) {
  ModelConfig c;
  c.input_dim = n;
  c.encoder_dims = std::move(enc);
  c.lstm_layers = 1;
  c.lstm_hidden = hidden;
  c.seq_len = L;
  c.mode = mode;
  return c;
}

// Encoder and decoder are single identity layers (d = n); LSTM and projection zero.
inline ModelParams identity_autoencoder(std::size_t n, std::size_t L) {
  ModelConfig c = tiny_config(n, {n}, 3, L);
  ModelParams p = ModelParams::zeros(c);
  p[p.encoder_weight(0)] = Matrix::identity(n);
  p[p.decoder_weight(0)] = Matrix::identity(n);
  return p;
}

template <class Fn>
ErrorKind error_kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a tlae::Error";
  return ErrorKind::contract;
}

template <class Fn>
std::string error_message_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected a tlae::Error";
  return {};
}

}  // namespace tlae::test
