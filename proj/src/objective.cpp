#include "tlae/objective.hpp"

#include "tlae/error.hpp"

namespace tlae {

namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0)) fail(ErrorKind::config, "lambda must be >= 0");
}

void check_order(int order, const char* name) {
  if (order != 1 && order != 2) {
    fail(ErrorKind::config, std::string(name) + " must be 1 or 2, got " + std::to_string(order));
  }
}

Var norm_power(Tape& tape, Var r, int order) {
  return order == 1 ? tape.sum_abs(r) : tape.sum_squares(r);
}

struct Shapes {
  std::size_t n, b, d, L;
};

Shapes check_shapes(const Tape& tape, Var y, Var yhat, Var x, Var xhat, std::size_t seq_len) {
  const Matrix& yv = tape.value(y);
  const Matrix& xv = tape.value(x);
  require_same_shape(yv, tape.value(yhat), "loss: Y vs Yhat");
  const std::size_t b = yv.cols();
  if (b <= seq_len) {
    fail(ErrorKind::contract, "loss: window b=" + std::to_string(b) +
                                  " must exceed seq_len " + std::to_string(seq_len));
  }
  if (xv.cols() != b) {
    fail(ErrorKind::dimension, "loss: latent path " + xv.shape_string() +
                                   " does not span the window of " + std::to_string(b));
  }
  const Matrix& xh = tape.value(xhat);
  if (xh.rows() != xv.rows() || xh.cols() != b - seq_len) {
    fail(ErrorKind::dimension, "loss: predictions " + xh.shape_string() + " expected " +
                                   std::to_string(xv.rows()) + "x" + std::to_string(b - seq_len));
  }
  return {yv.rows(), b, xv.rows(), seq_len};
}

LossVars combine(Tape& tape, Var recon, Var latent, double lambda, int p, int q) {
  LossVars out;
  out.recon = recon;
  out.latent = latent;
  out.total = tape.add(recon, tape.scale(latent, lambda));
  out.values.recon = tape.scalar(recon);
  out.values.latent = tape.scalar(latent);
  out.values.total = tape.scalar(out.total);
  out.values.lambda = lambda;
  out.values.p = p;
  out.values.q = q;
  return out;
}

}  // namespace

LossVars loss_deterministic(Tape& tape, Var y, Var yhat, Var x, Var xhat, std::size_t seq_len,
                            double lambda, int p, int q) {
  check_lambda(lambda);
  check_order(p, "p");
  check_order(q, "q");
  const Shapes s = check_shapes(tape, y, yhat, x, xhat, seq_len);
  const Var recon = tape.scale(norm_power(tape, tape.sub(y, yhat), p),
                               1.0 / static_cast<double>(s.n * s.b));
  const Var target = tape.slice_cols(x, s.L, s.b);
  const Var latent = tape.scale(norm_power(tape, tape.sub(target, xhat), q),
                                1.0 / static_cast<double>(s.d * (s.b - s.L)));
  return combine(tape, recon, latent, lambda, p, q);
}

LossVars loss_probabilistic(Tape& tape, Var y, Var yhat, Var x, Var mu, std::size_t seq_len,
                            double lambda, int p) {
  check_lambda(lambda);
  check_order(p, "p");
  const Shapes s = check_shapes(tape, y, yhat, x, mu, seq_len);
  const Var recon = tape.scale(norm_power(tape, tape.sub(y, yhat), p),
                               1.0 / static_cast<double>(s.n * s.b));
  const Var target = tape.slice_cols(x, s.L, s.b);
  const Var latent =
      tape.scale(tape.gaussian_nll(target, mu), 1.0 / static_cast<double>(s.b - s.L));
  return combine(tape, recon, latent, lambda, p, 2);
}

LossBreakdown loss_deterministic(const Matrix& y, const Matrix& yhat, const LatentPath& path,
                                 double lambda, int p, int q) {
  Tape tape;
  const std::size_t L = y.cols() - path.xhat.cols();
  return loss_deterministic(tape, tape.constant(y), tape.constant(yhat), tape.constant(path.x),
                            tape.constant(path.xhat), L, lambda, p, q)
      .values;
}

LossBreakdown loss_probabilistic(const Matrix& y, const Matrix& yhat, const LatentPath& path,
                                 double lambda, int p) {
  Tape tape;
  const std::size_t L = y.cols() - path.xhat.cols();
  return loss_probabilistic(tape, tape.constant(y), tape.constant(yhat), tape.constant(path.x),
                            tape.constant(path.xhat), L, lambda, p)
      .values;
}

Matrix draw_latent_noise(RngStream& rng, std::size_t latent_dim, std::size_t steps) {
  return sample_std_normal(rng, latent_dim, steps);
}

Var reparameterize(Tape& tape, Var mu, RngStream& rng) {
  const Matrix& m = tape.value(mu);
  return tape.add(mu, tape.constant(draw_latent_noise(rng, m.rows(), m.cols())));
}

Matrix reparameterize(const LatentPath& path, RngStream& rng) {
  return path.mu() + draw_latent_noise(rng, path.mu().rows(), path.mu().cols());
}

}  // namespace tlae
