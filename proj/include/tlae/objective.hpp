#pragma once

#include "tlae/model.hpp"
#include "tlae/rng.hpp"
#include "tlae/tape.hpp"

namespace tlae {

struct LossBreakdown {
  double total = 0.0;
  double recon = 0.0;   // Y term
  double latent = 0.0;  // X term (l_q error, or Gaussian NLL incl. its constant)
  double lambda = 0.0;
  int p = 1;
  int q = 2;
};

struct LossVars {
  Var total;
  Var recon;
  Var latent;
  LossBreakdown values;
};

// recon  = ||Y - Yhat||_p^p / (n b)
// latent = sum_{i=L}^{b-1} ||x_{i+1} - x^_{i+1}||_q^q / (d (b - L))
LossVars loss_deterministic(Tape& tape, Var y, Var yhat, Var x, Var xhat, std::size_t seq_len,
                            double lambda, int p, int q);

// recon as above; latent = -(1/(b-L)) sum_{i=L+1}^{b} log N(x_i; mu_{i-1}, I).
// The (d/2) log(2 pi) constant is kept in the value; it has no gradient.
LossVars loss_probabilistic(Tape& tape, Var y, Var yhat, Var x, Var mu, std::size_t seq_len,
                            double lambda, int p);

LossBreakdown loss_deterministic(const Matrix& y, const Matrix& yhat, const LatentPath& path,
                                 double lambda, int p, int q);
LossBreakdown loss_probabilistic(const Matrix& y, const Matrix& yhat, const LatentPath& path,
                                 double lambda, int p);

// x_sample = mu + eps with eps ~ N(0, I) drawn from `rng`.
Matrix draw_latent_noise(RngStream& rng, std::size_t latent_dim, std::size_t steps);
Var reparameterize(Tape& tape, Var mu, RngStream& rng);
Matrix reparameterize(const LatentPath& path, RngStream& rng);

}  // namespace tlae
