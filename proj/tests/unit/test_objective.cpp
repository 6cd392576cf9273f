#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "tlae/metrics.hpp"
#include "tlae/objective.hpp"
#include "tlae/trainer.hpp"

namespace tlae {
namespace {

using test::error_kind_of;
using test::random_matrix;
using test::tiny_config;

const double kHalfLog2Pi = 0.5 * std::log(2.0 * M_PI);

TEST(LossDeterministic, PerfectFitIsZero) {
  const Matrix y = random_matrix(3, 5, 1), x = random_matrix(2, 5, 2);
  const LatentPath path{x, x.col_range(2, 5)};
  const LossBreakdown l = loss_deterministic(y, y, path, 0.5, 1, 2);
  EXPECT_EQ(l.total, 0.0);
  EXPECT_EQ(l.recon, 0.0);
  EXPECT_EQ(l.latent, 0.0);
}

TEST(LossDeterministic, ZeroLambdaLeavesReconstruction) {
  const Matrix y = random_matrix(3, 5, 3), yh = random_matrix(3, 5, 4);
  const LatentPath path{random_matrix(2, 5, 5), random_matrix(2, 3, 6)};
  const LossBreakdown l = loss_deterministic(y, yh, path, 0.0, 1, 2);
  EXPECT_EQ(l.total, l.recon);
  EXPECT_GT(l.latent, 0.0);
}

TEST(LossDeterministic, WorkedExample) {
  const Matrix y{{2, 4}}, yh{{2, 3}};
  const LatentPath path{Matrix{{0.7, 5}}, Matrix{{4}}};
  const LossBreakdown l = loss_deterministic(y, yh, path, 0.5, 1, 2);
  EXPECT_DOUBLE_EQ(l.recon, 0.5);
  EXPECT_DOUBLE_EQ(l.latent, 1.0);
  EXPECT_DOUBLE_EQ(l.total, 1.0);
  EXPECT_EQ(l.lambda, 0.5);
}

TEST(LossDeterministic, TotalIsReconPlusWeightedLatent) {
  for (int p = 1; p <= 2; ++p) {
    for (int q = 1; q <= 2; ++q) {
      const Matrix y = random_matrix(4, 6, 7), yh = random_matrix(4, 6, 8);
      const LatentPath path{random_matrix(3, 6, 9), random_matrix(3, 2, 10)};
      const LossBreakdown l = loss_deterministic(y, yh, path, 0.37, p, q);
      EXPECT_NEAR(l.total, l.recon + 0.37 * l.latent, 1e-12);
      EXPECT_GE(l.recon, 0.0);
      EXPECT_GE(l.latent, 0.0);
    }
  }
}

TEST(LossDeterministic, LatentTermEqualsMse) {
  const LatentPath path{random_matrix(3, 8, 11), random_matrix(3, 5, 12)};
  const Matrix y = random_matrix(2, 8, 13);
  const double latent = loss_deterministic(y, y, path, 1.0, 1, 2).latent;
  EXPECT_NEAR(latent, mse(path.xhat, path.x.col_range(3, 8)), 1e-12);
  double direct = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t r = 0; r < 3; ++r) direct += std::pow(path.x(r, 3 + j) - path.xhat(r, j), 2);
  }
  EXPECT_NEAR(latent, direct / 15.0, 1e-12);
}

TEST(LossDeterministic, NegativeLambdaIsConfigError) {
  const Matrix y = random_matrix(2, 3, 1);
  const LatentPath path{random_matrix(1, 3, 2), random_matrix(1, 1, 3)};
  EXPECT_EQ(error_kind_of([&] { loss_deterministic(y, y, path, -0.1, 1, 2); }), ErrorKind::config);
  EXPECT_EQ(error_kind_of([&] { loss_probabilistic(y, y, path, -0.1, 1); }), ErrorKind::config);
}

TEST(LossProbabilistic, LatentAtItsMeanIsTheGaussianConstant) {
  const Matrix y = random_matrix(2, 4, 1);
  const Matrix x{{1, 2, 3, 4}};
  const LatentPath path{x, x.col_range(1, 4)};
  const LossBreakdown l = loss_probabilistic(y, y, path, 0.005, 1);
  EXPECT_NEAR(l.latent, kHalfLog2Pi, 1e-15);
  EXPECT_NEAR(kHalfLog2Pi, 0.9189, 5e-5);
}

TEST(LossProbabilistic, LatentMinusConstantIsHalfScaledDeterministic) {
  const Matrix y = random_matrix(3, 7, 2);
  const LatentPath path{random_matrix(4, 7, 3), random_matrix(4, 4, 4)};
  const double prob = loss_probabilistic(y, y, path, 1.0, 1).latent;
  const double det = loss_deterministic(y, y, path, 1.0, 1, 2).latent;
  EXPECT_NEAR(prob - 4 * kHalfLog2Pi, 0.5 * det * 4, 1e-12);
}

TEST(LossProbabilistic, ZeroLambdaLeavesReconstruction) {
  const Matrix y = random_matrix(3, 5, 5), yh = random_matrix(3, 5, 6);
  const LatentPath path{random_matrix(2, 5, 7), random_matrix(2, 2, 8)};
  const LossBreakdown l = loss_probabilistic(y, yh, path, 0.0, 2);
  EXPECT_EQ(l.total, l.recon);
  EXPECT_NEAR(l.recon, mse(yh, y), 1e-12);
}

TEST(Reparameterize, ZeroNoiseDecodesTheMean) {
  const ModelParams p = ModelParams::initialize(tiny_config(6, {5, 3}, 4, 3, Mode::probabilistic), 1);
  const Matrix y = random_matrix(6, 7, 2);
  const Matrix zero(3, 4);
  Tape t;
  const BoundModel m = bind(t, p, false);
  const BatchVars b = forward_batch(t, m, t.constant(y), &zero);
  EXPECT_EQ(t.value(b.decoded), t.value(b.mu));
  EXPECT_EQ(t.value(b.yhat), forward_batch(p, y).yhat);
}

TEST(Reparameterize, MonteCarloMoments) {
  const LatentPath path{Matrix(2, 4), Matrix{{0.3, -1.2}, {2.0, 0.0}}};
  RngStream rng(5, 0);
  constexpr int N = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double v = reparameterize(path, rng)(0, 1);
    s += v;
    s2 += v * v;
  }
  const double mean = s / N, var = s2 / N - mean * mean;
  EXPECT_NEAR(mean, -1.2, 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Reparameterize, TapeVersionAddsNoiseAndKeepsGradientOnMean) {
  const Matrix mu = random_matrix(2, 3, 9);
  RngStream a(3, 1), b(3, 1);
  Tape t;
  const Var vm = t.parameter(mu, 0);
  const Var xs = reparameterize(t, vm, a);
  EXPECT_LT(max_abs_diff(t.value(xs), mu + draw_latent_noise(b, 2, 3)), 1e-15);
  const GradientSet g = t.backward(t.sum(xs), std::vector<Matrix>{mu});
  EXPECT_EQ(g[0], Matrix(2, 3, 1.0));
}

TEST(Objective, InvariantToRelabellingSeries) {
  const ModelConfig c = tiny_config(5, {4, 2}, 3, 2);
  const ModelParams p = ModelParams::initialize(c, 10);
  const Matrix y = random_matrix(5, 6, 11);
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};

  ModelParams q = p;
  Matrix yp(5, 6);
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c2 = 0; c2 < 6; ++c2) yp(r, c2) = y(perm[r], c2);
  }
  const Matrix& we = p[p.encoder_weight(0)];
  Matrix& wq = q[q.encoder_weight(0)];
  for (std::size_t r = 0; r < we.rows(); ++r) {
    for (std::size_t k = 0; k < 5; ++k) wq(r, k) = we(r, perm[k]);
  }
  const std::size_t last = c.decoder_dims().size() - 1;
  const Matrix& wd = p[p.decoder_weight(last)];
  const Matrix& bd = p[p.decoder_bias(last)];
  for (std::size_t k = 0; k < 5; ++k) {
    for (std::size_t col = 0; col < wd.cols(); ++col) {
      q[q.decoder_weight(last)](k, col) = wd(perm[k], col);
    }
    q[q.decoder_bias(last)](k, 0) = bd(perm[k], 0);
  }
  TrainConfig tc;
  tc.batch_size = 6;
  tc.p = 2;
  tc.q = 2;
  tc.lambda = 0.7;
  EXPECT_NEAR(batch_loss(p, y, tc, nullptr).total, batch_loss(q, yp, tc, nullptr).total, 1e-12);
}

// Linear one-layer decoder y^ = A x + c: with p = 2 the expected
// reconstruction over eps adds ||A||_F^2 per predicted column.
TEST(Objective, SampledLossMatchesAnalyticExpectationOnLinearToy) {
  ModelConfig c = tiny_config(4, {2}, 3, 2, Mode::probabilistic);
  c.activation = Activation::linear;
  const ModelParams p = ModelParams::initialize(c, 12);
  const Matrix y = random_matrix(4, 5, 13);
  TrainConfig tc;
  tc.batch_size = 5;
  tc.p = 2;
  tc.lambda = 0.005;
  const Matrix zero(2, 3);
  const double base = batch_loss(p, y, tc, &zero).total;
  const double a2 = std::pow(frobenius_norm(p[p.decoder_weight(0)]), 2);
  const double expected = base + 3 * a2 / (4.0 * 5.0);

  constexpr int S = 10000;
  RngStream rng(14, 0);
  std::vector<double> v(S);
  for (int s = 0; s < S; ++s) {
    const Matrix eps = draw_latent_noise(rng, 2, 3);
    v[s] = batch_loss(p, y, tc, &eps).total;
  }
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / S;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double se = std::sqrt(var / (S - 1) / S);
  EXPECT_LT(std::fabs(mean - expected), 3 * se) << "mean " << mean << " expected " << expected;
}

}  // namespace
}  // namespace tlae
