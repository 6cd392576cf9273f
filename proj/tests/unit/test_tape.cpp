#include <cmath>
#include <set>

#include "helpers.hpp"
#include "tlae/gradcheck.hpp"
#include "tlae/objective.hpp"
#include "tlae/tape.hpp"
#include "tlae/trainer.hpp"

namespace tlae {
namespace {

using test::error_kind_of;
using test::error_message_of;
using test::random_matrix;

TEST(Backward, SumGivesOnes) {
  const Matrix p = random_matrix(3, 4, 1);
  Tape t;
  const Var v = t.parameter(p, 0);
  const GradientSet g = t.backward(t.sum(v), std::vector<Matrix>{p});
  EXPECT_EQ(g[0], Matrix(3, 4, 1.0));
}

TEST(Backward, SquaredNormGivesTwiceParameter) {
  const Matrix p = random_matrix(2, 5, 2);
  Tape t;
  const Var v = t.parameter(p, 0);
  const GradientSet g = t.backward(t.sum_squares(v), std::vector<Matrix>{p});
  EXPECT_EQ(g[0], 2.0 * p);
}

TEST(Backward, NonScalarLossIsContractError) {
  const Matrix p = random_matrix(2, 2, 3);
  Tape t;
  const Var v = t.parameter(p, 0);
  EXPECT_EQ(error_kind_of([&] { t.backward(v, std::vector<Matrix>{p}); }), ErrorKind::contract);
}

TEST(Backward, NanIsNumericErrorNamingNode) {
  Matrix p = random_matrix(2, 2, 4);
  p(1, 1) = std::nan("");
  const auto run = [&] {
    Tape t;
    const Var v = t.parameter(p, 0);
    t.backward(t.sum(t.tanh(v)), std::vector<Matrix>{p});
  };
  EXPECT_EQ(error_kind_of(run), ErrorKind::numeric);
  const std::string msg = error_message_of(run);
  EXPECT_NE(msg.find("node"), std::string::npos) << msg;
  EXPECT_NE(msg.find("tanh"), std::string::npos) << msg;
}

TEST(Backward, UnusedParameterGetsZeroGradient) {
  const Matrix p = random_matrix(2, 2, 5), q = random_matrix(3, 1, 6);
  Tape t;
  const Var v = t.parameter(p, 0);
  const GradientSet g = t.backward(t.sum(v), std::vector<Matrix>{p, q});
  EXPECT_EQ(g[1], Matrix(3, 1));
}

TEST(Backward, L1SubgradientAtZeroIsZero) {
  const Matrix p{{0.0, 2.0, -3.0, 0.0}};
  Tape t;
  const Var v = t.parameter(p, 0);
  const GradientSet g = t.backward(t.sum_abs(v), std::vector<Matrix>{p});
  EXPECT_EQ(g[0], (Matrix{{0.0, 1.0, -1.0, 0.0}}));
  Tape t2;
  const Var v2 = t2.parameter(p, 0);
  EXPECT_EQ(t2.backward(t2.sum(t2.abs(v2)), std::vector<Matrix>{p})[0],
            (Matrix{{0.0, 1.0, -1.0, 0.0}}));
}

// Three-layer tanh/relu/sigmoid net exercising most primitives.
double three_layer(const std::vector<Matrix>& w, GradientSet* grads) {
  Tape t;
  std::vector<Var> v;
  for (std::size_t i = 0; i < w.size(); ++i) v.push_back(t.parameter(w[i], i));
  const Var x = t.constant(random_matrix(4, 6, 77));
  const Var h1 = t.tanh(t.add_bias(t.matmul(v[0], x), v[1]));
  const Var h2 = t.relu(t.add_bias(t.matmul(v[2], h1), v[3]));
  const Var out = t.sigmoid(t.matmul(v[4], h2));
  const Var parts[] = {t.slice_cols(out, 0, 2), t.slice_cols(out, 4, 6)};
  const Var joined = t.concat_cols(parts);
  const Var target = t.constant(random_matrix(2, 4, 78));
  const Var loss = t.add(t.sum_squares(t.sub(joined, target)),
                         t.scale(t.sum(t.exp(t.slice_rows(h1, 1, 3))), 0.1));
  if (grads) *grads = t.backward(loss, w);
  return t.scalar(loss);
}

TEST(Backward, ThreeLayerNetMatchesFiniteDifferences) {
  std::vector<Matrix> w = {random_matrix(5, 4, 11), random_matrix(5, 1, 12),
                           random_matrix(3, 5, 13), random_matrix(3, 1, 14, 0.1),
                           random_matrix(2, 3, 15)};
  GradientSet g;
  three_layer(w, &g);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    for (std::size_t i = 0; i < w[k].size(); ++i) {
      auto probe = w;
      probe[k].data()[i] += h;
      const double up = three_layer(probe, nullptr);
      probe[k].data()[i] -= 2 * h;
      const double down = three_layer(probe, nullptr);
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::fabs(fd - g[k].data()[i]) / std::max(1.0, std::fabs(g[k].data()[i])));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Tape, ReplayIsBitIdentical) {
  std::vector<Matrix> w = {random_matrix(5, 4, 21), random_matrix(5, 1, 22),
                           random_matrix(3, 5, 23), random_matrix(3, 1, 24),
                           random_matrix(2, 3, 25)};
  Tape t;
  std::vector<Var> v;
  for (std::size_t i = 0; i < w.size(); ++i) v.push_back(t.parameter(w[i], i));
  const Var x = t.constant(random_matrix(4, 6, 26));
  const Var h = t.tanh(t.add_bias(t.matmul(v[0], x), v[1]));
  const Var o = t.gaussian_nll(t.relu(t.add_bias(t.matmul(v[2], h), v[3])), t.constant(Matrix(3, 6)));
  (void)o;
  const std::vector<Matrix> replayed = t.replay();
  ASSERT_EQ(replayed.size(), t.size());
  for (std::uint32_t i = 0; i < t.size(); ++i) EXPECT_EQ(replayed[i], t.value(Var{i}));
}

TEST(Tape, BackwardVisitsEachNodeOnceInReverseOrder) {
  const Matrix p = random_matrix(3, 3, 31);
  Tape t;
  const Var v = t.parameter(p, 0);
  const Var a = t.tanh(v);
  const Var b = t.mul(a, v);
  const Var loss = t.sum(t.add(a, b));
  t.backward(loss, std::vector<Matrix>{p});
  const auto& order = t.backward_order();
  std::set<std::uint32_t> seen(order.begin(), order.end());
  EXPECT_EQ(seen.size(), order.size());
  EXPECT_EQ(order.size(), t.size());
  for (std::size_t i = 1; i < order.size(); ++i) EXPECT_GT(order[i - 1], order[i]);
}

TEST(Backward, GaussianNllGradient) {
  const Matrix x = random_matrix(3, 4, 41), mu = random_matrix(3, 4, 42);
  Tape t;
  const Var vx = t.parameter(x, 0);
  const Var vm = t.parameter(mu, 1);
  const Var nll = t.gaussian_nll(vx, vm);
  EXPECT_NEAR(t.scalar(nll), 4 * 1.5 * std::log(2 * M_PI) + 0.5 * std::pow(frobenius_norm(x - mu), 2),
              1e-12);
  const GradientSet g = t.backward(nll, std::vector<Matrix>{x, mu});
  EXPECT_LT(max_abs_diff(g[0], x - mu), 1e-15);
  EXPECT_LT(max_abs_diff(g[1], mu - x), 1e-15);
}

// finite_diff_check on the model losses.

struct Fixture {
  ModelParams params;
  Matrix window;
  TrainConfig tc;
  Matrix noise;
};

Fixture random_fixture(Mode mode, std::uint64_t seed) {
  ModelConfig c = test::tiny_config(6, {5, 3}, 4, 3, mode);
  Fixture f{ModelParams::initialize(c, seed), random_matrix(6, 7, seed + 1), {}, {}};
  f.tc.batch_size = 7;
  f.tc.lambda = mode == Mode::deterministic ? 0.5 : 0.005;
  f.tc.p = 1;
  f.tc.q = 2;
  RngStream rng(seed, 5);
  f.noise = draw_latent_noise(rng, 3, 4);
  return f;
}

TEST(FiniteDiff, DeterministicLossOnRandomModel) {
  const Fixture f = random_fixture(Mode::deterministic, 3);
  const LossFn loss = [&](const ModelParams& p, GradientSet* g) {
    return batch_loss(p, f.window, f.tc, nullptr, g).total;
  };
  const FiniteDiffReport r = finite_diff_check(f.params, loss);
  EXPECT_GE(r.checked, 200u);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(FiniteDiff, ProbabilisticLossWithFrozenNoise) {
  const Fixture f = random_fixture(Mode::probabilistic, 4);
  const LossFn loss = [&](const ModelParams& p, GradientSet* g) {
    return batch_loss(p, f.window, f.tc, &f.noise, g).total;
  };
  const FiniteDiffReport r = finite_diff_check(f.params, loss);
  EXPECT_GE(r.checked, 200u);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(FiniteDiff, ZeroModelZeroDataGivesZero) {
  const ModelConfig c = test::tiny_config();
  const ModelParams zero = ModelParams::zeros(c);
  TrainConfig tc;
  tc.batch_size = 7;
  const Matrix y(6, 7);
  const LossFn loss = [&](const ModelParams& p, GradientSet* g) {
    return batch_loss(p, y, tc, nullptr, g).total;
  };
  EXPECT_EQ(finite_diff_check(zero, loss).max_relative_error, 0.0);
}

TEST(FiniteDiff, SamplesEveryTensor) {
  const Fixture f = random_fixture(Mode::deterministic, 5);
  std::set<std::size_t> touched;
  FiniteDiffOptions opt;
  opt.skip = [&](const ModelParams&, std::size_t t, std::size_t) {
    touched.insert(t);
    return true;
  };
  const FiniteDiffReport r = finite_diff_check(
      f.params, [&](const ModelParams& p, GradientSet* g) {
        return batch_loss(p, f.window, f.tc, nullptr, g).total;
      },
      opt);
  EXPECT_EQ(touched.size(), f.params.tensors().size());
  EXPECT_GE(r.skipped, 200u);
  EXPECT_EQ(r.checked, 0u);
}

TEST(FiniteDiff, CatchesWrongGradient) {
  const Fixture f = random_fixture(Mode::deterministic, 6);
  const LossFn wrong = [&](const ModelParams& p, GradientSet* g) {
    const double v = batch_loss(p, f.window, f.tc, nullptr, g).total;
    if (g) (*g)[0].data()[0] += 0.1;
    return v;
  };
  FiniteDiffOptions opt;
  opt.coordinates = 100000;
  EXPECT_GT(finite_diff_check(f.params, wrong, opt).max_relative_error, 0.05);
}

TEST(Backward, TotalGradientIsSumOfTermGradients) {
  const Fixture f = random_fixture(Mode::deterministic, 7);
  const auto run = [&](double lambda, bool latent_only) {
    Tape t;
    const BoundModel m = bind(t, f.params, true);
    const Var y = t.constant(f.window);
    const BatchVars b = forward_batch(t, m, y);
    const LossVars l = loss_deterministic(t, y, b.yhat, b.x, b.mu, 3, lambda, 1, 2);
    return t.backward(latent_only ? l.latent : (lambda == 0 ? l.recon : l.total),
                      f.params.tensors());
  };
  const GradientSet total = run(0.5, false), recon = run(0.0, false), latent = run(1.0, true);
  for (std::size_t k = 0; k < total.size(); ++k) {
    EXPECT_LT(max_abs_diff(total[k], recon[k] + 0.5 * latent[k]), 1e-12) << k;
  }
}

}  // namespace
}  // namespace tlae
