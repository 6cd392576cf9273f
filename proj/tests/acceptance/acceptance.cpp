// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Pass criterion numbers as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tlae/commands.hpp"
#include "tlae/config.hpp"
#include "tlae/data.hpp"
#include "tlae/error.hpp"
#include "tlae/forecaster.hpp"
#include "tlae/gradcheck.hpp"
#include "tlae/metrics.hpp"
#include "tlae/model.hpp"
#include "tlae/objective.hpp"
#include "tlae/rng.hpp"
#include "tlae/tape.hpp"
#include "tlae/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tlae;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  RngStream rng(seed, 7);
  Matrix m(r, c);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

ModelParams random_model(const ModelConfig& c, std::uint64_t seed) {
  ModelParams p = ModelParams::initialize(c, seed);
  for (std::size_t i = 0; i < p.tensors().size(); ++i)
    if (p[i].cols() == 1) p[i] = gaussian(p[i].rows(), 1, seed * 131 + i, 0.3);
  return p;
}

// ---------------------------------------------------------------- 1

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_det = 0.0, worst_prob = 0.0;
  std::size_t checked = 0, skipped = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (Mode mode : {Mode::deterministic, Mode::probabilistic}) {
      ModelConfig c;
      c.input_dim = 6;
      c.encoder_dims = {5, 3};
      c.lstm_hidden = 4;
      c.seq_len = 3;
      c.mode = mode;
      const ModelParams params = random_model(c, seed);
      const Matrix y = gaussian(6, 7, 1000 + seed);
      TrainConfig tc;
      tc.batch_size = 7;
      tc.p = 1;
      tc.q = 2;
      tc.lambda = mode == Mode::deterministic ? 0.5 : 0.005;
      RngStream rng(seed, 3);
      const Matrix eps = draw_latent_noise(rng, 3, 4);
      const Matrix* noise = mode == Mode::probabilistic ? &eps : nullptr;

      FiniteDiffOptions opt;
      opt.seed = seed;
      // The l1 term has a kink where a residual is zero; drop coordinates
      // whose +-h probe moves any residual across it.
      const auto residual = [&](const ModelParams& q) {
        Tape t;
        const BoundModel m = bind(t, q, false);
        return t.value(forward_batch(t, m, t.constant(y), noise).yhat) - y;
      };
      opt.skip = [&](const ModelParams& p, std::size_t tensor, std::size_t index) {
        ModelParams up = p, down = p;
        up[tensor].data()[index] += opt.h;
        down[tensor].data()[index] -= opt.h;
        const Matrix a = residual(up), b = residual(down);
        for (std::size_t i = 0; i < a.size(); ++i)
          if ((a.data()[i] > 0) != (b.data()[i] > 0)) return true;
        return false;
      };
      const LossFn loss = [&](const ModelParams& p, GradientSet* g) {
        return batch_loss(p, y, tc, noise, g).total;
      };
      const FiniteDiffReport r = finite_diff_check(params, loss, opt);
      checked += r.checked;
      skipped += r.skipped;
      double& worst = mode == Mode::deterministic ? worst_det : worst_prob;
      worst = std::max(worst, r.max_relative_error);
    }
  }
  const double secs = seconds_since(t0);
  return {worst_det < 1e-4 && worst_prob < 1e-4 && secs < 30,
          fmt::format("max rel err deterministic {:.2e}, probabilistic {:.2e} ({} coords, {} "
                      "skipped at l1 kinks, 10 models, {:.1f} s)",
                      worst_det, worst_prob, checked, skipped, secs)};
}

// ---------------------------------------------------------------- 2

// Per-step loops, independent of the tape. Gate rows are [i | f | g | o].
Matrix reference_lstm(const ModelParams& p, const Matrix& x) {
  const ModelConfig& c = p.config();
  const std::size_t H = c.lstm_hidden, L = c.seq_len, T = x.cols();
  const auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<std::vector<double>> h(c.lstm_layers, std::vector<double>(H, 0.0)), cell = h;
  Matrix out(c.latent_dim(), T - L);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    std::vector<double> input(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) input[r] = x(r, t);
    for (std::size_t l = 0; l < c.lstm_layers; ++l) {
      const Matrix& W = p[p.lstm_input_weight(l)];
      const Matrix& U = p[p.lstm_hidden_weight(l)];
      const Matrix& b = p[p.lstm_bias(l)];
      std::vector<double> pre(4 * H);
      for (std::size_t g = 0; g < 4 * H; ++g) {
        double s = b(g, 0);
        for (std::size_t k = 0; k < input.size(); ++k) s += W(g, k) * input[k];
        for (std::size_t k = 0; k < H; ++k) s += U(g, k) * h[l][k];
        pre[g] = s;
      }
      for (std::size_t k = 0; k < H; ++k) {
        cell[l][k] = sigmoid(pre[H + k]) * cell[l][k] + sigmoid(pre[k]) * std::tanh(pre[2 * H + k]);
        h[l][k] = sigmoid(pre[3 * H + k]) * std::tanh(cell[l][k]);
      }
      input = h[l];
    }
    if (t + 1 < L) continue;
    const Matrix& P = p[p.projection_weight()];
    const Matrix& pb = p[p.projection_bias()];
    for (std::size_t r = 0; r < P.rows(); ++r) {
      double s = pb(r, 0);
      for (std::size_t k = 0; k < H; ++k) s += P(r, k) * input[k];
      out(r, t + 1 - L) = s;
    }
  }
  return out;
}

Outcome lstm_equivalence() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    RngStream pick(k, 11);
    const auto draw = [&](std::size_t hi) { return 1 + static_cast<std::size_t>(pick.uniform() * hi); };
    ModelConfig c;
    c.input_dim = 8;
    c.encoder_dims = {draw(6)};
    c.lstm_layers = draw(3);
    c.lstm_hidden = draw(8);
    c.seq_len = draw(6);
    const ModelParams p = random_model(c, 500 + k);
    const Matrix x = gaussian(c.latent_dim(), c.seq_len + draw(10), 900 + k);
    const Matrix got = lstm_forecast(p, x), want = reference_lstm(p, x);
    for (std::size_t i = 0; i < got.size(); ++i)
      worst = std::max(worst, std::fabs(got.data()[i] - want.data()[i]));
  }
  return {worst <= 1e-12, fmt::format("max abs diff {:.2e} over 50 random stacks", worst)};
}

// ---------------------------------------------------------------- 3

Outcome metric_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> failed;
  const auto expect = [&](const std::string& what, double got, double want, double tol) {
    if (!(std::fabs(got - want) <= tol)) failed.push_back(fmt::format("{} = {} (want {})", what, got, want));
  };
  const Matrix y{{1, 2}, {3, 4}}, yh{{1, 1}, {3, 3}};
  expect("wape(perfect)", wape(y, y), 0.0, 0.0);
  expect("wape", wape(yh, y), 0.2, 1e-15);
  expect("mape(perfect)", mape(y, y), 0.0, 0.0);
  expect("mape", mape(Matrix{{3}}, Matrix{{2}}), 0.5, 0.0);
  expect("smape(perfect)", smape(y, y), 0.0, 0.0);
  expect("smape", smape(Matrix{{3}}, Matrix{{1}}), 1.0, 0.0);
  expect("smape swap", smape(Matrix{{2, 7}}, Matrix{{5, 1}}), smape(Matrix{{5, 1}}, Matrix{{2, 7}}), 0.0);
  expect("mse(perfect)", mse(y, y), 0.0, 0.0);
  expect("mse single", mse(Matrix{{2}}, Matrix{{0}}), 4.0, 0.0);
  expect("mse", mse(yh, y), 0.5, 1e-15);
  expect("D_0.9(8, 10)", pinball(8, 10, 0.9), 0.2, 1e-15);
  expect("R_0.9", quantile_loss(Matrix{{8}}, Matrix{{10}}, 0.9), 0.04, 1e-15);
  expect("R(perfect)", quantile_loss(y, y, 0.3), 0.0, 0.0);
  expect("R_0.5 = wape", quantile_loss(yh, y, 0.5), wape(yh, y), 1e-15);

  const std::vector<Matrix> mass(30, y);
  expect("crps(point mass)", crps_pinball(mass, y), 0.0, 0.0);

  RngStream rng(2024, 0);
  std::vector<Matrix> normal;
  for (int i = 0; i < 100000; ++i) normal.push_back(Matrix{{rng.normal()}});
  const double closed = 2.0 / std::sqrt(2.0 * M_PI) - 1.0 / std::sqrt(M_PI);
  const double crps = crps_pinball(normal, Matrix{{0.0}});
  expect("crps N(0,1)", crps, closed, 0.005);

  // crps_sum with n = 1 is crps; anti-correlated pair sums to a constant.
  std::vector<Matrix> one, pair;
  RngStream r2(7, 1);
  for (int i = 0; i < 200; ++i) {
    one.push_back(Matrix{{r2.normal(), r2.normal()}});
    const double z = r2.normal();
    pair.push_back(Matrix{{z}, {3.0 - z}});
  }
  expect("crps_sum(n=1)", crps_sum(one, Matrix{{0.3, -0.2}}), crps_pinball(one, Matrix{{0.3, -0.2}}), 0.0);
  expect("crps_sum(constant sum)", crps_sum(pair, Matrix{{1.0}, {2.0}}), 0.0, 1e-12);

  const double secs = seconds_since(t0);
  std::string detail = fmt::format("N(0,1) CRPS {:.4f} vs {:.4f} at S=1e5, {} examples ({:.1f} s)", crps,
                                   closed, 18, secs);
  for (const auto& f : failed) detail += "; " + f;
  return {failed.empty() && secs < 60, detail};
}

// ---------------------------------------------------------------- 4-7

// The synthetic fixture at desk scale: n=40, T=2000, d*=4, tau=12, k=4.
struct Run {
  double wape = 0.0;
  double coverage = 0.0;
  double crps_sum = 0.0;
  double degenerate_crps_sum = 0.0;
  double seconds = 0.0;
};

struct RunKey {
  std::uint64_t seed;
  Mode mode;
  Activation activation;
  std::size_t batch;
  double lambda;
  auto tie() const { return std::tie(seed, mode, activation, batch, lambda); }
  bool operator<(const RunKey& o) const { return tie() < o.tie(); }
};

Run train_and_score(const RunKey& key) {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticSpec spec;
  spec.seed = key.seed;
  const Dataset ds = make_synthetic(spec);
  const Split split = make_split(ds.num_steps(), 12, 4);
  const auto [nd, norm] = normalize(ds, Normalization::standardize, split.train_end);

  ModelConfig mc;
  mc.input_dim = 40;
  mc.encoder_dims = {32, 4};
  mc.lstm_hidden = 32;
  mc.seq_len = 24;
  mc.mode = key.mode;
  mc.activation = key.activation;
  TrainConfig tc;
  tc.batch_size = key.batch;
  tc.stride = 24;
  tc.epochs = 300;
  tc.learning_rate = 1e-4;
  tc.lambda = key.lambda;
  tc.p = 1;
  tc.q = 2;
  tc.seed = key.seed;
  const FitResult fr = fit(nd.series.col_range(0, split.train_end), mc, tc);

  RollingSpec rs;
  rs.horizon = 12;
  rs.windows = 4;
  rs.samples = key.mode == Mode::probabilistic ? 1000 : 1;
  EnsembleOptions eo;
  eo.trajectory_sampling = true;
  RollingResult r = rolling_evaluate(fr.params, nd.series, rs, key.seed, eo);
  const Matrix y = ds.series.col_range(r.start, ds.num_steps());
  const Matrix point = norm.inverse(r.forecast.point);

  Run out;
  out.wape = wape(point, y);
  if (key.mode == Mode::probabilistic) {
    for (Matrix& m : r.forecast.samples) m = norm.inverse(m);
    const auto band = ensemble_quantiles(r.forecast.samples, {0.05, 0.95});
    std::size_t inside = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
      inside += band[0].data()[i] <= y.data()[i] && y.data()[i] <= band[1].data()[i];
    out.coverage = double(inside) / double(y.size());
    out.crps_sum = crps_sum(r.forecast.samples, y);
    out.degenerate_crps_sum = crps_sum(std::vector<Matrix>(r.forecast.samples.size(), point), y);
  }
  out.seconds = seconds_since(t0);
  return out;
}

std::map<RunKey, Run> run_cache;

const Run& fixture_run(const RunKey& key) {
  auto it = run_cache.find(key);
  if (it == run_cache.end()) {
    it = run_cache.emplace(key, train_and_score(key)).first;
    std::cerr << fmt::format("  [run seed {} {} {} b={} lambda={:g}] WAPE {:.4f} ({:.1f} s)\n", key.seed,
                             to_string(key.mode), to_string(key.activation), key.batch, key.lambda,
                             it->second.wape, it->second.seconds);
  }
  return it->second;
}

RunKey deterministic(std::uint64_t seed, Activation act = Activation::relu, std::size_t b = 48) {
  return {seed, Mode::deterministic, act, b, 0.5};
}

RunKey probabilistic(std::uint64_t seed, double lambda) {
  return {seed, Mode::probabilistic, Activation::relu, 48, lambda};
}

Outcome synthetic_recovery() {
  bool all_below = true;
  int wins = 0;
  double secs = 0.0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Run& nl = fixture_run(deterministic(seed));
    const Run& lin = fixture_run(deterministic(seed, Activation::linear));
    all_below = all_below && nl.wape < 0.15;
    wins += nl.wape < lin.wape;
    secs = std::max(secs, nl.seconds);
    detail += fmt::format("seed {}: relu {:.4f} linear {:.4f}; ", seed, nl.wape, lin.wape);
  }
  detail += fmt::format("nonlinear wins {}/3, longest run {:.0f} s", wins, secs);
  return {all_below && wins == 3 && secs < 900, detail};
}

Outcome probabilistic_calibration() {
  const Run& r = fixture_run(probabilistic(1, 0.005));
  return {r.coverage >= 0.80 && r.coverage <= 0.98 && r.crps_sum < r.degenerate_crps_sum,
          fmt::format("90% coverage {:.3f}, CRPS-sum {:.4f} vs degenerate {:.4f}", r.coverage, r.crps_sum,
                      r.degenerate_crps_sum)};
}

Outcome batch_size_direction() {
  std::map<std::size_t, double> mean;
  for (std::size_t b : {25, 48, 72})
    for (std::uint64_t seed = 1; seed <= 3; ++seed) mean[b] += fixture_run(deterministic(seed, Activation::relu, b)).wape / 3.0;
  return {mean[72] <= mean[25], fmt::format("mean WAPE b=25 {:.4f}, b=48 {:.4f}, b=72 {:.4f}", mean[25],
                                            mean[48], mean[72])};
}

Outcome lambda_shape() {
  const std::vector<double> grid = {1e-6, 1e-3, 0.5};
  std::vector<double> w;
  for (double lambda : grid) w.push_back(fixture_run(probabilistic(1, lambda)).wape);
  const std::size_t best = std::min_element(w.begin(), w.end()) - w.begin();
  return {best != 0, fmt::format("WAPE at lambda 1e-6 {:.4f}, 1e-3 {:.4f}, 0.5 {:.4f}; best at {:g}", w[0],
                                 w[1], w[2], grid[best])};
}

// ---------------------------------------------------------------- 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "tlae_acceptance_determinism";
  fs::remove_all(root);
  std::string detail;
  bool ok = true;
  for (const std::string mode : {"deterministic", "probabilistic"}) {
    std::vector<std::string> reports;
    for (const std::string run : {"a", "b", "a"}) {
      json j = json::parse(R"({
        "seed": 11,
        "dataset": {"synthetic": {"series": 12, "steps": 400, "latent_dim": 3, "seed": 5},
                    "normalization": "standardize"},
        "model": {"encoder_dims": [8, 3], "lstm_hidden": 8, "seq_len": 8},
        "train": {"epochs": 5, "stride": 8, "validation": 16},
        "eval": {"horizon": 8, "windows": 3, "samples": 200}
      })");
      j["model"]["mode"] = mode;
      j["output_dir"] = (root / mode / run).string();
      const RunConfig rc = parse_run_config(j);
      const TrainArtifacts art = cmd_train(rc);
      cmd_evaluate(rc, art.best_checkpoint);
      reports.push_back(slurp(root / mode / run / "metrics.json"));
    }
    const bool same = !reports[0].empty() && reports[0] == reports[1] && reports[0] == reports[2];
    ok = ok && same;
    detail += fmt::format("{}: {} reruns byte-identical {}; ", mode, reports.size(), same ? "yes" : "no");
  }
  fs::remove_all(root);
  return {ok, detail + "checked via train+evaluate commands"};
}

// ---------------------------------------------------------------- 9

Outcome rolling_conformance() {
  SyntheticSpec spec;
  spec.series = 963;
  spec.steps = 1200;
  spec.latent_dim = 8;
  spec.seed = 9;
  const Matrix series = make_synthetic(spec).series;
  ModelConfig c;
  c.input_dim = 963;
  c.encoder_dims = {64, 16};
  c.lstm_hidden = 32;
  c.seq_len = 24;
  const ModelParams p = random_model(c, 9);
  RollingSpec rs;
  rs.horizon = 24;
  rs.windows = 7;
  const RollingResult base = rolling_evaluate(p, series, rs, 0);

  const std::size_t start = 1200 - 168;
  bool shape = base.forecast.point.rows() == 963 && base.forecast.point.cols() == 168 &&
               base.start == start && base.actuals == series.col_range(start, 1200);

  // Window w may read only columns before start + w tau. Overwrite everything
  // from there on: windows up to w must not move, later ones must.
  std::size_t leaks = 0, insensitive = 0;
  for (std::size_t w = 0; w < 7; ++w) {
    Matrix probe = series;
    for (std::size_t i = 0; i < 963; ++i)
      for (std::size_t t = start + w * 24; t < 1200; ++t) probe(i, t) = 1e3 + double(t);
    const Matrix got = rolling_evaluate(p, probe, rs, 0).forecast.point;
    for (std::size_t v = 0; v < 7; ++v) {
      const bool same = got.col_range(v * 24, (v + 1) * 24) == base.forecast.point.col_range(v * 24, (v + 1) * 24);
      if (v <= w && !same) ++leaks;
      if (v > w && same) ++insensitive;
    }
  }
  return {shape && leaks == 0 && insensitive == 0,
          fmt::format("forecast {}x{} (start {}), leak probe: {} leaking windows, {} windows that ignored "
                      "their context",
                      base.forecast.point.rows(), base.forecast.point.cols(), base.start, leaks, insensitive)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"LSTM cell equivalence", lstm_equivalence},
      {"metric oracles", metric_oracles},
      {"synthetic recovery", synthetic_recovery},
      {"probabilistic calibration", probabilistic_calibration},
      {"batch-size direction", batch_size_direction},
      {"lambda sensitivity shape", lambda_shape},
      {"determinism", determinism},
      {"rolling protocol", rolling_conformance},
  };
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!only.empty() && !only.count(k + 1)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << k + 1 << " " << criteria[k].first << ": " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
