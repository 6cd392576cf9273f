#include "tlae/commands.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tlae/checkpoint.hpp"
#include "tlae/hash.hpp"
#include "tlae/rng.hpp"
#include "tlae/svg.hpp"

namespace tlae {

namespace {

constexpr std::uint64_t kEvalSalt = 0x6576616cULL;
const std::vector<double> kDefaultLevels = {0.05, 0.5, 0.95};

std::string level_label(double level) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, level);
  return "q" + std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string synthetic_label(const SyntheticSpec& s) {
  return "synthetic(n=" + std::to_string(s.series) + ", T=" + std::to_string(s.steps) +
         ", d=" + std::to_string(s.latent_dim) + ", " + to_string(s.mixing) +
         ", seed=" + std::to_string(s.seed) + ")";
}

std::string format_value(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numeric: return 4;
    case ErrorKind::io: return 5;
    default: return 1;
  }
}

PreparedData prepare_data(const RunConfig& config) {
  PreparedData out;
  const DatasetSection& ds = config.dataset;
  if (ds.path) {
    CsvOptions opts;
    opts.timestamp = ds.timestamp;
    out.raw = load_csv(*ds.path, opts);
    out.label = ds.path->string();
  } else {
    out.raw = make_synthetic(*ds.synthetic);
    out.label = synthetic_label(*ds.synthetic);
  }
  if (ds.max_steps > 0 && ds.max_steps < out.raw.num_steps()) {
    out.raw.series = out.raw.series.col_range(0, ds.max_steps);
    if (!out.raw.timestamps.empty()) out.raw.timestamps.resize(ds.max_steps);
  }
  config.validate_against(out.raw.num_series(), out.raw.num_steps());
  out.split = make_split(out.raw.num_steps(), config.eval.rolling.horizon,
                         config.eval.rolling.windows, config.train.validation);
  auto [scaled, norm] = normalize(out.raw, ds.normalization, out.split.fit_end());
  out.scaled = std::move(scaled);
  out.normalizer = std::move(norm);
  return out;
}

RunConfig resolve(const RunConfig& config, const PreparedData& data) {
  RunConfig rc = config;
  rc.validate_against(data.raw.num_series(), data.raw.num_steps());
  rc.model.input_dim = data.raw.num_series();
  rc.model.validate();
  rc.train.seed = rc.seed;
  return rc;
}

FitResult train_model(const RunConfig& config, const PreparedData& data,
                      const FitOptions& options) {
  const RunConfig rc = resolve(config, data);
  FitOptions opts = options;
  opts.normalizer = &data.normalizer;
  return fit(data.scaled.series.col_range(0, data.split.train_end), rc.model, rc.train, opts);
}

RollingResult forecast_test(const RunConfig& config, const PreparedData& data,
                            const ModelParams& params) {
  const RunConfig rc = resolve(config, data);
  if (!(params.config() == rc.model)) {
    fail(ErrorKind::config, "checkpoint model " + to_json(params.config()).dump() +
                                " does not match config model " + to_json(rc.model).dump());
  }
  RollingSpec spec = rc.eval.rolling;
  if (rc.model.mode == Mode::deterministic) {
    spec.samples = 1;
    spec.quantiles.clear();
  } else if (spec.quantiles.empty()) {
    spec.quantiles = kDefaultLevels;
  }
  RollingResult r = rolling_evaluate(params, data.scaled.series, spec,
                                     mix_seed(rc.seed, kEvalSalt), rc.eval.ensemble);
  const Normalizer& norm = data.normalizer;
  r.forecast.point = norm.inverse(r.forecast.point);
  for (Matrix& s : r.forecast.samples) s = norm.inverse(s);
  for (Matrix& q : r.forecast.quantiles) q = norm.inverse(q);
  r.actuals = data.raw.series.col_range(r.start, data.raw.num_steps());
  return r;
}

MetricsReport score(const RunConfig& config, const PreparedData& data, const RollingResult& r) {
  MetricsReport rep;
  rep.series = data.raw.num_series();
  rep.horizon = config.eval.rolling.horizon;
  rep.samples = r.forecast.samples.size();
  rep.num_quantiles = config.eval.num_quantiles;
  rep.seed = config.seed;
  rep.dataset = data.label;
  rep.config_hash = config_hash(config);
  const Matrix& y = r.actuals;
  for (const std::string& m : config.eval.metrics) {
    double v = 0.0;
    if (m == "wape") {
      v = wape(r.forecast.point, y);
    } else if (m == "mape") {
      v = mape(r.forecast.point, y);
    } else if (m == "smape") {
      v = smape(r.forecast.point, y);
    } else if (m == "mse") {
      v = mse(r.forecast.point, y);
    } else if (r.forecast.samples.empty()) {
      fail(ErrorKind::config, "metric '" + m + "' needs a probabilistic forecast");
    } else if (m == "crps") {
      v = crps_pinball(r.forecast.samples, y, config.eval.num_quantiles);
    } else if (m == "crps-sum") {
      v = crps_sum(r.forecast.samples, y, config.eval.num_quantiles);
    } else if (m == "quantile-loss-0.5" || m == "quantile-loss-0.9") {
      const double rho = m.back() == '5' ? 0.5 : 0.9;
      v = quantile_loss(ensemble_quantiles(r.forecast.samples, {rho})[0], y, rho);
    } else if (m == "coverage-90") {
      const auto q = ensemble_quantiles(r.forecast.samples, {0.05, 0.95});
      std::size_t inside = 0;
      for (std::size_t c = 0; c < y.size(); ++c) {
        const double obs = y.data()[c];
        inside += q[0].data()[c] <= obs && obs <= q[1].data()[c];
      }
      v = static_cast<double>(inside) / static_cast<double>(y.size());
    } else {
      fail(ErrorKind::config, "unknown metric '" + m + "'");
    }
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "metric '" + m + "' is not finite");
    rep.values[m] = v;
  }
  return rep;
}

MetricsReport evaluate_params(const RunConfig& config, const PreparedData& data,
                              const ModelParams& params) {
  const RunConfig rc = resolve(config, data);
  return score(rc, data, forecast_test(rc, data, params));
}

namespace {

TrainArtifacts train_into(const RunConfig& config, const PreparedData& data) {
  const RunConfig rc = resolve(config, data);
  const auto& dir = rc.output_dir;
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "config.json", to_json(rc).dump(2) + "\n");
  write_file_atomic(dir / "dataset.json",
                    dataset_manifest_json(data.raw, data.split, rc.dataset.normalization));

  FitOptions opts;
  opts.divergence_checkpoint = dir / "checkpoint_last_good.bin";
  opts.on_epoch = [](const EpochRecord& r) {
    if (r.validation) {
      spdlog::info("epoch {} loss {:.6g} (recon {:.6g}, latent {:.6g}) {} {:.6g} [{:.2f}s]", r.epoch,
                   r.loss, r.recon, r.latent, r.validation_metric, *r.validation, r.seconds);
    } else {
      spdlog::info("epoch {} loss {:.6g} (recon {:.6g}, latent {:.6g}) [{:.2f}s]", r.epoch, r.loss,
                   r.recon, r.latent, r.seconds);
    }
  };
  TrainArtifacts out;
  out.fit = train_model(rc, data, opts);
  out.best_checkpoint = dir / "checkpoint_best.bin";
  out.final_checkpoint = dir / "checkpoint_final.bin";
  const std::string best = serialize_checkpoint(out.fit.params);
  const std::string final = serialize_checkpoint(out.fit.final_params);
  write_file_atomic(out.best_checkpoint, best);
  write_file_atomic(out.final_checkpoint, final);
  write_file_atomic(dir / "train_log.jsonl", out.fit.log.to_jsonl());
  out.best_hash = hex64(fnv1a64(best));

  nlohmann::ordered_json run;
  run["config_hash"] = config_hash(rc);
  run["epochs"] = rc.train.epochs;
  run["best_epoch"] = out.fit.log.best_epoch;
  run["best_checkpoint_hash"] = out.best_hash;
  run["final_checkpoint_hash"] = hex64(fnv1a64(final));
  write_file_atomic(dir / "run.json", run.dump(2) + "\n");
  spdlog::info("best epoch {}; checkpoints in {}", out.fit.log.best_epoch, dir.string());
  return out;
}

void write_report(const std::filesystem::path& dir, const MetricsReport& rep) {
  write_file_atomic(dir / "metrics.json", rep.to_json());
  write_file_atomic(dir / "metrics.txt", rep.to_table());
}

}  // namespace

TrainArtifacts cmd_train(const RunConfig& config) {
  return train_into(config, prepare_data(config));
}

MetricsReport cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint) {
  const PreparedData data = prepare_data(config);
  const MetricsReport rep = evaluate_params(config, data, load_checkpoint(checkpoint));
  write_report(config.output_dir, rep);
  return rep;
}

RollingResult cmd_forecast(const RunConfig& config, const std::filesystem::path& checkpoint) {
  const PreparedData data = prepare_data(config);
  const ModelParams params = load_checkpoint(checkpoint);
  const RunConfig rc = resolve(config, data);
  RollingResult r = forecast_test(rc, data, params);

  const std::size_t n = data.raw.num_series();
  const bool ts = !data.raw.timestamps.empty();
  auto row_prefix = [&](std::size_t h) {
    const std::size_t t = r.start + h;
    return (ts ? data.raw.timestamps[t] + "," : std::string()) + std::to_string(t);
  };
  std::string head = std::string(ts ? "timestamp," : "") + "step";
  for (std::size_t i = 0; i < n; ++i) {
    head += "," + data.raw.names[i] + ":point";
    for (double l : r.forecast.levels) head += "," + data.raw.names[i] + ":" + level_label(l);
  }
  std::string fc = head + "\n";
  std::string act = std::string(ts ? "timestamp," : "") + "step";
  for (std::size_t i = 0; i < n; ++i) act += "," + data.raw.names[i];
  act += "\n";
  for (std::size_t h = 0; h < r.actuals.cols(); ++h) {
    fc += row_prefix(h);
    act += row_prefix(h);
    for (std::size_t i = 0; i < n; ++i) {
      fc += "," + format_value(r.forecast.point(i, h));
      for (const Matrix& q : r.forecast.quantiles) fc += "," + format_value(q(i, h));
      act += "," + format_value(r.actuals(i, h));
    }
    fc += "\n";
    act += "\n";
  }
  const auto& dir = rc.output_dir;
  write_file_atomic(dir / "forecast.csv", fc);
  write_file_atomic(dir / "actuals.csv", act);
  nlohmann::ordered_json man;
  man["horizon"] = rc.eval.rolling.horizon;
  man["windows"] = rc.eval.rolling.windows;
  man["context"] = rc.eval.rolling.context_for(rc.model);
  man["samples"] = r.forecast.samples.size();
  man["quantiles"] = r.forecast.levels;
  man["trajectory_sampling"] = rc.eval.ensemble.trajectory_sampling;
  man["first_step"] = r.start;
  man["seed"] = rc.seed;
  man["checkpoint_hash"] = file_hash(checkpoint);
  man["config_hash"] = config_hash(rc);
  write_file_atomic(dir / "forecast.json", man.dump(2) + "\n");
  return r;
}

RunConfig apply_sweep_value(const RunConfig& config, const std::string& axis, double value) {
  RunConfig rc = config;
  auto as_count = [&](const char* what) {
    if (!(value >= 1.0) || value != std::floor(value)) {
      fail(ErrorKind::config, std::string("sweep value for ") + what +
                                  " must be a positive integer, got " + format_value(value));
    }
    return static_cast<std::size_t>(value);
  };
  if (axis == "batch_size") {
    rc.train.batch_size = as_count("batch_size");
  } else if (axis == "lambda") {
    rc.train.lambda = value;
  } else if (axis == "latent_dim") {
    rc.model.encoder_dims.back() = as_count("latent_dim");
  } else {
    fail(ErrorKind::config, "unknown sweep axis '" + axis + "'");
  }
  rc.train.validate(rc.model);
  return rc;
}

std::string SweepReport::to_json() const {
  nlohmann::ordered_json j;
  j["axis"] = axis;
  j["runs"] = nlohmann::ordered_json::array();
  for (const SweepRun& r : runs) {
    nlohmann::ordered_json e;
    e["value"] = r.value;
    e["seed"] = r.seed;
    if (r.report) {
      e["metrics"] = nlohmann::ordered_json(r.report->values);
    } else {
      e["error"] = r.error;
    }
    j["runs"].push_back(e);
  }
  return j.dump(2) + "\n";
}

std::string SweepReport::to_table() const {
  std::ostringstream os;
  std::vector<std::string> names;
  for (const SweepRun& r : runs) {
    if (!r.report) continue;
    for (const auto& [k, v] : r.report->values) names.push_back(k);
    break;
  }
  os << axis;
  for (const auto& n : names) os << "\t" << n;
  os << "\n";
  for (const SweepRun& r : runs) {
    os << format_value(r.value);
    if (!r.report) {
      os << "\tfailed: " << r.error << "\n";
      continue;
    }
    for (const auto& n : names) os << "\t" << r.report->values.at(n);
    os << "\n";
  }
  return os.str();
}

SweepReport cmd_sweep(const RunConfig& config) {
  if (!config.sweep) fail(ErrorKind::config, "sweep: config has no sweep section");
  const PreparedData data = prepare_data(config);
  SweepReport rep;
  rep.axis = config.sweep->axis;
  for (std::size_t i = 0; i < config.sweep->values.size(); ++i) {
    SweepRun run;
    run.value = config.sweep->values[i];
    run.seed = config.seed + i;
    try {
      RunConfig rc = apply_sweep_value(config, rep.axis, run.value);
      rc.seed = run.seed;
      rc.train.seed = run.seed;
      rc.sweep.reset();  // each run's config echo is a plain, rerunnable single run
      rc.output_dir = config.output_dir / (rep.axis + "-" + std::to_string(i));
      spdlog::info("sweep {} = {} (seed {})", rep.axis, format_value(run.value), run.seed);
      const TrainArtifacts art = train_into(rc, data);
      run.report = evaluate_params(rc, data, art.fit.params);
      write_report(rc.output_dir, *run.report);
    } catch (const Error& e) {
      run.error = std::string(to_string(e.kind())) + ": " + e.what();
      spdlog::warn("sweep run {} failed: {}", i, run.error);
    }
    rep.runs.push_back(std::move(run));
  }

  LineChart chart;
  chart.title = "sensitivity to " + rep.axis;
  chart.x_label = rep.axis;
  chart.y_label = "metric";
  chart.log_x = rep.axis == "lambda";
  for (const SweepRun& r : rep.runs) chart.x.push_back(r.value);
  for (const std::string& m : config.eval.metrics) {
    std::vector<double> ys;
    for (const SweepRun& r : rep.runs) ys.push_back(r.report ? r.report->values.at(m) : NAN);
    chart.lines.emplace_back(m, std::move(ys));
  }
  write_file_atomic(config.output_dir / "sweep.json", rep.to_json());
  write_file_atomic(config.output_dir / "sweep.txt", rep.to_table());
  write_file_atomic(config.output_dir / "sweep.svg", render_line_chart(chart));
  return rep;
}

namespace {

struct CsvTable {
  std::vector<std::string> names;
  Matrix values;  // columns x rows, one row per CSV column
};

CsvTable read_table(const std::filesystem::path& path) {
  Dataset d = load_csv(path);
  return {d.names, d.series};
}

std::size_t column_of(const CsvTable& t, const std::string& name) {
  for (std::size_t i = 0; i < t.names.size(); ++i)
    if (t.names[i] == name) return i;
  return t.names.size();
}

std::vector<double> row_vector(const Matrix& m, std::size_t r) {
  auto row = m.row(r);
  return {row.begin(), row.end()};
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

}  // namespace

std::vector<std::filesystem::path> cmd_plot(const std::filesystem::path& forecast_csv,
                                            const std::filesystem::path& actuals_csv,
                                            const std::filesystem::path& out_dir,
                                            std::size_t max_series) {
  const CsvTable fc = read_table(forecast_csv);
  const CsvTable act = read_table(actuals_csv);
  if (fc.values.cols() != act.values.cols()) {
    fail(ErrorKind::data, "plot: forecast has " + std::to_string(fc.values.cols()) +
                              " rows but actuals have " + std::to_string(act.values.cols()));
  }
  const std::string lo = ":" + level_label(0.05);
  const std::string hi = ":" + level_label(0.95);
  std::vector<std::filesystem::path> written;
  for (std::size_t i = 0; i < act.names.size(); ++i) {
    const std::string& name = act.names[i];
    if (name == "step") continue;
    if (max_series > 0 && written.size() >= max_series) break;
    const std::size_t p = column_of(fc, name + ":point");
    if (p == fc.names.size()) fail(ErrorKind::data, "plot: no point forecast column for " + name);
    ForecastPlot plot;
    plot.title = name;
    plot.actual = row_vector(act.values, i);
    plot.point = row_vector(fc.values, p);
    const std::size_t l = column_of(fc, name + lo);
    const std::size_t u = column_of(fc, name + hi);
    if (l < fc.names.size() && u < fc.names.size()) {
      plot.band = std::make_pair(row_vector(fc.values, l), row_vector(fc.values, u));
    }
    const auto path = out_dir / ("plot_" + file_safe(name) + ".svg");
    write_file_atomic(path, render_forecast_svg(plot));
    written.push_back(path);
  }
  return written;
}

std::string AblationReport::to_json() const {
  nlohmann::ordered_json j;
  j["nonlinear"] = nlohmann::ordered_json(nonlinear.values);
  j["linear"] = nlohmann::ordered_json(linear.values);
  j["metadata"] = {{"dataset", nonlinear.dataset},
                   {"seed", nonlinear.seed},
                   {"config_hash", nonlinear.config_hash}};
  return j.dump(2) + "\n";
}

std::string AblationReport::to_table() const {
  std::ostringstream os;
  os << "encoder\twape\tmape\tsmape\n";
  for (const auto* r : {&nonlinear, &linear}) {
    os << (r == &nonlinear ? "nonlinear" : "linear");
    for (const char* m : {"wape", "mape", "smape"}) os << "\t" << r->values.at(m);
    os << "\n";
  }
  return os.str();
}

AblationReport ablate(const RunConfig& config, const PreparedData& data) {
  AblationReport rep;
  for (Activation act : {Activation::relu, Activation::linear}) {
    RunConfig rc = config;
    rc.model.activation = act;
    rc.eval.metrics = {"wape", "mape", "smape"};
    spdlog::info("ablation: training {} encoder/decoder", to_string(act));
    const FitResult fr = train_model(rc, data);
    (act == Activation::relu ? rep.nonlinear : rep.linear) = evaluate_params(rc, data, fr.params);
  }
  return rep;
}

AblationReport cmd_ablate(const RunConfig& config) {
  const AblationReport rep = ablate(config, prepare_data(config));
  write_file_atomic(config.output_dir / "ablation.json", rep.to_json());
  write_file_atomic(config.output_dir / "ablation.txt", rep.to_table());
  return rep;
}

}  // namespace tlae
