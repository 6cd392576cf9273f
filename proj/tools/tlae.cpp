// tlae: train, evaluate, forecast, sweep, plot and ablate from a JSON config.
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tlae/checkpoint.hpp"
#include "tlae/commands.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("tlae");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("TLAE_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

struct Args {
  std::string config;
  std::string checkpoint;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string forecast;
  std::string actuals;
  std::size_t max_series = 0;
};

tlae::RunConfig load(const Args& a) {
  tlae::RunConfig rc = tlae::load_run_config(a.config);
  if (!a.out.empty()) rc.output_dir = a.out;
  if (a.seed) {
    rc.seed = *a.seed;
    rc.train.seed = *a.seed;
  }
  return rc;
}

std::filesystem::path checkpoint_or_default(const Args& a, const tlae::RunConfig& rc) {
  return a.checkpoint.empty() ? rc.output_dir / "checkpoint_best.bin"
                              : std::filesystem::path(a.checkpoint);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Temporal latent autoencoder for multivariate time-series forecasting", "tlae"};
  app.require_subcommand(1);
  Args a;

  auto common = [&a](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", a.config, "JSON run configuration");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--checkpoint", a.checkpoint, "Model checkpoint (default <out>/checkpoint_best.bin)");
    sub->add_option("--out", a.out, "Output directory (overrides output_dir)");
    sub->add_option("--seed", a.seed, "Seed (overrides seed)");
  };
  auto* train = app.add_subcommand("train", "Fit a model and write checkpoints and a training log");
  auto* evaluate = app.add_subcommand("evaluate", "Rolling evaluation of a checkpoint on the test region");
  auto* forecast = app.add_subcommand("forecast", "Write rolling forecasts and quantiles as CSV");
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate once per value of the sweep axis");
  auto* plot = app.add_subcommand("plot", "Render forecast CSVs as SVG charts");
  auto* ablate = app.add_subcommand("ablate", "Compare ReLU and linear encoder/decoder variants");
  for (auto* s : {train, evaluate, forecast, sweep, ablate}) common(s, true);
  common(plot, false);
  plot->add_option("--forecast", a.forecast, "forecast.csv (default <out>/forecast.csv)");
  plot->add_option("--actuals", a.actuals, "actuals.csv (default <out>/actuals.csv)");
  plot->add_option("--max-series", a.max_series, "Plot at most this many series (0 = all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const auto art = tlae::cmd_train(load(a));
      std::cout << "best epoch " << art.fit.log.best_epoch << ", checkpoint "
                << art.best_checkpoint.string() << " (" << art.best_hash << ")\n";
    } else if (evaluate->parsed()) {
      const auto rc = load(a);
      std::cout << tlae::cmd_evaluate(rc, checkpoint_or_default(a, rc)).to_table();
    } else if (forecast->parsed()) {
      const auto rc = load(a);
      const auto r = tlae::cmd_forecast(rc, checkpoint_or_default(a, rc));
      std::cout << "wrote " << r.forecast.horizon() << " forecast steps for "
                << r.forecast.point.rows() << " series to " << (rc.output_dir / "forecast.csv").string()
                << "\n";
    } else if (sweep->parsed()) {
      std::cout << tlae::cmd_sweep(load(a)).to_table();
    } else if (ablate->parsed()) {
      std::cout << tlae::cmd_ablate(load(a)).to_table();
    } else if (plot->parsed()) {
      std::filesystem::path out = a.out;
      if (out.empty() && !a.config.empty()) out = tlae::load_run_config(a.config).output_dir;
      if (out.empty()) out = ".";
      const auto fc = a.forecast.empty() ? out / "forecast.csv" : std::filesystem::path(a.forecast);
      const auto ac = a.actuals.empty() ? out / "actuals.csv" : std::filesystem::path(a.actuals);
      const auto files = tlae::cmd_plot(fc, ac, out, a.max_series);
      std::cout << "wrote " << files.size() << " SVG files to " << out.string() << "\n";
    }
  } catch (const tlae::Error& e) {
    spdlog::error("{} error: {}", tlae::to_string(e.kind()), e.what());
    return tlae::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("io error: {}", e.what());
    return tlae::exit_code(tlae::ErrorKind::io);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
