#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tlae/matrix.hpp"

namespace tlae {

// Train / validation / test layout over T time steps:
//   [0, train_end - validation) train, [train_end - validation, train_end) validation,
//   [train_end, T) test = the final windows * horizon steps.
struct Split {
  std::size_t train_end = 0;
  std::size_t validation = 0;
  std::size_t horizon = 0;
  std::size_t windows = 0;

  std::size_t test_steps() const noexcept { return horizon * windows; }
  std::size_t fit_end() const noexcept { return train_end - validation; }
};

Split make_split(std::size_t total_steps, std::size_t horizon, std::size_t windows,
                 std::size_t validation = 0);

struct Dataset {
  Matrix series;                        // n x T, one row per series
  std::vector<std::string> names;       // n labels
  std::vector<std::string> timestamps;  // T labels, or empty
  std::string frequency;
  std::string source_hash;

  std::size_t num_series() const noexcept { return series.rows(); }
  std::size_t num_steps() const noexcept { return series.cols(); }
};

enum class TimestampColumn { automatic, present, absent };

struct CsvOptions {
  TimestampColumn timestamp = TimestampColumn::automatic;
};

// One row per time step, one column per series, header row of names, optional
// leading timestamp column. Missing or non-numeric cells are errors.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
Dataset parse_csv(const std::string& text, const CsvOptions& options = {});
std::string to_csv(const Dataset& ds);
void save_csv(const std::filesystem::path& path, const Dataset& ds);

enum class Normalization { none, standardize };
const char* to_string(Normalization n) noexcept;
Normalization parse_normalization(const std::string& s);

// Per-series affine transform fitted on the training range only.
struct Normalizer {
  Normalization scheme = Normalization::none;
  std::vector<double> mean;
  std::vector<double> scale;

  Matrix apply(const Matrix& m) const;
  Matrix inverse(const Matrix& m) const;
};

// Statistics use columns [0, train_end) only; zero-variance series are an error.
std::pair<Dataset, Normalizer> normalize(const Dataset& ds, Normalization scheme,
                                         std::size_t train_end);

enum class Mixing { linear, nonlinear };
const char* to_string(Mixing m) noexcept;
Mixing parse_mixing(const std::string& s);

struct SyntheticSpec {
  std::size_t series = 40;
  std::size_t steps = 2000;
  std::size_t latent_dim = 4;
  Mixing mixing = Mixing::nonlinear;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
  // Optional n x latent_dim linear mixing matrix (linear mixing only).
  std::optional<Matrix> mixing_weights;

  void validate() const;
};

// Latent factors are sinusoids with distinct periods and random phases plus
// noise (std noise_std / 2). Linear mixing: y = A z + noise. Nonlinear mixing
// adds a positive level, latent cross-products and a saturating term per
// series, so no rank-d* linear factorisation reproduces the panel.
Dataset make_synthetic(const SyntheticSpec& spec);

// Latent factor matrix (latent_dim x steps) used by make_synthetic.
Matrix synthetic_latents(const SyntheticSpec& spec);

std::string dataset_manifest_json(const Dataset& ds, const Split& split, Normalization scheme);

}  // namespace tlae
