#include "tlae/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlae/error.hpp"
#include "tlae/hash.hpp"
#include "tlae/rng.hpp"

namespace tlae {

Split make_split(std::size_t total_steps, std::size_t horizon, std::size_t windows,
                 std::size_t validation) {
  if (horizon == 0 || windows == 0) {
    fail(ErrorKind::config, "split: horizon and windows must be >= 1");
  }
  const std::size_t test = horizon * windows;
  if (test + validation >= total_steps) {
    fail(ErrorKind::data, "series of " + std::to_string(total_steps) +
                              " steps cannot hold " + std::to_string(test) + " test and " +
                              std::to_string(validation) + " validation steps");
  }
  return Split{total_steps - test, validation, horizon, windows};
}

// ---------------------------------------------------------------- CSV

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) fail(ErrorKind::io, "cannot format number");
  return std::string(buf, ptr);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Dataset parse_csv(const std::string& text, const CsvOptions& options) {
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      lines.push_back(std::move(line));
    }
  }
  if (lines.empty()) fail(ErrorKind::data, "csv: empty file");
  auto header = split_line(lines[0]);
  for (auto& h : header) h = trim(h);
  if (lines.size() < 2) fail(ErrorKind::data, "csv: header but no data rows");

  bool has_timestamp = options.timestamp == TimestampColumn::present;
  if (options.timestamp == TimestampColumn::automatic) {
    const std::string first = lower(header[0]);
    double probe = 0.0;
    has_timestamp = first == "timestamp" || first == "time" || first == "date" ||
                    first == "datetime" ||
                    !parse_double(trim(split_line(lines[1])[0]), probe);
  }
  const std::size_t offset = has_timestamp ? 1 : 0;
  if (header.size() <= offset) fail(ErrorKind::data, "csv: no series columns");
  const std::size_t n = header.size() - offset;
  const std::size_t T = lines.size() - 1;

  Dataset ds;
  ds.names.assign(header.begin() + static_cast<std::ptrdiff_t>(offset), header.end());
  ds.series = Matrix(n, T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto cells = split_line(lines[t + 1]);
    const std::size_t row_no = t + 2;  // 1-based file line, header is line 1
    if (cells.size() != header.size()) {
      fail(ErrorKind::data, "csv: row " + std::to_string(row_no) + " has " +
                                std::to_string(cells.size()) + " cells, header has " +
                                std::to_string(header.size()));
    }
    if (has_timestamp) ds.timestamps.push_back(trim(cells[0]));
    for (std::size_t i = 0; i < n; ++i) {
      const std::string cell = trim(cells[i + offset]);
      double v = 0.0;
      if (cell.empty()) {
        fail(ErrorKind::data, "csv: missing value at row " + std::to_string(row_no) +
                                  ", column " + std::to_string(i + offset + 1) + " (" +
                                  ds.names[i] + ")");
      }
      if (!parse_double(cell, v)) {
        fail(ErrorKind::data, "csv: non-numeric value '" + cell + "' at row " +
                                  std::to_string(row_no) + ", column " +
                                  std::to_string(i + offset + 1) + " (" + ds.names[i] + ")");
      }
      ds.series(i, t) = v;
    }
  }
  ds.source_hash = hex64(fnv1a64(text));
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  return parse_csv(read_file(path), options);
}

std::string to_csv(const Dataset& ds) {
  const bool ts = !ds.timestamps.empty();
  std::string out;
  if (ts) out += "timestamp";
  for (std::size_t i = 0; i < ds.num_series(); ++i) {
    if (ts || i > 0) out += ',';
    out += quote_if_needed(i < ds.names.size() ? ds.names[i] : "series_" + std::to_string(i));
  }
  out += '\n';
  for (std::size_t t = 0; t < ds.num_steps(); ++t) {
    if (ts) out += quote_if_needed(ds.timestamps[t]);
    for (std::size_t i = 0; i < ds.num_series(); ++i) {
      if (ts || i > 0) out += ',';
      out += format_double(ds.series(i, t));
    }
    out += '\n';
  }
  return out;
}

void save_csv(const std::filesystem::path& path, const Dataset& ds) {
  write_file_atomic(path, to_csv(ds));
}

// ---------------------------------------------------------------- normalisation

const char* to_string(Normalization n) noexcept {
  return n == Normalization::none ? "none" : "standardize";
}

Normalization parse_normalization(const std::string& s) {
  if (s == "none") return Normalization::none;
  if (s == "standardize") return Normalization::standardize;
  fail(ErrorKind::config, "unknown normalization '" + s + "' (expected none|standardize)");
}

Matrix Normalizer::apply(const Matrix& m) const {
  if (scheme == Normalization::none) return m;
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& v : out.row(r)) v = (v - mean[r]) / scale[r];
  return out;
}

Matrix Normalizer::inverse(const Matrix& m) const {
  if (scheme == Normalization::none) return m;
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& v : out.row(r)) v = v * scale[r] + mean[r];
  return out;
}

std::pair<Dataset, Normalizer> normalize(const Dataset& ds, Normalization scheme,
                                         std::size_t train_end) {
  Normalizer norm;
  norm.scheme = scheme;
  if (scheme == Normalization::none) return {ds, norm};
  if (train_end < 2 || train_end > ds.num_steps()) {
    fail(ErrorKind::data, "normalize: training range of " + std::to_string(train_end) +
                              " steps is unusable");
  }
  const std::size_t n = ds.num_series();
  norm.mean.resize(n);
  norm.scale.resize(n);
  std::vector<std::string> degenerate;
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (std::size_t t = 0; t < train_end; ++t) m += ds.series(i, t);
    m /= static_cast<double>(train_end);
    double var = 0.0;
    for (std::size_t t = 0; t < train_end; ++t) {
      const double r = ds.series(i, t) - m;
      var += r * r;
    }
    var /= static_cast<double>(train_end);
    norm.mean[i] = m;
    norm.scale[i] = std::sqrt(var);
    if (!(norm.scale[i] > 0.0)) {
      degenerate.push_back(i < ds.names.size() ? ds.names[i] : std::to_string(i));
    }
  }
  if (!degenerate.empty()) {
    std::string list;
    for (const auto& s : degenerate) list += (list.empty() ? "" : ", ") + s;
    fail(ErrorKind::data, "normalize: zero variance on training range for series: " + list);
  }
  Dataset out = ds;
  out.series = norm.apply(ds.series);
  return {std::move(out), std::move(norm)};
}

// ---------------------------------------------------------------- synthetic

const char* to_string(Mixing m) noexcept { return m == Mixing::linear ? "linear" : "nonlinear"; }

Mixing parse_mixing(const std::string& s) {
  if (s == "linear") return Mixing::linear;
  if (s == "nonlinear") return Mixing::nonlinear;
  fail(ErrorKind::config, "unknown mixing '" + s + "' (expected linear|nonlinear)");
}

void SyntheticSpec::validate() const {
  if (series == 0 || steps == 0 || latent_dim == 0) {
    fail(ErrorKind::config, "synthetic: series, steps and latent_dim must be positive");
  }
  if (latent_dim > series) fail(ErrorKind::config, "synthetic: latent_dim exceeds series");
  if (!(noise_std >= 0.0)) fail(ErrorKind::config, "synthetic: noise_std must be >= 0");
  if (mixing_weights) {
    if (mixing != Mixing::linear) {
      fail(ErrorKind::config, "synthetic: mixing_weights only apply to linear mixing");
    }
    if (mixing_weights->rows() != series || mixing_weights->cols() != latent_dim) {
      fail(ErrorKind::config, "synthetic: mixing_weights must be series x latent_dim");
    }
  }
}

namespace {
constexpr double kPeriods[] = {24.0, 12.0, 42.0, 7.5, 31.0, 17.0, 55.0, 9.7};
}

Matrix synthetic_latents(const SyntheticSpec& spec) {
  spec.validate();
  RngStream phase_rng(spec.seed, 1);
  RngStream noise_rng(spec.seed, 2);
  Matrix z(spec.latent_dim, spec.steps);
  for (std::size_t k = 0; k < spec.latent_dim; ++k) {
    const double period = k < std::size(kPeriods) ? kPeriods[k] : 6.0 + 3.7 * static_cast<double>(k);
    const double phase = phase_rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < spec.steps; ++t) {
      z(k, t) = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase);
    }
  }
  if (spec.noise_std > 0.0) {
    for (double& v : z.data()) v += 0.5 * spec.noise_std * noise_rng.normal();
  }
  return z;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  const Matrix z = synthetic_latents(spec);
  const std::size_t n = spec.series, d = spec.latent_dim, T = spec.steps;
  RngStream mix_rng(spec.seed, 3);
  RngStream obs_rng(spec.seed, 4);
  Dataset ds;
  ds.series = Matrix(n, T);
  ds.frequency = "synthetic";

  if (spec.mixing == Mixing::linear) {
    Matrix a(n, d);
    if (spec.mixing_weights) {
      a = *spec.mixing_weights;
    } else {
      for (double& v : a.data()) v = mix_rng.normal() / std::sqrt(static_cast<double>(d));
    }
    ds.series = matmul(a, z);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> dir(d);
      double norm = 0.0;
      for (double& v : dir) {
        v = mix_rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (double& v : dir) v *= 1.5 / norm;
      const double level = 3.0 + mix_rng.uniform();
      const double sat = mix_rng.uniform(0.5, 1.0);
      const double cross = mix_rng.uniform(0.5, 1.0) * (mix_rng.uniform() < 0.5 ? -1.0 : 1.0);
      std::size_t k = 0, l = 0;
      if (d > 1) {
        k = static_cast<std::size_t>(mix_rng.next_u64() % d);
        l = (k + 1 + static_cast<std::size_t>(mix_rng.next_u64() % (d - 1))) % d;
      }
      for (std::size_t t = 0; t < T; ++t) {
        double proj = 0.0;
        for (std::size_t j = 0; j < d; ++j) proj += dir[j] * z(j, t);
        ds.series(i, t) = level + sat * std::tanh(proj) + cross * z(k, t) * z(l, t);
      }
    }
  }
  if (spec.noise_std > 0.0) {
    for (double& v : ds.series.data()) v += spec.noise_std * obs_rng.normal();
  }
  for (std::size_t i = 0; i < n; ++i) ds.names.push_back("s" + std::to_string(i));
  ds.source_hash = hex64(fnv1a64(to_csv(ds)));
  return ds;
}

std::string dataset_manifest_json(const Dataset& ds, const Split& split, Normalization scheme) {
  nlohmann::ordered_json j;
  j["n"] = ds.num_series();
  j["T"] = ds.num_steps();
  j["tau"] = split.horizon;
  j["k"] = split.windows;
  j["train_end"] = split.train_end;
  j["validation"] = split.validation;
  j["normalization"] = to_string(scheme);
  j["source_hash"] = ds.source_hash;
  return j.dump(2) + "\n";
}

}  // namespace tlae
