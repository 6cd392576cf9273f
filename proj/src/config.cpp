#include "tlae/config.hpp"

#include <set>

#include "tlae/error.hpp"
#include "tlae/hash.hpp"
#include "tlae/metrics.hpp"

namespace tlae {

namespace {

using nlohmann::json;

// Typed access to one JSON object; remembers which keys were consumed so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(ErrorKind::config, where() + ": expected an object");
  }

  static bool is_count(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::optional<std::uint64_t> uint(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!is_count(*v)) bad(key, "a non-negative integer");
    return v->get<std::uint64_t>();
  }

  std::optional<double> number(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) bad(key, "a number");
    return v->get<double>();
  }

  std::optional<bool> boolean(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) bad(key, "true or false");
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) bad(key, "a string");
    return v->get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) bad(key, "an array of numbers");
    std::vector<double> out;
    for (const json& e : *v) {
      if (!e.is_number()) bad(key, "an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::optional<std::vector<std::size_t>> counts(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) bad(key, "an array of non-negative integers");
    std::vector<std::size_t> out;
    for (const json& e : *v) {
      if (!is_count(e)) bad(key, "an array of non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  std::optional<std::vector<std::string>> strings(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) bad(key, "an array of strings");
    std::vector<std::string> out;
    for (const json& e : *v) {
      if (!e.is_string()) bad(key, "an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::optional<Section> child(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    return Section(*v, field(key));
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  // Runs `fn` and prefixes any config error with this field's path.
  template <class Fn>
  auto checked(const std::string& key, Fn&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::config) throw;
      fail(ErrorKind::config, field(key) + ": " + e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(ErrorKind::config, "unknown key " + field(it.key()));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  [[noreturn]] void bad(const std::string& key, const char* expected) const {
    fail(ErrorKind::config, field(key) + ": expected " + expected);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

TimestampColumn parse_timestamp(const std::string& s) {
  if (s == "auto") return TimestampColumn::automatic;
  if (s == "present") return TimestampColumn::present;
  if (s == "absent") return TimestampColumn::absent;
  fail(ErrorKind::config, "unknown timestamp mode '" + s + "' (expected auto|present|absent)");
}

const char* to_string(TimestampColumn t) {
  switch (t) {
    case TimestampColumn::automatic: return "auto";
    case TimestampColumn::present: return "present";
    case TimestampColumn::absent: return "absent";
  }
  return "auto";
}

SyntheticSpec parse_synthetic(Section s) {
  SyntheticSpec spec;
  if (auto v = s.uint("series")) spec.series = *v;
  if (auto v = s.uint("steps")) spec.steps = *v;
  if (auto v = s.uint("latent_dim")) spec.latent_dim = *v;
  if (auto v = s.string("mixing")) spec.mixing = s.checked("mixing", [&] { return parse_mixing(*v); });
  if (auto v = s.number("noise_std")) spec.noise_std = *v;
  if (auto v = s.uint("seed")) spec.seed = *v;
  if (const json* w = s.raw("mixing_weights")) {
    if (!w->is_array() || w->empty()) {
      fail(ErrorKind::config, s.field("mixing_weights") + ": expected an array of rows");
    }
    const std::size_t rows = w->size();
    const std::size_t cols = (*w)[0].is_array() ? (*w)[0].size() : 0;
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      const json& row = (*w)[r];
      if (!row.is_array() || row.size() != cols) {
        fail(ErrorKind::config, s.field("mixing_weights") + ": rows must be equal-length arrays");
      }
      for (std::size_t c = 0; c < cols; ++c) {
        if (!row[c].is_number()) {
          fail(ErrorKind::config, s.field("mixing_weights") + ": entries must be numbers");
        }
        m(r, c) = row[c].get<double>();
      }
    }
    spec.mixing_weights = std::move(m);
  }
  s.finish();
  s.checked("", [&] { spec.validate(); });
  return spec;
}

DatasetSection parse_dataset(Section s, const std::filesystem::path& base_dir) {
  DatasetSection ds;
  if (auto v = s.string("path")) {
    std::filesystem::path p(*v);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    ds.path = std::filesystem::absolute(p).lexically_normal();
  }
  if (auto v = s.child("synthetic")) ds.synthetic = parse_synthetic(std::move(*v));
  if (auto v = s.string("normalization")) {
    ds.normalization = s.checked("normalization", [&] { return parse_normalization(*v); });
  }
  if (auto v = s.string("timestamp")) {
    ds.timestamp = s.checked("timestamp", [&] { return parse_timestamp(*v); });
  }
  if (auto v = s.uint("max_steps")) ds.max_steps = *v;
  s.finish();
  if (ds.path && ds.synthetic) {
    fail(ErrorKind::config, "dataset: give either dataset.path or dataset.synthetic, not both");
  }
  if (!ds.path && !ds.synthetic) {
    fail(ErrorKind::config, "dataset.path: missing (or provide dataset.synthetic)");
  }
  return ds;
}

ModelConfig parse_model(Section s) {
  ModelConfig m;
  if (auto v = s.uint("input_dim")) m.input_dim = *v;
  if (auto v = s.counts("encoder_dims")) m.encoder_dims = *v;
  if (auto v = s.uint("lstm_layers")) m.lstm_layers = *v;
  if (auto v = s.uint("lstm_hidden")) m.lstm_hidden = *v;
  if (auto v = s.uint("seq_len")) m.seq_len = *v;
  if (auto v = s.string("mode")) m.mode = s.checked("mode", [&] { return parse_mode(*v); });
  if (auto v = s.string("activation")) {
    m.activation = s.checked("activation", [&] { return parse_activation(*v); });
  }
  s.finish();
  if (m.encoder_dims.empty()) fail(ErrorKind::config, "model.encoder_dims: missing or empty");
  for (std::size_t v : m.encoder_dims) {
    if (v == 0) fail(ErrorKind::config, "model.encoder_dims: entries must be positive");
  }
  if (m.lstm_layers == 0) fail(ErrorKind::config, "model.lstm_layers: must be >= 1");
  if (m.lstm_hidden == 0) fail(ErrorKind::config, "model.lstm_hidden: must be >= 1");
  if (m.seq_len == 0) fail(ErrorKind::config, "model.seq_len: must be >= 1");
  return m;
}

TrainConfig parse_train(Section s, const ModelConfig& model) {
  TrainConfig t;
  t.batch_size = 2 * model.seq_len;
  t.lambda = model.mode == Mode::probabilistic ? 0.005 : 0.5;
  if (auto v = s.uint("batch_size")) t.batch_size = *v;
  if (auto v = s.uint("stride")) t.stride = *v;
  if (auto v = s.uint("epochs")) t.epochs = *v;
  if (auto v = s.number("learning_rate")) t.learning_rate = *v;
  if (auto v = s.number("lambda")) t.lambda = *v;
  if (auto v = s.uint("p")) t.p = static_cast<int>(*v);
  if (auto v = s.uint("q")) t.q = static_cast<int>(*v);
  if (auto v = s.uint("validation")) t.validation = *v;
  if (auto v = s.uint("validation_horizon")) t.validation_horizon = *v;
  if (auto v = s.uint("validation_samples")) t.validation_samples = *v;
  if (auto v = s.number("clip_norm")) t.clip_norm = *v;
  s.finish();
  try {
    t.validate(model);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::config) throw;
    fail(ErrorKind::config, std::string("config: ") + e.what());
  }
  return t;
}

EvalSection parse_eval(Section s, Mode mode) {
  EvalSection e;
  if (auto v = s.uint("horizon")) e.rolling.horizon = *v;
  if (auto v = s.uint("windows")) e.rolling.windows = *v;
  if (auto v = s.uint("context")) e.rolling.context = *v;
  if (auto v = s.uint("samples")) e.rolling.samples = *v;
  if (auto v = s.numbers("quantiles")) e.rolling.quantiles = *v;
  if (auto v = s.strings("metrics")) e.metrics = *v;
  if (auto v = s.uint("num_quantiles")) e.num_quantiles = *v;
  if (auto v = s.boolean("trajectory_sampling")) e.ensemble.trajectory_sampling = *v;
  s.finish();
  if (!s.has("samples") && mode == Mode::probabilistic) e.rolling.samples = 1000;
  if (e.metrics.empty()) {
    e.metrics = mode == Mode::probabilistic
                    ? std::vector<std::string>{"crps-sum", "crps", "wape"}
                    : std::vector<std::string>{"wape", "mape", "smape"};
  }
  try {
    e.rolling.validate();
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::config) throw;
    fail(ErrorKind::config, std::string("config: ") + err.what());
  }
  if (e.num_quantiles == 0) fail(ErrorKind::config, "eval.num_quantiles: must be >= 1");
  std::set<std::string> unique;
  bool needs_crps = false;
  for (const std::string& m : e.metrics) {
    if (!unique.insert(m).second) fail(ErrorKind::config, "eval.metrics: duplicate '" + m + "'");
    if (is_probabilistic_metric(m)) {
      if (mode != Mode::probabilistic) {
        fail(ErrorKind::config, "eval.metrics: '" + m +
                                    "' is a probabilistic-only metric but model.mode is "
                                    "deterministic");
      }
      needs_crps = needs_crps || m == "crps" || m == "crps-sum";
    } else if (!is_point_metric(m)) {
      fail(ErrorKind::config, "eval.metrics: unknown metric '" + m + "'");
    }
  }
  if (needs_crps && e.rolling.samples < e.num_quantiles) {
    fail(ErrorKind::config, "eval.samples: CRPS needs at least eval.num_quantiles (" +
                                std::to_string(e.num_quantiles) + ") samples");
  }
  return e;
}

SweepSection parse_sweep(Section s) {
  SweepSection sw;
  if (auto v = s.string("axis")) sw.axis = *v;
  if (auto v = s.numbers("values")) sw.values = *v;
  s.finish();
  if (sw.axis != "batch_size" && sw.axis != "lambda" && sw.axis != "latent_dim") {
    fail(ErrorKind::config, "sweep.axis: expected batch_size|lambda|latent_dim");
  }
  if (sw.values.empty()) fail(ErrorKind::config, "sweep.values: missing or empty");
  return sw;
}

}  // namespace

void RunConfig::validate_against(std::size_t series, std::size_t steps) const {
  if (model.input_dim != 0 && model.input_dim != series) {
    fail(ErrorKind::config, "model.input_dim " + std::to_string(model.input_dim) +
                                " does not match the dataset's " + std::to_string(series) +
                                " series");
  }
  if (model.latent_dim() >= series) {
    fail(ErrorKind::config, "model.encoder_dims: latent dim " +
                                std::to_string(model.latent_dim()) +
                                " must be smaller than the number of series (" +
                                std::to_string(series) + ")");
  }
  const std::size_t test = eval.rolling.horizon * eval.rolling.windows;
  if (steps < test + train.validation + train.batch_size) {
    fail(ErrorKind::data, "dataset has " + std::to_string(steps) + " steps; need " +
                              std::to_string(test) + " test + " +
                              std::to_string(train.validation) + " validation + " +
                              std::to_string(train.batch_size) + " for one training window");
  }
}

RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  Section root(doc, "");
  RunConfig rc;
  if (auto v = root.uint("seed")) rc.seed = *v;
  if (auto v = root.string("output_dir")) rc.output_dir = *v;
  auto ds = root.child("dataset");
  if (!ds) fail(ErrorKind::config, "dataset: missing section");
  rc.dataset = parse_dataset(std::move(*ds), base_dir);
  auto model = root.child("model");
  if (!model) fail(ErrorKind::config, "model: missing section");
  rc.model = parse_model(std::move(*model));
  auto train = root.child("train");
  rc.train = parse_train(train ? std::move(*train) : Section(json::object(), "train"), rc.model);
  rc.train.seed = rc.seed;
  auto eval = root.child("eval");
  rc.eval = parse_eval(eval ? std::move(*eval) : Section(json::object(), "eval"), rc.model.mode);
  if (auto sw = root.child("sweep")) rc.sweep = parse_sweep(std::move(*sw));
  root.finish();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, path.string() + ": invalid JSON: " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

nlohmann::ordered_json to_json(const ModelConfig& m) {
  nlohmann::ordered_json j;
  j["input_dim"] = m.input_dim;
  j["encoder_dims"] = m.encoder_dims;
  j["lstm_layers"] = m.lstm_layers;
  j["lstm_hidden"] = m.lstm_hidden;
  j["seq_len"] = m.seq_len;
  j["mode"] = to_string(m.mode);
  j["activation"] = to_string(m.activation);
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig m = parse_model(Section(j, "model"));
  m.validate();
  return m;
}

nlohmann::ordered_json to_json(const RunConfig& rc) {
  nlohmann::ordered_json j;
  j["seed"] = rc.seed;
  j["output_dir"] = rc.output_dir.string();
  nlohmann::ordered_json ds;
  if (rc.dataset.path) ds["path"] = rc.dataset.path->string();
  if (rc.dataset.synthetic) {
    const SyntheticSpec& s = *rc.dataset.synthetic;
    nlohmann::ordered_json syn;
    syn["series"] = s.series;
    syn["steps"] = s.steps;
    syn["latent_dim"] = s.latent_dim;
    syn["mixing"] = to_string(s.mixing);
    syn["noise_std"] = s.noise_std;
    syn["seed"] = s.seed;
    if (s.mixing_weights) {
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (std::size_t r = 0; r < s.mixing_weights->rows(); ++r) {
        auto row = s.mixing_weights->row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
      }
      syn["mixing_weights"] = rows;
    }
    ds["synthetic"] = syn;
  }
  ds["normalization"] = to_string(rc.dataset.normalization);
  ds["timestamp"] = to_string(rc.dataset.timestamp);
  ds["max_steps"] = rc.dataset.max_steps;
  j["dataset"] = ds;

  nlohmann::ordered_json model = to_json(rc.model);
  if (rc.model.input_dim == 0) model.erase("input_dim");
  j["model"] = model;

  const TrainConfig& t = rc.train;
  j["train"] = {{"batch_size", t.batch_size},
                {"stride", t.stride},
                {"epochs", t.epochs},
                {"learning_rate", t.learning_rate},
                {"lambda", t.lambda},
                {"p", t.p},
                {"q", t.q},
                {"validation", t.validation},
                {"validation_horizon", t.validation_horizon},
                {"validation_samples", t.validation_samples},
                {"clip_norm", t.clip_norm}};
  const EvalSection& e = rc.eval;
  j["eval"] = {{"horizon", e.rolling.horizon},
               {"windows", e.rolling.windows},
               {"context", e.rolling.context},
               {"samples", e.rolling.samples},
               {"quantiles", e.rolling.quantiles},
               {"metrics", e.metrics},
               {"num_quantiles", e.num_quantiles},
               {"trajectory_sampling", e.ensemble.trajectory_sampling}};
  if (rc.sweep) j["sweep"] = {{"axis", rc.sweep->axis}, {"values", rc.sweep->values}};
  return j;
}

std::string config_hash(const RunConfig& config) {
  nlohmann::ordered_json j = to_json(config);
  j.erase("output_dir");  // where results go does not change what they are
  return hex64(fnv1a64(j.dump()));
}

}  // namespace tlae
