#include "tlae/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "tlae/config.hpp"
#include "tlae/error.hpp"
#include "tlae/hash.hpp"

namespace tlae {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'L', 'A', 'E', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out += s;
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string(const char* what) {
    const auto len = get<std::uint64_t>(what);
    need(len, what);
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }

  void get_doubles(std::span<double> out, const char* what) {
    need(out.size() * sizeof(double), what);
    std::memcpy(out.data(), bytes_.data() + pos_, out.size() * sizeof(double));
    pos_ += out.size() * sizeof(double);
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n, const char* what) const {
    if (n > bytes_.size() - pos_) {
      fail(ErrorKind::io, std::string("checkpoint truncated while reading ") + what);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ModelParams& params) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, to_json(params.config()).dump());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors().size()));
  for (std::size_t i = 0; i < params.tensors().size(); ++i) {
    const Matrix& m = params[i];
    put_string(out, params.names()[i]);
    put<std::uint64_t>(out, m.rows());
    put<std::uint64_t>(out, m.cols());
    out.append(reinterpret_cast<const char*>(m.data().data()), m.size() * sizeof(double));
  }
  return out;
}

ModelParams deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    fail(ErrorKind::io, "not a TLAE checkpoint (bad magic)");
  }
  Reader in(bytes.substr(sizeof kMagic));
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    fail(ErrorKind::io, "unsupported checkpoint version " + std::to_string(version));
  }
  nlohmann::json cfg_json;
  try {
    cfg_json = nlohmann::json::parse(in.get_string("config"));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::io, std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  ModelParams params = ModelParams::zeros(model_config_from_json(cfg_json));
  const auto count = in.get<std::uint32_t>("tensor count");
  if (count != params.tensors().size()) {
    fail(ErrorKind::io, "checkpoint holds " + std::to_string(count) + " tensors, config implies " +
                            std::to_string(params.tensors().size()));
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = in.get_string("tensor name");
    if (name != params.names()[i]) {
      fail(ErrorKind::io, "checkpoint tensor " + std::to_string(i) + " is '" + name +
                              "', expected '" + params.names()[i] + "'");
    }
    const auto rows = in.get<std::uint64_t>("rows");
    const auto cols = in.get<std::uint64_t>("cols");
    Matrix& m = params[i];
    if (rows != m.rows() || cols != m.cols()) {
      fail(ErrorKind::io, "checkpoint tensor '" + name + "' is " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", config implies " + m.shape_string());
    }
    in.get_doubles(m.data(), "tensor data");
  }
  if (!in.done()) fail(ErrorKind::io, "checkpoint has trailing bytes");
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  write_file_atomic(path, serialize_checkpoint(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

}  // namespace tlae
