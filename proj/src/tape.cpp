#include "tlae/tape.hpp"

#include <cmath>
#include <numbers>

#include "tlae/error.hpp"

namespace tlae {

const char* to_string(Tape::Op op) noexcept {
  using Op = Tape::Op;
  switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::matmul: return "matmul";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::add_bias: return "add_bias";
    case Op::scale: return "scale";
    case Op::relu: return "relu";
    case Op::tanh: return "tanh";
    case Op::sigmoid: return "sigmoid";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::abs: return "abs";
    case Op::slice_rows: return "slice_rows";
    case Op::slice_cols: return "slice_cols";
    case Op::concat_cols: return "concat_cols";
    case Op::sum: return "sum";
    case Op::sum_abs: return "sum_abs";
    case Op::sum_squares: return "sum_squares";
    case Op::gaussian_nll: return "gaussian_nll";
  }
  return "unknown";
}

namespace {

inline double sign0(double x) noexcept { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Matrix scalar_matrix(double v) { return Matrix(1, 1, v); }

void add_into(Matrix& dst, const Matrix& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

template <class Get>
Matrix Tape::compute(const Node& node, Get&& input) {
  switch (node.op) {
    case Op::constant:
    case Op::parameter:
      return node.value;
    case Op::matmul:
      return tlae::matmul(input(node.a), input(node.b));
    case Op::add:
      return ew(EwOp::add, input(node.a), &input(node.b));
    case Op::sub:
      return ew(EwOp::sub, input(node.a), &input(node.b));
    case Op::mul:
      return ew(EwOp::mul, input(node.a), &input(node.b));
    case Op::add_bias: {
      const Matrix& m = input(node.a);
      const Matrix& bias = input(node.b);
      if (bias.cols() != 1 || bias.rows() != m.rows()) {
        fail(ErrorKind::dimension,
             "add_bias: bias " + bias.shape_string() + " does not fit " + m.shape_string());
      }
      Matrix out = m;
      for (std::size_t r = 0; r < out.rows(); ++r) {
        const double bv = bias(r, 0);
        for (double& v : out.row(r)) v += bv;
      }
      return out;
    }
    case Op::scale:
      return node.factor * input(node.a);
    case Op::relu:
      return ew(EwOp::relu, input(node.a));
    case Op::tanh:
      return ew(EwOp::tanh, input(node.a));
    case Op::sigmoid:
      return ew(EwOp::sigmoid, input(node.a));
    case Op::exp:
      return ew(EwOp::exp, input(node.a));
    case Op::log:
      return ew(EwOp::log, input(node.a));
    case Op::abs:
      return ew(EwOp::abs, input(node.a));
    case Op::slice_rows:
      return input(node.a).row_range(node.lo, node.hi);
    case Op::slice_cols:
      return input(node.a).col_range(node.lo, node.hi);
    case Op::concat_cols: {
      const std::size_t rows = input(node.parts.front()).rows();
      std::size_t cols = 0;
      for (auto p : node.parts) {
        const Matrix& m = input(p);
        if (m.rows() != rows) {
          fail(ErrorKind::dimension, "concat_cols: row mismatch " +
                                         input(node.parts.front()).shape_string() + " vs " +
                                         m.shape_string());
        }
        cols += m.cols();
      }
      Matrix out(rows, cols);
      std::size_t at = 0;
      for (auto p : node.parts) {
        const Matrix& m = input(p);
        out.set_col_range(at, m);
        at += m.cols();
      }
      return out;
    }
    case Op::sum:
      return scalar_matrix(tlae::sum(input(node.a)));
    case Op::sum_abs: {
      double s = 0.0;
      for (double v : input(node.a).data()) s += std::fabs(v);
      return scalar_matrix(s);
    }
    case Op::sum_squares: {
      double s = 0.0;
      for (double v : input(node.a).data()) s += v * v;
      return scalar_matrix(s);
    }
    case Op::gaussian_nll: {
      const Matrix& x = input(node.a);
      const Matrix& mu = input(node.b);
      require_same_shape(x, mu, "gaussian_nll");
      double sq = 0.0;
      auto xs = x.data();
      auto ms = mu.data();
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = xs[i] - ms[i];
        sq += r * r;
      }
      const double constant = 0.5 * static_cast<double>(x.rows()) *
                              std::log(2.0 * std::numbers::pi) * static_cast<double>(x.cols());
      return scalar_matrix(constant + 0.5 * sq);
    }
  }
  fail(ErrorKind::contract, "unknown tape op");
}

Var Tape::push(Node node) {
  if (nodes_.size() >= UINT32_MAX - 1) fail(ErrorKind::contract, "tape too large");
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  if (node.op != Op::constant && node.op != Op::parameter) {
    node.value = compute(node, [this](std::uint32_t i) -> const Matrix& { return nodes_[i].value; });
    if (!node.value.all_finite()) {
      nodes_.push_back(std::move(node));
      fail(ErrorKind::numeric, "non-finite value produced at " + describe(id));
    }
  }
  nodes_.push_back(std::move(node));
  return Var{id};
}

void Tape::check(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) fail(ErrorKind::contract, "invalid tape variable");
}

std::string Tape::describe(std::uint32_t id) const {
  return "node #" + std::to_string(id) + " (" + to_string(nodes_[id].op) + ", " +
         nodes_[id].value.shape_string() + ")";
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(const Matrix& value, std::size_t index) {
  Node n;
  n.op = Op::parameter;
  n.value = value;
  n.param = index;
  n.needs_grad = true;
  return push(std::move(n));
}

#define TLAE_BINARY(name, opcode)          \
  Var Tape::name(Var a, Var b) {           \
    check(a);                              \
    check(b);                              \
    Node n;                                \
    n.op = Op::opcode;                     \
    n.a = a.id;                            \
    n.b = b.id;                            \
    n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad; \
    return push(std::move(n));             \
  }

TLAE_BINARY(matmul, matmul)
TLAE_BINARY(add, add)
TLAE_BINARY(sub, sub)
TLAE_BINARY(mul, mul)
TLAE_BINARY(add_bias, add_bias)
TLAE_BINARY(gaussian_nll, gaussian_nll)
#undef TLAE_BINARY

#define TLAE_UNARY(name, opcode)           \
  Var Tape::name(Var a) {                  \
    check(a);                              \
    Node n;                                \
    n.op = Op::opcode;                     \
    n.a = a.id;                            \
    n.needs_grad = nodes_[a.id].needs_grad; \
    return push(std::move(n));             \
  }

TLAE_UNARY(relu, relu)
TLAE_UNARY(tanh, tanh)
TLAE_UNARY(sigmoid, sigmoid)
TLAE_UNARY(exp, exp)
TLAE_UNARY(log, log)
TLAE_UNARY(abs, abs)
TLAE_UNARY(sum, sum)
TLAE_UNARY(sum_abs, sum_abs)
TLAE_UNARY(sum_squares, sum_squares)
#undef TLAE_UNARY

Var Tape::scale(Var a, double s) {
  check(a);
  Node n;
  n.op = Op::scale;
  n.a = a.id;
  n.factor = s;
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Var Tape::slice_rows(Var a, std::size_t begin, std::size_t end) {
  check(a);
  Node n;
  n.op = Op::slice_rows;
  n.a = a.id;
  n.lo = begin;
  n.hi = end;
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Var Tape::slice_cols(Var a, std::size_t begin, std::size_t end) {
  check(a);
  Node n;
  n.op = Op::slice_cols;
  n.a = a.id;
  n.lo = begin;
  n.hi = end;
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::contract, "concat_cols: no inputs");
  Node n;
  n.op = Op::concat_cols;
  n.parts.reserve(parts.size());
  for (Var p : parts) {
    check(p);
    n.parts.push_back(p.id);
    n.needs_grad = n.needs_grad || nodes_[p.id].needs_grad;
  }
  return push(std::move(n));
}

const Matrix& Tape::value(Var v) const {
  check(v);
  return nodes_[v.id].value;
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) {
    fail(ErrorKind::contract, "expected scalar node, got " + m.shape_string());
  }
  return m(0, 0);
}

Tape::Op Tape::op(Var v) const {
  check(v);
  return nodes_[v.id].op;
}

void Tape::accumulate(std::uint32_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.empty() && !n.value.empty()) {
    n.grad = g;
  } else {
    add_into(n.grad, g);
  }
}

void Tape::accumulate(std::uint32_t id, Matrix&& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.empty() && !n.value.empty()) {
    n.grad = std::move(g);
  } else {
    add_into(n.grad, g);
  }
}

void Tape::propagate(std::uint32_t id) {
  // accumulate() only writes to inputs, which precede `id`, so these
  // references stay valid.
  const Node& n = nodes_[id];
  const Matrix& g = n.grad;
  auto needs = [this](std::uint32_t i) { return nodes_[i].needs_grad; };
  switch (n.op) {
    case Op::constant:
    case Op::parameter:
      return;
    case Op::matmul: {
      const Matrix& A = nodes_[n.a].value;
      const Matrix& B = nodes_[n.b].value;
      if (needs(n.a)) accumulate(n.a, matmul_nt(g, B));
      if (needs(n.b)) accumulate(n.b, matmul_tn(A, g));
      return;
    }
    case Op::add:
      accumulate(n.a, g);
      accumulate(n.b, g);
      return;
    case Op::sub:
      accumulate(n.a, g);
      if (needs(n.b)) accumulate(n.b, -1.0 * g);
      return;
    case Op::mul: {
      if (needs(n.a)) accumulate(n.a, hadamard(g, nodes_[n.b].value));
      if (needs(n.b)) accumulate(n.b, hadamard(g, nodes_[n.a].value));
      return;
    }
    case Op::add_bias: {
      accumulate(n.a, g);
      if (needs(n.b)) {
        Matrix gb(g.rows(), 1);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          double s = 0.0;
          for (double v : g.row(r)) s += v;
          gb(r, 0) = s;
        }
        accumulate(n.b, std::move(gb));
      }
      return;
    }
    case Op::scale:
      accumulate(n.a, n.factor * g);
      return;
    case Op::relu: {
      Matrix d = g;
      auto x = nodes_[n.a].value.data();
      auto dd = d.data();
      for (std::size_t i = 0; i < dd.size(); ++i)
        if (!(x[i] > 0.0)) dd[i] = 0.0;
      accumulate(n.a, std::move(d));
      return;
    }
    case Op::tanh: {
      Matrix d = g;
      auto y = n.value.data();
      auto dd = d.data();
      for (std::size_t i = 0; i < dd.size(); ++i) dd[i] *= 1.0 - y[i] * y[i];
      accumulate(n.a, std::move(d));
      return;
    }
    case Op::sigmoid: {
      Matrix d = g;
      auto y = n.value.data();
      auto dd = d.data();
      for (std::size_t i = 0; i < dd.size(); ++i) dd[i] *= y[i] * (1.0 - y[i]);
      accumulate(n.a, std::move(d));
      return;
    }
    case Op::exp:
      accumulate(n.a, hadamard(g, n.value));
      return;
    case Op::log: {
      Matrix d = g;
      auto x = nodes_[n.a].value.data();
      auto dd = d.data();
      for (std::size_t i = 0; i < dd.size(); ++i) dd[i] /= x[i];
      accumulate(n.a, std::move(d));
      return;
    }
    case Op::abs: {
      Matrix d = g;
      auto x = nodes_[n.a].value.data();
      auto dd = d.data();
      for (std::size_t i = 0; i < dd.size(); ++i) dd[i] *= sign0(x[i]);
      accumulate(n.a, std::move(d));
      return;
    }
    case Op::slice_rows: {
      if (!needs(n.a)) return;
      const Matrix& src = nodes_[n.a].value;
      Matrix d(src.rows(), src.cols());
      for (std::size_t r = n.lo; r < n.hi; ++r) {
        auto dst = d.row(r);
        auto from = g.row(r - n.lo);
        std::copy(from.begin(), from.end(), dst.begin());
      }
      accumulate(n.a, std::move(d));
      return;
    }
    case Op::slice_cols: {
      if (!needs(n.a)) return;
      const Matrix& src = nodes_[n.a].value;
      Matrix d(src.rows(), src.cols());
      d.set_col_range(n.lo, g);
      accumulate(n.a, std::move(d));
      return;
    }
    case Op::concat_cols: {
      std::size_t at = 0;
      for (auto p : n.parts) {
        const std::size_t w = nodes_[p].value.cols();
        if (needs(p)) accumulate(p, g.col_range(at, at + w));
        at += w;
      }
      return;
    }
    case Op::sum: {
      const Matrix& x = nodes_[n.a].value;
      accumulate(n.a, Matrix(x.rows(), x.cols(), g(0, 0)));
      return;
    }
    case Op::sum_abs: {
      Matrix d = nodes_[n.a].value;
      const double s = g(0, 0);
      for (double& v : d.data()) v = s * sign0(v);
      accumulate(n.a, std::move(d));
      return;
    }
    case Op::sum_squares: {
      accumulate(n.a, (2.0 * g(0, 0)) * nodes_[n.a].value);
      return;
    }
    case Op::gaussian_nll: {
      const double s = g(0, 0);
      Matrix r = nodes_[n.a].value - nodes_[n.b].value;
      if (needs(n.b)) accumulate(n.b, (-s) * r);
      if (needs(n.a)) accumulate(n.a, s * r);
      return;
    }
  }
}

GradientSet Tape::backward(Var loss, std::span<const Matrix> shapes) {
  check(loss);
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    fail(ErrorKind::contract, "backward: loss node " + describe(loss.id) + " is not scalar");
  }
  for (Node& n : nodes_) n.grad = Matrix();
  order_.clear();
  order_.reserve(loss.id + 1);
  if (nodes_[loss.id].needs_grad) nodes_[loss.id].grad = Matrix(1, 1, 1.0);

  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    order_.push_back(id);
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (!n.grad.all_finite()) {
      fail(ErrorKind::numeric, "non-finite gradient at " + describe(id));
    }
    propagate(id);
  }

  GradientSet grads;
  grads.reserve(shapes.size());
  for (const Matrix& s : shapes) grads.emplace_back(s.rows(), s.cols());
  for (const Node& n : nodes_) {
    if (n.op != Op::parameter || n.grad.empty()) continue;
    if (n.param >= grads.size()) {
      fail(ErrorKind::contract, "parameter slot " + std::to_string(n.param) +
                                    " outside gradient set of size " +
                                    std::to_string(grads.size()));
    }
    require_same_shape(grads[n.param], n.grad, "backward: parameter gradient");
    add_into(grads[n.param], n.grad);
  }
  return grads;
}

Matrix Tape::grad(Var v) const {
  check(v);
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

std::vector<Matrix> Tape::replay() const {
  std::vector<Matrix> values;
  values.reserve(nodes_.size());
  for (const Node& n : nodes_) {
    values.push_back(compute(n, [&values](std::uint32_t i) -> const Matrix& { return values[i]; }));
  }
  return values;
}

}  // namespace tlae
