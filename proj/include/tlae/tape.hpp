#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tlae/matrix.hpp"

namespace tlae {

// Handle to a node on a Tape. Only meaningful for the tape that created it.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const noexcept { return id != UINT32_MAX; }
};

// One gradient matrix per tracked parameter, same order and shapes.
using GradientSet = std::vector<Matrix>;

// Reverse-mode recording of matrix primitives. Nodes are appended in
// evaluation order, so index order is a topological order of the graph.
// A tape is built for one forward pass, swept backward once, then dropped.
class Tape {
 public:
  enum class Op : std::uint8_t {
    constant,
    parameter,
    matmul,
    add,
    sub,
    mul,
    add_bias,
    scale,
    relu,
    tanh,
    sigmoid,
    exp,
    log,
    abs,
    slice_rows,
    slice_cols,
    concat_cols,
    sum,
    sum_abs,
    sum_squares,
    gaussian_nll,
  };

  Tape() = default;

  Var constant(Matrix value);
  // Leaf tracked for gradients; `index` is the slot it fills in the GradientSet.
  Var parameter(const Matrix& value, std::size_t index);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  // m (r x c) plus column vector bias (r x 1) broadcast over columns.
  Var add_bias(Var m, Var bias);
  Var scale(Var a, double s);
  Var relu(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var abs(Var a);
  Var slice_rows(Var a, std::size_t begin, std::size_t end);
  Var slice_cols(Var a, std::size_t begin, std::size_t end);
  Var concat_cols(std::span<const Var> parts);

  // Scalar (1x1) reductions.
  Var sum(Var a);
  // Sum of |a|; the subgradient at 0 is 0.
  Var sum_abs(Var a);
  Var sum_squares(Var a);
  // Negative log-density of x under N(mu, I), summed over columns:
  // sum_j (d/2) log(2 pi) + 1/2 ||x_j - mu_j||^2, with d = rows.
  Var gaussian_nll(Var x, Var mu);

  const Matrix& value(Var v) const;
  double scalar(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  Op op(Var v) const;

  // Reverse sweep from a 1x1 node. Returns d loss / d parameter for every slot
  // in [0, shapes.size()); parameters absent from the tape get zero matrices.
  GradientSet backward(Var loss, std::span<const Matrix> shapes);

  // Gradient of the last backward sweep with respect to any node (zero matrix
  // if the node did not depend on a parameter).
  Matrix grad(Var v) const;

  // Node ids in the order the last backward sweep visited them.
  const std::vector<std::uint32_t>& backward_order() const noexcept { return order_; }

  // Recomputes every non-leaf node from the recorded leaves.
  std::vector<Matrix> replay() const;

 private:
  struct Node {
    Op op = Op::constant;
    std::uint32_t a = UINT32_MAX;
    std::uint32_t b = UINT32_MAX;
    std::vector<std::uint32_t> parts;  // concat inputs
    std::size_t lo = 0;
    std::size_t hi = 0;
    double factor = 0.0;
    std::size_t param = 0;
    bool needs_grad = false;
    Matrix value;
    Matrix grad;
  };

  Var push(Node node);
  template <class Get>
  static Matrix compute(const Node& node, Get&& input);
  void check(Var v) const;
  void accumulate(std::uint32_t id, const Matrix& g);
  void accumulate(std::uint32_t id, Matrix&& g);
  void propagate(std::uint32_t id);
  std::string describe(std::uint32_t id) const;

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
};

const char* to_string(Tape::Op op) noexcept;

}  // namespace tlae
