#pragma once

#include <cstdint>
#include <functional>

#include "tlae/model.hpp"

namespace tlae {

// Loss of a parameter set; fills `grads` with the analytic gradient when given.
// Must be deterministic in the parameters (freeze any noise beforehand).
using LossFn = std::function<double(const ModelParams& params, GradientSet* grads)>;

struct FiniteDiffOptions {
  double h = 1e-5;
  // Coordinates to probe, spread evenly over every tensor (tensors smaller
  // than their share are probed in full).
  std::size_t coordinates = 200;
  std::uint64_t seed = 0;
  // Coordinates for which this returns true are left out, e.g. l1 kinks.
  std::function<bool(const ModelParams&, std::size_t tensor, std::size_t index)> skip;
};

struct FiniteDiffReport {
  double max_relative_error = 0.0;  // |analytic - central| / max(1, |analytic|)
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
};

FiniteDiffReport finite_diff_check(const ModelParams& params, const LossFn& loss,
                                   const FiniteDiffOptions& options = {});

}  // namespace tlae
