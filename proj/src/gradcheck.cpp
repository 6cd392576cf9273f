#include "tlae/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tlae/error.hpp"
#include "tlae/rng.hpp"

namespace tlae {

namespace {

// Per-tensor probe counts: an even share, topped up from larger tensors when
// small ones cannot absorb theirs.
std::vector<std::size_t> allocate(const std::vector<Matrix>& tensors, std::size_t target) {
  std::vector<std::size_t> take(tensors.size(), 0);
  std::size_t total = 0;
  std::size_t capacity = 0;
  for (const Matrix& t : tensors) capacity += t.size();
  target = std::min(target, capacity);
  std::size_t quota = 0;
  while (total < target) {
    ++quota;
    total = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      take[i] = std::min(tensors[i].size(), quota);
      total += take[i];
    }
  }
  return take;
}

}  // namespace

FiniteDiffReport finite_diff_check(const ModelParams& params, const LossFn& loss,
                                   const FiniteDiffOptions& options) {
  if (!(options.h > 0.0)) fail(ErrorKind::contract, "finite_diff_check: h must be positive");
  GradientSet analytic;
  loss(params, &analytic);
  if (analytic.size() != params.tensors().size()) {
    fail(ErrorKind::contract, "finite_diff_check: loss returned the wrong number of gradients");
  }

  FiniteDiffReport report;
  ModelParams probe = params;
  RngStream rng(options.seed, 0);
  const auto take = allocate(params.tensors(), options.coordinates);
  for (std::size_t t = 0; t < take.size(); ++t) {
    // Partial Fisher-Yates picks take[t] distinct indices.
    std::vector<std::size_t> idx(params[t].size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < take[t]; ++k) {
      const std::size_t j = k + rng.next_u64() % (idx.size() - k);
      std::swap(idx[k], idx[j]);
    }
    for (std::size_t k = 0; k < take[t]; ++k) {
      const std::size_t i = idx[k];
      if (options.skip && options.skip(params, t, i)) {
        ++report.skipped;
        continue;
      }
      double& w = probe[t].data()[i];
      const double orig = w;
      w = orig + options.h;
      const double up = loss(probe, nullptr);
      w = orig - options.h;
      const double down = loss(probe, nullptr);
      w = orig;
      const double g = analytic[t].data()[i];
      const double numeric = (up - down) / (2.0 * options.h);
      const double err = std::fabs(g - numeric) / std::max(1.0, std::fabs(g));
      ++report.checked;
      if (err > report.max_relative_error || !std::isfinite(err)) {
        report.max_relative_error = std::isfinite(err) ? err : INFINITY;
        report.worst_tensor = t;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace tlae
