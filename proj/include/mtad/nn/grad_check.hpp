#pragma once

// Finite-difference gradient verification. The caller runs one
// forward/backward to populate analytic gradients, then hands over a loss
// closure that re-runs the forward pass on the exact same data and masks.

#include <cstdint>
#include <string>
#include <vector>

#include "mtad/errors.hpp"
#include "mtad/nn/tensor.hpp"

namespace mtad::nn {

struct GradCheckResult {
  double max_rel_error = 0;
  int checked = 0;
  std::string worst_param;
  double worst_analytic = 0;
  double worst_numeric = 0;
};

// Central differences on n_samples randomly chosen parameter entries.
// Relative error uses |ga| + |gn| in the denominator, floored at 1e-3 so
// near-zero pairs measure the absolute discrepancy instead. The floor sits
// well above the finite-difference cancellation noise (~eps * |loss| / step,
// around 1e-10 for losses of order ten) while still flagging any genuine
// mismatch bigger than 1e-8.
template <typename LossFn>
GradCheckResult grad_check(const std::vector<Tensor*>& params, LossFn&& loss_fn,
                           RngStream& rng, int n_samples = 200, double step = 1e-5) {
  if (params.empty()) throw ConfigError("grad_check: no parameters");
  if (n_samples < 1) throw ConfigError("grad_check: n_samples must be >= 1");

  std::vector<std::pair<int, Eigen::Index>> sites;
  for (int p = 0; p < int(params.size()); ++p)
    for (Eigen::Index i = 0; i < params[std::size_t(p)]->value.size(); ++i)
      sites.emplace_back(p, i);
  rng.shuffle(sites);
  const int n = std::min<int>(n_samples, int(sites.size()));

  GradCheckResult res;
  res.checked = n;
  for (int k = 0; k < n; ++k) {
    const auto [pi, flat] = sites[std::size_t(k)];
    Tensor* t = params[std::size_t(pi)];
    double* slot = t->value.data() + flat;
    const double original = *slot;

    *slot = original + step;
    const double loss_plus = loss_fn();
    *slot = original - step;
    const double loss_minus = loss_fn();
    *slot = original;

    const double numeric = (loss_plus - loss_minus) / (2.0 * step);
    const double analytic = *(t->grad.data() + flat);
    const double denom = std::max(std::fabs(analytic) + std::fabs(numeric), 1e-3);
    const double rel = std::fabs(analytic - numeric) / denom;
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_param = t->name + "[" + std::to_string(long(flat)) + "]";
      res.worst_analytic = analytic;
      res.worst_numeric = numeric;
    }
  }
  return res;
}

}  // namespace mtad::nn
