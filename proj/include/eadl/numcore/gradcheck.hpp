#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "eadl/numcore/tensor.hpp"

namespace eadl {

struct GradCheckOptions {
  real eps = 1e-3f;
  // Coordinates sampled across all parameters; every coordinate is checked
  // when the total is smaller.
  std::size_t samples = 50;
  std::uint64_t seed = 0;
  // Denominator floor for the relative error, so coordinates whose true
  // gradient is ~0 are judged on absolute error instead.
  double denom_floor = 1e-2;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares taped gradients of the scalar returned by f against central finite
// differences. f must be deterministic; it is called once under a fresh tape
// and repeatedly with recording disabled. Parameter grads are overwritten.
GradCheckReport finite_diff_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                  const GradCheckOptions& options = {});

}  // namespace eadl
