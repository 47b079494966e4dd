#pragma once

// Shared helpers for the test binaries.

#include <cmath>
#include <vector>

#include "eadl/numcore/rng.hpp"
#include "eadl/numcore/tensor.hpp"

namespace eadl::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, real lo = -2.0f, real hi = 2.0f, bool requires_grad = false) {
  std::vector<real> v(shape_numel(shape));
  for (auto& x : v) x = lo + (hi - lo) * static_cast<real>(rng.uniform());
  return Tensor::from(std::move(shape), v, requires_grad);
}

inline double max_abs_diff(std::span<const real> a, std::span<const real> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]));
  return worst;
}

}  // namespace eadl::testing
