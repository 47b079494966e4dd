#pragma once

// Helpers for implementing differentiable ops outside ops.cpp.

#include <functional>
#include <initializer_list>
#include <vector>

#include "eadl/numcore/tensor.hpp"

namespace eadl::detail {

inline bool should_record(std::initializer_list<Tensor> inputs) {
  if (active_tape() == nullptr) return false;
  for (const auto& t : inputs)
    if (t.defined() && t.requires_grad()) return true;
  return false;
}

inline Tensor new_output(Shape shape, bool track) { return Tensor::zeros(std::move(shape), track); }

inline void record(std::vector<Tensor> inputs, const Tensor& output, std::function<void()> rule) {
  active_tape()->record(std::move(inputs), output, std::move(rule));
}

// Grad of t as a writable span if t participates in differentiation, else empty.
inline std::span<real> grad_sink(const Tensor& t) {
  if (!t.requires_grad()) return {};
  Tensor handle = t;
  return handle.ensure_grad();
}

// Raw row-major kernels; C is accumulated into.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const real* a, const real* b, real* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const real* a, const real* b, real* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const real* a, const real* b, real* c);

}  // namespace eadl::detail
