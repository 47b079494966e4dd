#include "eadl/numcore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "eadl/error.hpp"

namespace eadl {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::input: return "input";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::length: return "length";
    case ErrorKind::format: return "format";
    case ErrorKind::contract: return "contract";
    case ErrorKind::unsupported: return "unsupported";
  }
  return "unknown";
}

std::size_t shape_numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0f, requires_grad); }

Tensor Tensor::filled(Shape shape, real value, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(shape_numel(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::span<const real> values, bool requires_grad) {
  require(shape_numel(shape) == values.size(), ErrorKind::dimension,
          "tensor shape " + shape_str(shape) + " does not hold " + std::to_string(values.size()) + " values");
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(values.begin(), values.end());
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::initializer_list<real> values, bool requires_grad) {
  return from(std::move(shape), std::span<const real>(values.begin(), values.size()), requires_grad);
}

Tensor Tensor::scalar(real value, bool requires_grad) { return filled({1}, value, requires_grad); }

real Tensor::item() const {
  require(numel() == 1, ErrorKind::dimension, "item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

std::span<real> Tensor::grad() {
  require(has_grad(), ErrorKind::protocol, "tensor has no gradient");
  return *impl_->grad;
}

std::span<const real> Tensor::grad() const {
  require(has_grad(), ErrorKind::protocol, "tensor has no gradient");
  return *impl_->grad;
}

std::span<real> Tensor::ensure_grad() {
  if (!impl_->grad) impl_->grad.emplace(impl_->data.size(), 0.0f);
  return *impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_->grad) std::fill(impl_->grad->begin(), impl_->grad->end(), 0.0f);
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  if (shape() != other.shape()) return false;
  return std::memcmp(impl_->data.data(), other.impl_->data.data(), numel() * sizeof(real)) == 0;
}

bool Tensor::all_finite() const {
  return std::all_of(impl_->data.begin(), impl_->data.end(), [](real v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------

namespace {
thread_local Tape* t_active = nullptr;
}

Tape* active_tape() noexcept { return t_active; }

TapeScope::TapeScope(Tape& tape) : previous_(t_active) { t_active = &tape; }
TapeScope::~TapeScope() { t_active = previous_; }

NoGradScope::NoGradScope() : previous_(t_active) { t_active = nullptr; }
NoGradScope::~NoGradScope() { t_active = previous_; }

void Tape::record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward) {
  entries_.push_back({std::move(inputs), std::move(output), std::move(backward)});
}

void backward(const Tensor& loss, Tape& tape) {
  require(loss.defined() && loss.numel() == 1, ErrorKind::dimension,
          "backward() needs a scalar loss, got " + (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  require(loss.requires_grad(), ErrorKind::protocol, "loss was not recorded on a tape");

  std::unordered_set<const TensorImpl*> produced;
  for (auto& e : tape.entries()) produced.insert(e.output.impl());
  require(produced.count(loss.impl()) > 0, ErrorKind::protocol, "loss was not recorded on this tape");

  // Intermediates restart from zero so repeated calls do not compound.
  for (auto& e : tape.entries()) {
    auto out = e.output;
    out.ensure_grad();
    out.zero_grad();
    for (auto in : e.inputs)
      if (in.requires_grad()) in.ensure_grad();
  }
  Tensor seed = loss;
  seed.ensure_grad()[0] = 1.0f;

  const auto& entries = tape.entries();
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) it->backward();
}

void backward(const Tensor& loss) {
  Tape* tape = active_tape();
  require(tape != nullptr, ErrorKind::protocol, "backward() called with no active tape");
  backward(loss, *tape);
}

}  // namespace eadl
