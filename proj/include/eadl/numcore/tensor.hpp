#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eadl/numcore/alloc.hpp"

namespace eadl {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape) noexcept;
std::string shape_str(const Shape& shape);

struct TensorImpl {
  Shape shape;
  Buffer data;
  std::optional<Buffer> grad;
  bool requires_grad = false;
};

// Shared handle to a dense row-major buffer of `real`. Copies alias the same
// storage; use clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, real value, bool requires_grad = false);
  static Tensor from(Shape shape, std::span<const real> values, bool requires_grad = false);
  static Tensor from(Shape shape, std::initializer_list<real> values, bool requires_grad = false);
  static Tensor scalar(real value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<real> data() { return impl_->data; }
  std::span<const real> data() const { return impl_->data; }
  real item() const;
  real at(std::size_t flat) const { return impl_->data.at(flat); }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  bool has_grad() const { return impl_->grad.has_value(); }
  std::span<real> grad();
  std::span<const real> grad() const;
  // Allocates a zeroed grad buffer if none exists.
  std::span<real> ensure_grad();
  void zero_grad();
  void drop_grad() { impl_->grad.reset(); }

  Tensor clone() const;
  // New tensor sharing nothing, without grad tracking.
  Tensor detach() const { return clone(); }

  bool is(const Tensor& other) const noexcept { return impl_ == other.impl_; }
  const TensorImpl* impl() const noexcept { return impl_.get(); }

  // True iff shapes match and every real is bitwise equal.
  bool bitwise_equal(const Tensor& other) const;
  bool all_finite() const;

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

// Recorded operations. Backward rules read the output grad and accumulate into
// input grads; they run in reverse registration order.
class Tape {
 public:
  struct Entry {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward);
  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

// Makes a tape the active recorder for the current thread for its lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Suspends recording on the current thread (teacher forwards, evaluation).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape() noexcept;

// Seeds d(loss)=1 and replays the tape in reverse. Intermediate grads are
// recomputed from scratch on every call; leaf grads accumulate.
void backward(const Tensor& loss, Tape& tape);
void backward(const Tensor& loss);

}  // namespace eadl
