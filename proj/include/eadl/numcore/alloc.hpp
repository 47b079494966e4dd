#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <vector>

#include "eadl/numcore/real.hpp"

namespace eadl {

struct AllocStats {
  std::int64_t current_bytes = 0;
  std::int64_t peak_bytes = 0;
};

// Process-wide accounting of tensor payload bytes (data and grad buffers).
AllocStats alloc_stats() noexcept;
// Starts a new measurement window: peak is lowered to the current level.
void reset_alloc_peak() noexcept;

namespace detail {
void note_alloc(std::size_t bytes) noexcept;
void note_free(std::size_t bytes) noexcept;
}  // namespace detail

template <class T>
struct TrackedAllocator {
  using value_type = T;

  TrackedAllocator() noexcept = default;
  template <class U>
  TrackedAllocator(const TrackedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    T* p = std::allocator<T>{}.allocate(n);
    detail::note_alloc(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    detail::note_free(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  template <class U>
  bool operator==(const TrackedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<real, TrackedAllocator<real>>;

}  // namespace eadl
