#pragma once

namespace eadl {

// Storage and arithmetic type for every tensor. Production builds use 32-bit
// floats; the gradient-verification build defines EADL_DOUBLE_PRECISION so
// finite differences are not swamped by rounding.
#ifdef EADL_DOUBLE_PRECISION
using real = double;
#else
using real = float;
#endif

}  // namespace eadl
