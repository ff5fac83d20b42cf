#include "tensor.hpp"

#include <cmath>

namespace gi {

bool Tensor::all_finite() const {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace gi
