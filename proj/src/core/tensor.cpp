#include "dsgan/core/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace dsgan {

std::string Shape4::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(Shape4 shape) {
  if (shape.numel() != data_.size())
    throw std::invalid_argument("Tensor::reshape: " + shape_.str() + " -> " + shape.str() +
                                " changes the element count");
  shape_ = shape;
}

}  // namespace dsgan
