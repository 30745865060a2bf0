#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dsgan {

struct Shape4 {
  std::size_t n = 0, c = 0, h = 0, w = 0;

  std::size_t numel() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  std::size_t sample() const { return c * h * w; }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

// Dense NCHW tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape4 shape, double fill = 0.0) : shape_(shape), data_(shape.numel(), fill) {}
  Tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : Tensor(Shape4{n, c, h, w}, fill) {}

  const Shape4& shape() const { return shape_; }
  std::size_t n() const { return shape_.n; }
  std::size_t c() const { return shape_.c; }
  std::size_t h() const { return shape_.h; }
  std::size_t w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }

  double* sample(std::size_t n) { return data() + n * shape_.sample(); }
  const double* sample(std::size_t n) const { return data() + n * shape_.sample(); }
  double* plane(std::size_t n, std::size_t c) { return sample(n) + c * shape_.plane(); }
  const double* plane(std::size_t n, std::size_t c) const { return sample(n) + c * shape_.plane(); }

  void fill(double v);
  // Keeps the element count; used to view a bias vector as (1, C, 1, 1) etc.
  void reshape(Shape4 shape);

  bool operator==(const Tensor&) const = default;

 private:
  Shape4 shape_;
  std::vector<double> data_;
};

}  // namespace dsgan
