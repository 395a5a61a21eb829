#include "hrl4pfg/num/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace hrl4pfg::num {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite value");
  }
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw std::invalid_argument("Tensor: shape " + shape_string(shape_) + " does not match " +
                                std::to_string(data_.size()) + " values");
  }
  require_finite(data_, "Tensor");
}

Tensor Tensor::unchecked(Shape shape, std::vector<double> data) {
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(Shape{n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor(Shape{rows, cols}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw std::logic_error("Tensor::rows: rank " + std::to_string(shape_.size()));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw std::logic_error("Tensor::cols: rank " + std::to_string(shape_.size()));
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) throw std::logic_error("Tensor::item: tensor holds " + std::to_string(data_.size()) + " values");
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace hrl4pfg::num
