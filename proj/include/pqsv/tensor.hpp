#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqsv {

inline std::size_t shape_size(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

// Dense multi-dimensional array, row-major, double precision.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> v)
      : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape_size(shape))
      throw std::invalid_argument("Tensor: value count does not match shape");
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    const std::size_t n = shape_size(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
  }

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }

  bool same_shape(std::span<const std::size_t> other) const {
    return std::ranges::equal(shape, other);
  }

  // metadata-only reshape
  Tensor reshaped(std::vector<std::size_t> s) const {
    if (shape_size(s) != size())
      throw std::invalid_argument("Tensor::reshaped: element count mismatch");
    return Tensor(std::move(s), values);
  }
};

inline std::string shape_string(std::span<const std::size_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

inline void require_shape(const Tensor& t, std::span<const std::size_t> shape,
                          const char* what) {
  if (!t.same_shape(shape))
    throw std::invalid_argument(std::string(what) + ": expected shape " +
                                shape_string(shape) + ", got " + shape_string(t.shape));
}

}  // namespace pqsv
