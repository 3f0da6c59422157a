#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mrfl {

// Dense real tensor attached to a sorted list of vertices. Values are stored
// row-major: the last vertex is the fastest-varying index. A tensor with no
// vertices is a scalar (one value); the model never stores those, but the
// recentering code produces them as the residue that goes into the
// normalization constant.
class CliqueTensor {
 public:
  CliqueTensor() = default;
  CliqueTensor(std::vector<int> vertices, std::vector<int> shape, std::vector<double> values);

  static CliqueTensor zeros(std::vector<int> vertices, std::vector<int> shape);

  const std::vector<int>& vertices() const { return vertices_; }
  const std::vector<int>& shape() const { return shape_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t order() const { return vertices_.size(); }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t flat) const { return values_[flat]; }
  double& operator[](std::size_t flat) { return values_[flat]; }

  std::size_t flat_index(std::span<const int> index) const;
  void unflatten(std::size_t flat, std::span<int> index) const;
  double at(std::span<const int> index) const { return values_[flat_index(index)]; }
  double& at(std::span<const int> index) { return values_[flat_index(index)]; }

  // Stride of axis `mode` in the flat layout.
  std::size_t stride(std::size_t mode) const;

  double max_abs() const;
  bool is_zero(double tol = 0.0) const { return max_abs() <= tol; }
  bool contains(int vertex) const;
  // Axis position of `vertex`, or -1.
  int axis_of(int vertex) const;

  CliqueTensor& operator+=(const CliqueTensor& other);

  friend bool operator==(const CliqueTensor&, const CliqueTensor&) = default;

 private:
  std::vector<int> vertices_;
  std::vector<int> shape_;
  std::vector<double> values_;
};

// Mean along one axis: the result lives on the remaining vertices.
CliqueTensor mean_along(const CliqueTensor& t, std::size_t mode);

// t(a) -= means(a with axis `mode` dropped).
void subtract_along(CliqueTensor& t, std::size_t mode, const CliqueTensor& means);

// True iff every fiber sum of `t` has absolute value <= tol.
bool is_centered(const CliqueTensor& t, double tol);

// Largest absolute fiber sum over every axis.
double max_fiber_sum(const CliqueTensor& t);

// Centers `t` axis by axis, discarding the pushed-out lower-order parts.
// Only meaningful when the caller does not care about preserving a law, e.g.
// when drawing random centered potentials.
CliqueTensor centered_part(CliqueTensor t);

// Sum of tensors over subsets of the index set {0, ..., s-1}, expanded to the
// full shape `dims`. Throws std::invalid_argument if a tensor names an index
// outside [0, s) or disagrees with `dims` on an axis size.
CliqueTensor effective_tensor(std::span<const CliqueTensor> tensors, std::span<const int> dims);

struct Witness {
  std::vector<int> index;
  double value = 0.0;
};

// Finds an entry of the effective tensor of absolute value >= kappa / s^s.
// Preconditions: all tensors centered; the full-order tensor on {0..s-1} is
// present and has an entry of magnitude >= kappa. Throws InvariantViolation
// if no such entry exists, since that would contradict the non-cancellation
// bound.
Witness noncancellation_witness(std::span<const CliqueTensor> tensors, std::span<const int> dims,
                                double kappa);

}  // namespace mrfl
