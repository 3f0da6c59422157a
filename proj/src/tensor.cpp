#include "mrfl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mrfl/errors.hpp"

namespace mrfl {

namespace {

std::size_t product(std::span<const int> dims) {
  std::size_t p = 1;
  for (int d : dims) p *= static_cast<std::size_t>(d);
  return p;
}

}  // namespace

CliqueTensor::CliqueTensor(std::vector<int> vertices, std::vector<int> shape,
                           std::vector<double> values)
    : vertices_(std::move(vertices)), shape_(std::move(shape)), values_(std::move(values)) {
  if (vertices_.size() != shape_.size()) {
    throw std::invalid_argument("tensor: vertices and shape differ in length");
  }
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (shape_[i] < 1) throw std::invalid_argument("tensor: axis size must be positive");
    if (i > 0 && vertices_[i] <= vertices_[i - 1]) {
      throw std::invalid_argument("tensor: vertices must be strictly increasing");
    }
  }
  if (values_.size() != product(shape_)) {
    std::ostringstream msg;
    msg << "tensor: expected " << product(shape_) << " values, got " << values_.size();
    throw std::invalid_argument(msg.str());
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("tensor: non-finite entry");
  }
}

CliqueTensor CliqueTensor::zeros(std::vector<int> vertices, std::vector<int> shape) {
  const std::size_t n = product(shape);
  return CliqueTensor(std::move(vertices), std::move(shape), std::vector<double>(n, 0.0));
}

std::size_t CliqueTensor::stride(std::size_t mode) const {
  std::size_t s = 1;
  for (std::size_t i = mode + 1; i < shape_.size(); ++i) s *= static_cast<std::size_t>(shape_[i]);
  return s;
}

std::size_t CliqueTensor::flat_index(std::span<const int> index) const {
  if (index.size() != shape_.size()) throw std::invalid_argument("tensor: index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (index[i] < 0 || index[i] >= shape_[i]) throw std::out_of_range("tensor: state out of range");
    flat = flat * static_cast<std::size_t>(shape_[i]) + static_cast<std::size_t>(index[i]);
  }
  return flat;
}

void CliqueTensor::unflatten(std::size_t flat, std::span<int> index) const {
  for (std::size_t i = shape_.size(); i-- > 0;) {
    index[i] = static_cast<int>(flat % static_cast<std::size_t>(shape_[i]));
    flat /= static_cast<std::size_t>(shape_[i]);
  }
}

double CliqueTensor::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool CliqueTensor::contains(int vertex) const { return axis_of(vertex) >= 0; }

int CliqueTensor::axis_of(int vertex) const {
  auto it = std::lower_bound(vertices_.begin(), vertices_.end(), vertex);
  if (it == vertices_.end() || *it != vertex) return -1;
  return static_cast<int>(it - vertices_.begin());
}

CliqueTensor& CliqueTensor::operator+=(const CliqueTensor& other) {
  if (other.vertices_ != vertices_ || other.shape_ != shape_) {
    throw std::invalid_argument("tensor: cannot add tensors on different vertex sets");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

CliqueTensor mean_along(const CliqueTensor& t, std::size_t mode) {
  std::vector<int> verts = t.vertices();
  std::vector<int> shape = t.shape();
  const auto k = static_cast<std::size_t>(shape[mode]);
  const std::size_t inner = t.stride(mode);
  verts.erase(verts.begin() + static_cast<std::ptrdiff_t>(mode));
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(mode));
  CliqueTensor out = CliqueTensor::zeros(std::move(verts), std::move(shape));
  const std::size_t outer = t.size() / (k * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t i = 0; i < inner; ++i) {
        out[o * inner + i] += t[(o * k + a) * inner + i];
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= static_cast<double>(k);
  return out;
}

void subtract_along(CliqueTensor& t, std::size_t mode, const CliqueTensor& means) {
  const auto k = static_cast<std::size_t>(t.shape()[mode]);
  const std::size_t inner = t.stride(mode);
  const std::size_t outer = t.size() / (k * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t i = 0; i < inner; ++i) {
        t[(o * k + a) * inner + i] -= means[o * inner + i];
      }
    }
  }
}

double max_fiber_sum(const CliqueTensor& t) {
  double worst = 0.0;
  for (std::size_t mode = 0; mode < t.order(); ++mode) {
    const CliqueTensor m = mean_along(t, mode);
    worst = std::max(worst, m.max_abs() * t.shape()[mode]);
  }
  return worst;
}

bool is_centered(const CliqueTensor& t, double tol) { return max_fiber_sum(t) <= tol; }

CliqueTensor centered_part(CliqueTensor t) {
  for (std::size_t mode = 0; mode < t.order(); ++mode) {
    const CliqueTensor m = mean_along(t, mode);
    subtract_along(t, mode, m);
  }
  return t;
}

CliqueTensor effective_tensor(std::span<const CliqueTensor> tensors, std::span<const int> dims) {
  const int s = static_cast<int>(dims.size());
  std::vector<int> all(dims.size());
  for (int i = 0; i < s; ++i) all[static_cast<std::size_t>(i)] = i;
  CliqueTensor out = CliqueTensor::zeros(all, std::vector<int>(dims.begin(), dims.end()));

  for (const CliqueTensor& part : tensors) {
    for (std::size_t a = 0; a < part.order(); ++a) {
      const int v = part.vertices()[a];
      if (v < 0 || v >= s) throw std::invalid_argument("effective_tensor: index outside [0, s)");
      if (part.shape()[a] != dims[static_cast<std::size_t>(v)]) {
        throw std::invalid_argument("effective_tensor: shape mismatch");
      }
    }
  }

  std::vector<int> full(dims.size());
  std::vector<int> sub;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out.unflatten(flat, full);
    double total = 0.0;
    for (const CliqueTensor& part : tensors) {
      sub.resize(part.order());
      for (std::size_t a = 0; a < part.order(); ++a) {
        sub[a] = full[static_cast<std::size_t>(part.vertices()[a])];
      }
      total += part.at(sub);
    }
    out[flat] = total;
  }
  return out;
}

Witness noncancellation_witness(std::span<const CliqueTensor> tensors, std::span<const int> dims,
                                double kappa) {
  const std::size_t s = dims.size();
  if (s == 0) throw std::invalid_argument("noncancellation_witness: empty index set");
  const CliqueTensor* top = nullptr;
  for (const CliqueTensor& t : tensors) {
    if (t.order() == s) top = &t;
  }
  if (top == nullptr || top->max_abs() < kappa) {
    throw std::invalid_argument("noncancellation_witness: top-order tensor is not kappa-nonvanishing");
  }

  const CliqueTensor eff = effective_tensor(tensors, dims);
  std::size_t best = 0;
  for (std::size_t i = 1; i < eff.size(); ++i) {
    if (std::abs(eff[i]) > std::abs(eff[best])) best = i;
  }
  const double bound = kappa / std::pow(static_cast<double>(s), static_cast<double>(s));
  if (std::abs(eff[best]) < bound) {
    std::ostringstream msg;
    msg << "non-cancellation violated: max |T| = " << std::abs(eff[best]) << " < " << bound;
    throw InvariantViolation(msg.str());
  }
  Witness w;
  w.index.resize(s);
  eff.unflatten(best, w.index);
  w.value = eff[best];
  return w;
}

}  // namespace mrfl
