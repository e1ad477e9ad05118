#include "vica/numerics/tensor.hpp"

#include "vica/error.hpp"

#include <cstring>
#include <numeric>
#include <sstream>

namespace vica::nx {

Index shape_size(const Shape& shape) {
  Index n = 1;
  for (Index e : shape) {
    if (e < 0) throw Error(ErrorCode::kShape, "negative extent in shape");
    n *= e;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_ = Vector::Zero(shape_size(shape_));
}

Tensor::Tensor(Shape shape, Vector data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw Error(ErrorCode::kShape, "tensor data length " +
                                       std::to_string(data_.size()) +
                                       " does not match shape " +
                                       shape_string(shape_));
  }
}

Tensor Tensor::from_matrix(const Matrix& m) {
  Tensor t({m.rows(), m.cols()});
  t.matrix() = m;
  return t;
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  t.data_.setConstant(value);
  return t;
}

Index Tensor::matrix_rows() const {
  if (shape_.empty()) return 1;
  if (shape_.size() == 1) return 1;
  return data_.size() / shape_.back();
}

Index Tensor::matrix_cols() const {
  if (shape_.empty()) return 1;
  return shape_.back();
}

Eigen::Map<Matrix> Tensor::matrix() {
  return {data_.data(), matrix_rows(), matrix_cols()};
}

Eigen::Map<const Matrix> Tensor::matrix() const {
  return {data_.data(), matrix_rows(), matrix_cols()};
}

Index Tensor::slab_rows() const {
  if (shape_.size() < 2) throw Error(ErrorCode::kShape, "slab needs rank >= 2");
  Index rows = 1;
  for (std::size_t i = 1; i + 1 < shape_.size(); ++i) rows *= shape_[i];
  return rows;
}

Eigen::Map<const Matrix> Tensor::slab(Index i) const {
  const Index rows = slab_rows();
  const Index cols = shape_.back();
  return {data_.data() + i * rows * cols, rows, cols};
}

Eigen::Map<Matrix> Tensor::slab(Index i) {
  const Index rows = slab_rows();
  const Index cols = shape_.back();
  return {data_.data() + i * rows * cols, rows, cols};
}

Index Tensor::offset(std::initializer_list<Index> idx) const {
  if (idx.size() != shape_.size()) {
    throw Error(ErrorCode::kShape, "index rank mismatch");
  }
  Index off = 0;
  std::size_t axis = 0;
  for (Index i : idx) {
    if (i < 0 || i >= shape_[axis]) {
      throw Error(ErrorCode::kShape, "index out of range");
    }
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double& Tensor::at(std::initializer_list<Index> idx) {
  return data_[offset(idx)];
}

double Tensor::at(std::initializer_list<Index> idx) const {
  return data_[offset(idx)];
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

Tensor stack(const std::vector<Tensor>& items) {
  if (items.empty()) throw Error(ErrorCode::kShape, "cannot stack zero tensors");
  Shape shape = items.front().shape();
  shape.insert(shape.begin(), static_cast<Index>(items.size()));
  Tensor out(shape);
  const Index chunk = items.front().size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].shape() != items.front().shape()) {
      throw Error(ErrorCode::kShape, "stack of mismatched shapes");
    }
    out.data().segment(static_cast<Index>(i) * chunk, chunk) = items[i].data();
  }
  return out;
}

std::uint64_t content_hash(const Tensor& t) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (Index e : t.shape()) {
    const auto v = static_cast<std::int64_t>(e);
    mix(&v, sizeof v);
  }
  mix(t.data().data(), static_cast<std::size_t>(t.size()) * sizeof(double));
  return h;
}

} // namespace vica::nx
