#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace vica::nx {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixT =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVectorT = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixT<double>;
using RowVector = RowVectorT<double>;
using Vector = Eigen::VectorXd;

using Shape = std::vector<Index>;

Index shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles with an explicit shape. Rank-1 and rank-2
// tensors view as matrices (rank-1 as a single row); higher ranks are used for
// (N, H, W, C) frame stacks and feature grids.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, Vector data);
  Tensor(std::initializer_list<Index> shape) : Tensor(Shape(shape)) {}

  static Tensor from_matrix(const Matrix& m);
  static Tensor filled(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return data_.size(); }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  // Rank-1 -> 1 x n, rank-2 -> rows x cols, rank >= 3 -> (prod leading) x last.
  Index matrix_rows() const;
  Index matrix_cols() const;
  Eigen::Map<Matrix> matrix();
  Eigen::Map<const Matrix> matrix() const;
  Matrix to_matrix() const { return matrix(); }

  // Contiguous slab along axis 0, viewed as (prod of middle dims) x last dim.
  Eigen::Map<const Matrix> slab(Index i) const;
  Eigen::Map<Matrix> slab(Index i);
  Index slab_rows() const;

  double& at(std::initializer_list<Index> idx);
  double at(std::initializer_list<Index> idx) const;

  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_.size() == b.data_.size() &&
           (a.data_.size() == 0 || a.data_ == b.data_);
  }

 private:
  Index offset(std::initializer_list<Index> idx) const;

  Shape shape_;
  Vector data_;
};

// Stacks equal-shaped tensors along a new leading axis.
Tensor stack(const std::vector<Tensor>& items);

// FNV-1a over shape and raw value bytes; used for frozen-leaf invariance checks.
std::uint64_t content_hash(const Tensor& t);

} // namespace vica::nx
