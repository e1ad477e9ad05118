#pragma once

// Dense kernels shared by the tensor API and the autograd tape. Written as
// free functions over Eigen expressions so they work for any scalar type.

#include "vica/numerics/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <vector>

namespace vica::nx {

template <typename Scalar>
inline Scalar gelu_scalar(Scalar x) {
  using std::erf;
  using std::sqrt;
  return Scalar(0.5) * x * (Scalar(1) + erf(x / sqrt(Scalar(2))));
}

template <typename Scalar>
inline Scalar gelu_grad_scalar(Scalar x) {
  using std::erf;
  using std::exp;
  using std::sqrt;
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + erf(x / sqrt(Scalar(2))));
  const Scalar pdf = exp(Scalar(-0.5) * x * x) /
                     sqrt(Scalar(2) * Scalar(EIGEN_PI));
  return cdf + x * pdf;
}

// Exact (erf-based) GELU.
template <typename Derived>
auto gelu(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return gelu_scalar(v); });
}

template <typename Derived>
auto gelu_grad(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return gelu_grad_scalar(v); });
}

// Row-wise softmax with max subtraction.
template <typename Derived>
MatrixT<typename Derived::Scalar> softmax_rows(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  MatrixT<Scalar> out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

// Row-wise normalization to zero mean / unit variance (biased variance),
// before any affine transform. `inv_std` receives 1/sqrt(var + eps) per row.
template <typename Derived>
MatrixT<typename Derived::Scalar> layer_norm_rows(
    const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar eps,
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>* inv_std =
        nullptr) {
  using Scalar = typename Derived::Scalar;
  MatrixT<Scalar> out(x.rows(), x.cols());
  if (inv_std) inv_std->resize(x.rows());
  const Scalar n = Scalar(x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar mean = x.row(r).sum() / n;
    auto centered = (x.row(r).array() - mean);
    const Scalar var = centered.square().sum() / n;
    const Scalar is = Scalar(1) / std::sqrt(var + eps);
    out.row(r) = (centered * is).matrix();
    if (inv_std) (*inv_std)(r) = is;
  }
  return out;
}

// One output coordinate of a 1-D bilinear stencil: value = w0*in[i0] + w1*in[i1].
struct AxisTap {
  Index i0 = 0;
  Index i1 = 0;
  double w0 = 1.0;
  double w1 = 0.0;
};

// Half-pixel-centre sampling: s = (d + 0.5) * in/out - 0.5, clamped to
// [0, in - 1]. Same-size resize yields s = d exactly (pure identity taps).
std::vector<AxisTap> axis_taps(Index in_size, Index out_size);

// Resizes a grid stored as (h*w) x C rows (row-major pixels) to (oh*ow) x C.
Matrix resize_grid(const Eigen::Ref<const Matrix>& grid, Index h, Index w,
                   Index oh, Index ow);

// Adjoint of resize_grid: scatters (oh*ow) x C gradients back to (h*w) x C.
Matrix resize_grid_adjoint(const Eigen::Ref<const Matrix>& grad_out, Index h,
                           Index w, Index oh, Index ow);

// (H, W, C) -> (out_h, out_w, C) bilinear resize.
Tensor bilinear_resize(const Tensor& src, Index out_h, Index out_w);

Matrix matmul(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

// Rows of `table` selected by `ids`.
Matrix embedding_lookup(const Eigen::Ref<const Matrix>& table,
                        std::span<const int> ids);

Matrix concat_rows(std::span<const Matrix> parts);

// Non-overlapping k x k patches of an (h*w) x C grid, flattened per patch in
// (dy, dx, c) order: output is (floor(h/k)*floor(w/k)) x (k*k*C).
Matrix patchify(const Eigen::Ref<const Matrix>& grid, Index h, Index w, Index k);
Matrix patchify_adjoint(const Eigen::Ref<const Matrix>& grad_patches, Index h,
                        Index w, Index c, Index k);

} // namespace vica::nx
