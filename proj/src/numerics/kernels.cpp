#include "vica/numerics/kernels.hpp"

#include "vica/error.hpp"

#include <algorithm>
#include <string>

namespace vica::nx {

std::vector<AxisTap> axis_taps(Index in_size, Index out_size) {
  if (in_size < 1 || out_size < 1) {
    throw Error(ErrorCode::kShape, "resize extents must be >= 1");
  }
  std::vector<AxisTap> taps(static_cast<std::size_t>(out_size));
  const double scale = static_cast<double>(in_size) / static_cast<double>(out_size);
  for (Index d = 0; d < out_size; ++d) {
    double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in_size - 1));
    const auto i0 = static_cast<Index>(std::floor(s));
    const Index i1 = std::min(i0 + 1, in_size - 1);
    const double frac = s - static_cast<double>(i0);
    taps[static_cast<std::size_t>(d)] = {i0, i1, 1.0 - frac, frac};
  }
  return taps;
}

Matrix resize_grid(const Eigen::Ref<const Matrix>& grid, Index h, Index w,
                   Index oh, Index ow) {
  if (grid.rows() != h * w) {
    throw Error(ErrorCode::kShape, "resize_grid: row count != h*w");
  }
  const auto ty = axis_taps(h, oh);
  const auto tx = axis_taps(w, ow);
  Matrix out(oh * ow, grid.cols());
  for (Index y = 0; y < oh; ++y) {
    const AxisTap& a = ty[static_cast<std::size_t>(y)];
    for (Index x = 0; x < ow; ++x) {
      const AxisTap& b = tx[static_cast<std::size_t>(x)];
      out.row(y * ow + x) = a.w0 * (b.w0 * grid.row(a.i0 * w + b.i0) +
                                    b.w1 * grid.row(a.i0 * w + b.i1)) +
                            a.w1 * (b.w0 * grid.row(a.i1 * w + b.i0) +
                                    b.w1 * grid.row(a.i1 * w + b.i1));
    }
  }
  return out;
}

Matrix resize_grid_adjoint(const Eigen::Ref<const Matrix>& grad_out, Index h,
                           Index w, Index oh, Index ow) {
  const auto ty = axis_taps(h, oh);
  const auto tx = axis_taps(w, ow);
  Matrix g = Matrix::Zero(h * w, grad_out.cols());
  for (Index y = 0; y < oh; ++y) {
    const AxisTap& a = ty[static_cast<std::size_t>(y)];
    for (Index x = 0; x < ow; ++x) {
      const AxisTap& b = tx[static_cast<std::size_t>(x)];
      const auto go = grad_out.row(y * ow + x);
      g.row(a.i0 * w + b.i0) += a.w0 * b.w0 * go;
      g.row(a.i0 * w + b.i1) += a.w0 * b.w1 * go;
      g.row(a.i1 * w + b.i0) += a.w1 * b.w0 * go;
      g.row(a.i1 * w + b.i1) += a.w1 * b.w1 * go;
    }
  }
  return g;
}

Tensor bilinear_resize(const Tensor& src, Index out_h, Index out_w) {
  if (src.rank() != 3) {
    throw Error(ErrorCode::kShape,
                "bilinear_resize expects (H, W, C), got " + shape_string(src.shape()));
  }
  const Index h = src.dim(0), w = src.dim(1), c = src.dim(2);
  Tensor out({out_h, out_w, c});
  out.matrix() = resize_grid(src.matrix(), h, w, out_h, out_w);
  return out;
}

Matrix matmul(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kShape, "matmul: inner dimensions " +
                                       std::to_string(a.cols()) + " vs " +
                                       std::to_string(b.rows()));
  }
  return a * b;
}

Matrix embedding_lookup(const Eigen::Ref<const Matrix>& table,
                        std::span<const int> ids) {
  Matrix out(static_cast<Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw Error(ErrorCode::kVocab, "id " + std::to_string(ids[i]) +
                                         " outside table of " +
                                         std::to_string(table.rows()) + " rows");
    }
    out.row(static_cast<Index>(i)) = table.row(ids[i]);
  }
  return out;
}

Matrix concat_rows(std::span<const Matrix> parts) {
  Index rows = 0;
  Index cols = -1;
  for (const Matrix& p : parts) {
    if (p.rows() == 0) continue;
    if (cols >= 0 && p.cols() != cols) {
      throw Error(ErrorCode::kShape, "concat_rows: column mismatch");
    }
    cols = p.cols();
    rows += p.rows();
  }
  if (cols < 0) cols = parts.empty() ? 0 : parts.front().cols();
  Matrix out(rows, cols);
  Index at = 0;
  for (const Matrix& p : parts) {
    if (p.rows() == 0) continue;
    out.middleRows(at, p.rows()) = p;
    at += p.rows();
  }
  return out;
}

Matrix patchify(const Eigen::Ref<const Matrix>& grid, Index h, Index w, Index k) {
  if (k < 1 || grid.rows() != h * w) {
    throw Error(ErrorCode::kShape, "patchify: bad grid or kernel");
  }
  const Index c = grid.cols();
  const Index gh = h / k, gw = w / k;
  Matrix out(gh * gw, k * k * c);
  for (Index py = 0; py < gh; ++py) {
    for (Index px = 0; px < gw; ++px) {
      const Index r = py * gw + px;
      for (Index dy = 0; dy < k; ++dy) {
        for (Index dx = 0; dx < k; ++dx) {
          out.block(r, (dy * k + dx) * c, 1, c) =
              grid.row((py * k + dy) * w + (px * k + dx));
        }
      }
    }
  }
  return out;
}

Matrix patchify_adjoint(const Eigen::Ref<const Matrix>& grad_patches, Index h,
                        Index w, Index c, Index k) {
  const Index gh = h / k, gw = w / k;
  Matrix g = Matrix::Zero(h * w, c);
  for (Index py = 0; py < gh; ++py) {
    for (Index px = 0; px < gw; ++px) {
      const Index r = py * gw + px;
      for (Index dy = 0; dy < k; ++dy) {
        for (Index dx = 0; dx < k; ++dx) {
          g.row((py * k + dy) * w + (px * k + dx)) +=
              grad_patches.block(r, (dy * k + dx) * c, 1, c);
        }
      }
    }
  }
  return g;
}

} // namespace vica::nx
