#pragma once

#include <subpix/types.hpp>

#include <Eigen/Core>

#include <cmath>

namespace subpix {

template <typename Scalar>
using GridMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-landmark activation grid. `values(row, col)` holds the activation at
/// cell (col, row); `stride` is input-image pixels per cell. `normalized`
/// records whether the values form a probability distribution over cells.
template <typename Scalar>
struct Heatmap {
  GridMatrix<Scalar> values;
  Scalar stride = Scalar(1);
  bool normalized = false;

  Heatmap() = default;

  Heatmap(GridShape shape, Scalar stride_in, bool normalized_in = false)
      : values(GridMatrix<Scalar>::Zero(shape.height, shape.width)),
        stride(stride_in),
        normalized(normalized_in) {
    if (shape.width < 2 || shape.height < 2) {
      throw InvalidHeatmap("heatmap dimensions must be at least 2x2");
    }
    detail::require_stride(stride);
  }

  Eigen::Index width() const { return values.cols(); }
  Eigen::Index height() const { return values.rows(); }
  GridShape shape() const { return {width(), height()}; }
  Eigen::Index size() const { return values.size(); }

  bool contains(GridPoint p) const {
    return p.col >= 0 && p.col < width() && p.row >= 0 && p.row < height();
  }

  Scalar& at(GridPoint p) { return values(p.row, p.col); }
  Scalar at(GridPoint p) const { return values(p.row, p.col); }
};

using Heatmapd = Heatmap<double>;
using Heatmapf = Heatmap<float>;

/// Isotropic Gaussian kernel parameters, in heatmap cells. A negative radius
/// selects the default truncation at ceil(3*sigma).
template <typename Scalar>
struct GaussianConfig {
  Scalar sigma = Scalar(1);
  Eigen::Index radius = -1;

  Eigen::Index effective_radius() const {
    if (radius >= 0) {
      return radius;
    }
    return static_cast<Eigen::Index>(std::ceil(Scalar(3) * sigma));
  }
};

}  // namespace subpix
