#pragma once

#include <subpix/heatmap.hpp>
#include <subpix/quantize.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace subpix {

enum class GaussianCenter { Quantized, Exact };

namespace detail {

inline void require_cell_in_bounds(GridPoint p, GridShape shape,
                                   const char* op) {
  if (p.col < 0 || p.col >= shape.width || p.row < 0 || p.row >= shape.height) {
    throw EncodeOutOfBounds(std::string(op) + ": activation cell (" +
                            std::to_string(p.col) + ", " +
                            std::to_string(p.row) + ") outside " +
                            std::to_string(shape.width) + "x" +
                            std::to_string(shape.height) + " grid");
  }
}

// The four-cell neighborhood (base..base+1 per axis) must fit in the grid.
template <typename Scalar>
GridPoint require_neighborhood(const Point2<Scalar>& gt, GridShape shape,
                               Scalar stride, const char* op) {
  const auto dx = decompose(gt.x(), stride);
  const auto dy = decompose(gt.y(), stride);
  const GridPoint base{static_cast<Eigen::Index>(dx.base),
                       static_cast<Eigen::Index>(dy.base)};
  require_cell_in_bounds(base, shape, op);
  require_cell_in_bounds({base.col + 1, base.row + 1}, shape, op);
  return base;
}

}  // namespace detail

/// One-hot ground-truth heatmap with the hot cell chosen by the threshold
/// quantizer on each axis.
template <typename Scalar>
Heatmap<Scalar> encode_binary(const Point2<Scalar>& gt, GridShape shape,
                              Scalar stride, Scalar threshold) {
  const GridPoint hot{
      static_cast<Eigen::Index>(quantize_threshold(gt.x(), stride, threshold)),
      static_cast<Eigen::Index>(quantize_threshold(gt.y(), stride, threshold))};
  detail::require_cell_in_bounds(hot, shape, "encode_binary");
  Heatmap<Scalar> h(shape, stride, true);
  h.at(hot) = Scalar(1);
  return h;
}

/// Unnormalized Gaussian bump, peak value exp(0)=1 at the center, truncated
/// to a box of `cfg.effective_radius()` cells. With sigma == 0 this is the
/// binary heatmap. `Exact` centers the kernel at gt/stride, so the maximum
/// cell value can fall below 1.
template <typename Scalar>
Heatmap<Scalar> encode_gaussian(const Point2<Scalar>& gt, GridShape shape,
                                Scalar stride, const GaussianConfig<Scalar>& cfg,
                                Scalar threshold,
                                GaussianCenter center = GaussianCenter::Quantized) {
  detail::require_finite(cfg.sigma, "sigma");
  if (cfg.sigma < Scalar(0)) {
    throw std::invalid_argument("sigma must be >= 0");
  }
  if (cfg.sigma == Scalar(0)) {
    return encode_binary(gt, shape, stride, threshold);
  }

  Scalar cx;
  Scalar cy;
  if (center == GaussianCenter::Quantized) {
    const GridPoint c{static_cast<Eigen::Index>(
                          quantize_threshold(gt.x(), stride, threshold)),
                      static_cast<Eigen::Index>(
                          quantize_threshold(gt.y(), stride, threshold))};
    detail::require_cell_in_bounds(c, shape, "encode_gaussian");
    cx = static_cast<Scalar>(c.col);
    cy = static_cast<Scalar>(c.row);
  } else {
    detail::require_finite(gt.x(), "coordinate");
    detail::require_finite(gt.y(), "coordinate");
    cx = gt.x() / stride;
    cy = gt.y() / stride;
    if (cx < Scalar(0) || cx > Scalar(shape.width - 1) || cy < Scalar(0) ||
        cy > Scalar(shape.height - 1)) {
      throw EncodeOutOfBounds("encode_gaussian: exact center outside grid");
    }
  }

  const auto r = static_cast<Scalar>(cfg.effective_radius());
  Heatmap<Scalar> h(shape, stride, false);
  const auto col_lo = std::max<Eigen::Index>(
      0, static_cast<Eigen::Index>(std::ceil(cx - r)));
  const auto col_hi = std::min<Eigen::Index>(
      shape.width - 1, static_cast<Eigen::Index>(std::floor(cx + r)));
  const auto row_lo = std::max<Eigen::Index>(
      0, static_cast<Eigen::Index>(std::ceil(cy - r)));
  const auto row_hi = std::min<Eigen::Index>(
      shape.height - 1, static_cast<Eigen::Index>(std::floor(cy + r)));
  const Scalar inv_two_sigma2 = Scalar(1) / (Scalar(2) * cfg.sigma * cfg.sigma);
  for (Eigen::Index row = row_lo; row <= row_hi; ++row) {
    const Scalar dy = static_cast<Scalar>(row) - cy;
    for (Eigen::Index col = col_lo; col <= col_hi; ++col) {
      const Scalar dx = static_cast<Scalar>(col) - cx;
      h.values(row, col) = std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
    }
  }
  return h;
}

/// The expectation of the randomized-rounding encoder: the four cells around
/// the ground-truth activation point carry the bilinear probabilities of the
/// fractional part. Sums to 1.
template <typename Scalar>
Heatmap<Scalar> encode_expected(const Point2<Scalar>& gt, GridShape shape,
                                Scalar stride) {
  const auto dx = decompose(gt.x(), stride);
  const auto dy = decompose(gt.y(), stride);
  const GridPoint base =
      detail::require_neighborhood(gt, shape, stride, "encode_expected");
  const Scalar ex = dx.frac;
  const Scalar ey = dy.frac;
  Heatmap<Scalar> h(shape, stride, true);
  h.values(base.row, base.col) = (Scalar(1) - ex) * (Scalar(1) - ey);
  h.values(base.row, base.col + 1) = ex * (Scalar(1) - ey);
  h.values(base.row + 1, base.col) = (Scalar(1) - ex) * ey;
  h.values(base.row + 1, base.col + 1) = ex * ey;
  return h;
}

/// One randomized-rounding sample: a one-hot grid whose hot cell follows the
/// law materialized by encode_expected. Axis draws are independent, x first.
template <typename Scalar>
Heatmap<Scalar> encode_sampled(const Point2<Scalar>& gt, GridShape shape,
                               Scalar stride, RngStream& rng) {
  detail::require_neighborhood(gt, shape, stride, "encode_sampled");
  const GridPoint hot{
      static_cast<Eigen::Index>(quantize_random_round(gt.x(), stride, rng)),
      static_cast<Eigen::Index>(quantize_random_round(gt.y(), stride, rng))};
  Heatmap<Scalar> h(shape, stride, true);
  h.at(hot) = Scalar(1);
  return h;
}

}  // namespace subpix
