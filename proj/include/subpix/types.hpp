#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace subpix {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

using Point2d = Point2<double>;
using Point2f = Point2<float>;

/// Integer cell index into a heatmap. `col` advances along x, `row` along y.
struct GridPoint {
  Eigen::Index col = 0;
  Eigen::Index row = 0;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct GridShape {
  Eigen::Index width = 0;
  Eigen::Index height = 0;

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// A required activation cell falls outside the grid. Encoding never clamps.
class EncodeOutOfBounds : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// The heatmap violates its invariants (NaN cells, empty grid).
class InvalidHeatmap : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Activation set whose weights sum to zero under renormalization.
class DegenerateSet : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidNormalization : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyEvaluation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

template <typename Scalar>
void require_finite(Scalar value, const char* what) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

template <typename Scalar>
void require_stride(Scalar stride) {
  require_finite(stride, "stride");
  if (stride < Scalar(1)) {
    throw std::invalid_argument("stride must be >= 1");
  }
}

template <typename Scalar>
void require_threshold(Scalar threshold) {
  require_finite(threshold, "threshold");
  if (threshold < Scalar(0) || threshold > Scalar(1)) {
    throw std::invalid_argument("threshold must lie in [0, 1]");
  }
}

}  // namespace detail

}  // namespace subpix
