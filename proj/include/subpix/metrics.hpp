#pragma once

#include <subpix/heatmap.hpp>

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace subpix {

/// Normalization distance for NME. Inter-ocular and inter-pupil measure the
/// distance between two configured ground-truth landmark indices; which
/// indices those are is dataset configuration, not library knowledge.
struct Normalization {
  enum class Kind { InterOcular, InterPupil, BBoxSqrt, FixedDistance };

  Kind kind = Kind::FixedDistance;
  std::pair<std::size_t, std::size_t> indices{0, 0};
  double bbox_width = 0;
  double bbox_height = 0;
  double distance = 1;

  static Normalization inter_ocular(std::size_t i, std::size_t j) {
    Normalization n;
    n.kind = Kind::InterOcular;
    n.indices = {i, j};
    return n;
  }
  static Normalization inter_pupil(std::size_t i, std::size_t j) {
    Normalization n;
    n.kind = Kind::InterPupil;
    n.indices = {i, j};
    return n;
  }
  static Normalization bbox_sqrt(double w, double h) {
    Normalization n;
    n.kind = Kind::BBoxSqrt;
    n.bbox_width = w;
    n.bbox_height = h;
    return n;
  }
  static Normalization fixed_distance(double d) {
    Normalization n;
    n.kind = Kind::FixedDistance;
    n.distance = d;
    return n;
  }
};

/// Predicted and ground-truth landmarks for one instance. An empty
/// visibility vector means every landmark is visible.
template <typename Scalar>
struct LandmarkSetPair {
  std::vector<Point2<Scalar>> predictions;
  std::vector<Point2<Scalar>> ground_truth;
  std::vector<bool> visibility;
};

enum class CoordinateLossKind { MSE, MAE };
enum class HeatmapLossKind { MSE, CrossEntropySoftmax };

template <typename Scalar>
struct ErrorDecomposition {
  Scalar localization = Scalar(0);
  Scalar heatmap_error = Scalar(0);
  Scalar quantization_error = Scalar(0);
};

namespace detail {

template <typename Scalar>
void require_pair(const LandmarkSetPair<Scalar>& pair) {
  if (pair.predictions.size() != pair.ground_truth.size() ||
      pair.predictions.empty()) {
    throw ShapeMismatch("prediction/ground-truth landmark counts differ");
  }
  if (!pair.visibility.empty() &&
      pair.visibility.size() != pair.predictions.size()) {
    throw ShapeMismatch("visibility mask length differs from landmark count");
  }
}

template <typename Scalar>
bool visible(const LandmarkSetPair<Scalar>& pair, std::size_t i) {
  return pair.visibility.empty() || pair.visibility[i];
}

template <typename Scalar>
Scalar normalization_distance(const LandmarkSetPair<Scalar>& pair,
                              const Normalization& norm) {
  Scalar d;
  switch (norm.kind) {
    case Normalization::Kind::InterOcular:
    case Normalization::Kind::InterPupil: {
      const auto [i, j] = norm.indices;
      if (i >= pair.ground_truth.size() || j >= pair.ground_truth.size()) {
        throw InvalidNormalization("normalization landmark index out of range");
      }
      d = (pair.ground_truth[i] - pair.ground_truth[j]).norm();
      break;
    }
    case Normalization::Kind::BBoxSqrt:
      d = static_cast<Scalar>(
          std::sqrt(norm.bbox_width * norm.bbox_height));
      break;
    case Normalization::Kind::FixedDistance:
    default:
      d = static_cast<Scalar>(norm.distance);
      break;
  }
  if (!(d > Scalar(0)) || !std::isfinite(d)) {
    throw InvalidNormalization("normalization distance must be positive");
  }
  return d;
}

}  // namespace detail

/// Normalized mean error in percent: mean over visible landmarks of the
/// Euclidean error divided by the normalization distance.
template <typename Scalar>
Scalar nme(const LandmarkSetPair<Scalar>& pair, const Normalization& norm) {
  detail::require_pair(pair);
  const Scalar d = detail::normalization_distance(pair, norm);
  Scalar sum = Scalar(0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < pair.predictions.size(); ++i) {
    if (!detail::visible(pair, i)) {
      continue;
    }
    sum += (pair.predictions[i] - pair.ground_truth[i]).norm() / d;
    ++count;
  }
  if (count == 0) {
    throw EmptyEvaluation("no visible landmarks to evaluate");
  }
  return Scalar(100) * sum / static_cast<Scalar>(count);
}

/// Fraction of visible landmarks within alpha * l pixels of the ground
/// truth. The boundary is inclusive: an error of exactly alpha * l counts.
template <typename Scalar>
Scalar pck(const LandmarkSetPair<Scalar>& pair, Scalar l, Scalar alpha) {
  detail::require_pair(pair);
  if (!(l > Scalar(0)) || !std::isfinite(l)) {
    throw InvalidNormalization("pck normalization length must be positive");
  }
  if (alpha < Scalar(0) || alpha > Scalar(1)) {
    throw std::invalid_argument("pck threshold alpha must lie in [0, 1]");
  }
  std::size_t hits = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pair.predictions.size(); ++i) {
    if (!detail::visible(pair, i)) {
      continue;
    }
    ++count;
    if ((pair.predictions[i] - pair.ground_truth[i]).norm() <= alpha * l) {
      ++hits;
    }
  }
  if (count == 0) {
    throw EmptyEvaluation("no visible landmarks to evaluate");
  }
  return static_cast<Scalar>(hits) / static_cast<Scalar>(count);
}

/// Coordinate regression criterion over the pair: mean squared L2 norm for
/// MSE, mean L1 distance for MAE.
template <typename Scalar>
Scalar coordinate_loss(const LandmarkSetPair<Scalar>& pair,
                       CoordinateLossKind kind) {
  detail::require_pair(pair);
  Scalar sum = Scalar(0);
  for (std::size_t i = 0; i < pair.predictions.size(); ++i) {
    const Point2<Scalar> delta = pair.predictions[i] - pair.ground_truth[i];
    sum += kind == CoordinateLossKind::MSE ? delta.squaredNorm()
                                           : delta.template lpNorm<1>();
  }
  return sum / static_cast<Scalar>(pair.predictions.size());
}

/// Pixel-wise heatmap criterion. Cross-entropy treats the raw predicted grid
/// as logits, softmax-normalized over all cells.
template <typename Scalar>
Scalar heatmap_loss(const Heatmap<Scalar>& pred, const Heatmap<Scalar>& gt,
                    HeatmapLossKind kind) {
  if (pred.shape() != gt.shape()) {
    throw ShapeMismatch("heatmap dimensions differ");
  }
  if (kind == HeatmapLossKind::MSE) {
    return (pred.values - gt.values).squaredNorm() /
           static_cast<Scalar>(pred.size());
  }
  const Scalar max_logit = pred.values.maxCoeff();
  const Scalar lse =
      max_logit +
      std::log((pred.values.array() - max_logit).exp().sum());
  Scalar loss = Scalar(0);
  const Scalar* p = pred.values.data();
  const Scalar* g = gt.values.data();
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (g[i] != Scalar(0)) {
      loss += g[i] * (lse - p[i]);
    }
  }
  return loss;
}

/// Localization error split into the heatmap and quantization legs around
/// the optimal-decode point. Reporting only; the triangle inequality
/// localization <= heatmap_error + quantization_error always holds.
template <typename Scalar>
ErrorDecomposition<Scalar> decompose_error(const Point2<Scalar>& x_pred,
                                           const Point2<Scalar>& x_opt,
                                           const Point2<Scalar>& x_gt) {
  detail::require_finite(x_pred.x(), "x_pred");
  detail::require_finite(x_pred.y(), "x_pred");
  detail::require_finite(x_opt.x(), "x_opt");
  detail::require_finite(x_opt.y(), "x_opt");
  detail::require_finite(x_gt.x(), "x_gt");
  detail::require_finite(x_gt.y(), "x_gt");
  return {(x_pred - x_gt).norm(), (x_pred - x_opt).norm(),
          (x_opt - x_gt).norm()};
}

}  // namespace subpix
