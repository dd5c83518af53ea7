#pragma once

#include <subpix/decode.hpp>
#include <subpix/encode.hpp>

#include <cmath>
#include <utility>
#include <vector>

namespace subpix {

/// Which ground-truth encoder a simulated predictor reproduces. Gaussian
/// bases are divided by their mass so every predictor output is a
/// distribution over cells.
template <typename Scalar>
struct BaseEncoder {
  enum class Kind { Expected, Gaussian };

  Kind kind = Kind::Expected;
  GaussianConfig<Scalar> gaussian{};
  GaussianCenter center = GaussianCenter::Quantized;
  Scalar threshold = Scalar(0.5);
};

template <typename Scalar>
struct PredictorStage {
  enum class Kind { AdditiveNoise, Blur };

  Kind kind = Kind::AdditiveNoise;
  Scalar amount = Scalar(0);  // noise level or blur sigma, both >= 0
};

/// Synthetic stand-in for a trained heatmap network: the base encoder output
/// degraded by zero or more stages, applied in order. No stages is the
/// perfect predictor.
template <typename Scalar>
struct PredictorConfig {
  BaseEncoder<Scalar> base{};
  std::vector<PredictorStage<Scalar>> stages;

  static PredictorConfig perfect(BaseEncoder<Scalar> base = {}) {
    return {std::move(base), {}};
  }
  static PredictorConfig additive_noise(Scalar level,
                                        BaseEncoder<Scalar> base = {}) {
    return {std::move(base),
            {{PredictorStage<Scalar>::Kind::AdditiveNoise, level}}};
  }
  static PredictorConfig blur(Scalar sigma, BaseEncoder<Scalar> base = {}) {
    return {std::move(base), {{PredictorStage<Scalar>::Kind::Blur, sigma}}};
  }
  static PredictorConfig composite(std::vector<PredictorStage<Scalar>> stages,
                                   BaseEncoder<Scalar> base = {}) {
    return {std::move(base), std::move(stages)};
  }
};

enum class AnnotatorKind { UnbiasedStochastic, DeterministicRound };

namespace detail {

// In-place truncated Gaussian blur, separable, zero-padded at the border.
template <typename Scalar>
void blur_grid(GridMatrix<Scalar>& grid, Scalar sigma) {
  const auto radius =
      static_cast<Eigen::Index>(std::ceil(Scalar(3) * sigma));
  std::vector<Scalar> kernel(static_cast<std::size_t>(2 * radius + 1));
  Scalar ksum = Scalar(0);
  for (Eigen::Index i = -radius; i <= radius; ++i) {
    const Scalar v = std::exp(-static_cast<Scalar>(i * i) /
                              (Scalar(2) * sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    ksum += v;
  }
  for (auto& v : kernel) {
    v /= ksum;
  }

  GridMatrix<Scalar> tmp = GridMatrix<Scalar>::Zero(grid.rows(), grid.cols());
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      Scalar acc = Scalar(0);
      for (Eigen::Index i = -radius; i <= radius; ++i) {
        const Eigen::Index cc = c + i;
        if (cc >= 0 && cc < grid.cols()) {
          acc += kernel[static_cast<std::size_t>(i + radius)] * grid(r, cc);
        }
      }
      tmp(r, c) = acc;
    }
  }
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      Scalar acc = Scalar(0);
      for (Eigen::Index i = -radius; i <= radius; ++i) {
        const Eigen::Index rr = r + i;
        if (rr >= 0 && rr < grid.rows()) {
          acc += kernel[static_cast<std::size_t>(i + radius)] * tmp(rr, c);
        }
      }
      grid(r, c) = acc;
    }
  }
}

}  // namespace detail

/// Simulated heatmap prediction for a ground-truth point. Noise draws are
/// consumed cell by cell in row-major order, one uniform per cell per noise
/// stage. Zero-amount stages are exact identities.
template <typename Scalar>
Heatmap<Scalar> predict(const Point2<Scalar>& gt,
                        const PredictorConfig<Scalar>& cfg, GridShape shape,
                        Scalar stride, RngStream& rng) {
  Heatmap<Scalar> h;
  if (cfg.base.kind == BaseEncoder<Scalar>::Kind::Expected) {
    h = encode_expected(gt, shape, stride);
  } else {
    h = encode_gaussian(gt, shape, stride, cfg.base.gaussian,
                        cfg.base.threshold, cfg.base.center);
    h.values /= h.values.sum();
    h.normalized = true;
  }

  for (const auto& stage : cfg.stages) {
    detail::require_finite(stage.amount, "predictor stage amount");
    if (stage.amount < Scalar(0)) {
      throw std::invalid_argument("predictor stage amount must be >= 0");
    }
    if (stage.amount == Scalar(0)) {
      continue;
    }
    switch (stage.kind) {
      case PredictorStage<Scalar>::Kind::AdditiveNoise: {
        const Scalar span = stage.amount * h.values.maxCoeff();
        Scalar* data = h.values.data();
        for (Eigen::Index i = 0; i < h.size(); ++i) {
          data[i] += span * static_cast<Scalar>(rng.uniform());
        }
        h.values = h.values.cwiseMax(Scalar(0));
        break;
      }
      case PredictorStage<Scalar>::Kind::Blur:
        detail::blur_grid(h.values, stage.amount);
        break;
    }
    h.values /= h.values.sum();
  }
  return h;
}

/// Simulated annotator clicking integer pixels. The stochastic variant picks
/// among the four surrounding pixels with bilinear probabilities, so its
/// expectation is the true sub-pixel point; the deterministic variant rounds
/// half-up.
template <typename Scalar>
Point2<Scalar> annotate(const Point2<Scalar>& true_point, AnnotatorKind kind,
                        RngStream& rng) {
  switch (kind) {
    case AnnotatorKind::UnbiasedStochastic:
      return Point2<Scalar>(
          static_cast<Scalar>(quantize_random_round(true_point.x(), Scalar(1), rng)),
          static_cast<Scalar>(quantize_random_round(true_point.y(), Scalar(1), rng)));
    case AnnotatorKind::DeterministicRound:
    default:
      return Point2<Scalar>(
          static_cast<Scalar>(quantize_threshold(true_point.x(), Scalar(1), Scalar(0.5))),
          static_cast<Scalar>(quantize_threshold(true_point.y(), Scalar(1), Scalar(0.5))));
  }
}

}  // namespace subpix
