#pragma once

#include <subpix/heatmap.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <vector>

namespace subpix {

/// How decode_expectation picks its activation cells.
struct ActivationStrategy {
  enum class Kind { FourNeighborOfMax, NineNeighborUnion, TopK };

  Kind kind = Kind::TopK;
  Eigen::Index k = 1;

  static ActivationStrategy four_neighbor_of_max() {
    return {Kind::FourNeighborOfMax, 0};
  }
  static ActivationStrategy nine_neighbor_union() {
    return {Kind::NineNeighborUnion, 0};
  }
  static ActivationStrategy top_k(Eigen::Index k) { return {Kind::TopK, k}; }
};

/// Ordered activation cells with their raw heatmap values as weights.
template <typename Scalar>
struct ActivationSet {
  std::vector<GridPoint> points;
  std::vector<Scalar> weights;

  std::size_t size() const { return points.size(); }
};

namespace detail {

template <typename Scalar>
void require_valid_grid(const Heatmap<Scalar>& h, const char* op) {
  if (h.size() == 0) {
    throw InvalidHeatmap(std::string(op) + ": empty heatmap");
  }
  if (h.values.hasNaN()) {
    throw InvalidHeatmap(std::string(op) + ": NaN activation value");
  }
}

// First occurrence in row-major order wins ties.
template <typename Scalar>
GridPoint argmax_cell(const Heatmap<Scalar>& h) {
  const Scalar* data = h.values.data();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < h.size(); ++i) {
    if (data[i] > data[best]) {
      best = i;
    }
  }
  return {best % h.width(), best / h.width()};
}

template <typename Scalar>
std::pair<GridPoint, GridPoint> top_two_cells(const Heatmap<Scalar>& h) {
  const Scalar* data = h.values.data();
  Eigen::Index best = -1;
  Eigen::Index second = -1;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (best < 0 || data[i] > data[best]) {
      second = best;
      best = i;
    } else if (second < 0 || data[i] > data[second]) {
      second = i;
    }
  }
  const auto w = h.width();
  return {{best % w, best / w}, {second % w, second / w}};
}

}  // namespace detail

/// Stride-scaled argmax decode; row-major tie-break.
template <typename Scalar>
Point2<Scalar> decode_argmax(const Heatmap<Scalar>& h) {
  detail::require_valid_grid(h, "decode_argmax");
  const GridPoint m = detail::argmax_cell(h);
  return h.stride * Point2<Scalar>(static_cast<Scalar>(m.col),
                                   static_cast<Scalar>(m.row));
}

/// Argmax decode shifted by (t - 0.5) cells per axis, cancelling the mean
/// bias of a threshold-t encoder. t = 0.5 is plain argmax.
template <typename Scalar>
Point2<Scalar> decode_argmax_bias_corrected(const Heatmap<Scalar>& h,
                                            Scalar threshold) {
  detail::require_threshold(threshold);
  detail::require_valid_grid(h, "decode_argmax_bias_corrected");
  const GridPoint m = detail::argmax_cell(h);
  const Scalar shift = threshold - Scalar(0.5);
  return h.stride * Point2<Scalar>(static_cast<Scalar>(m.col) + shift,
                                   static_cast<Scalar>(m.row) + shift);
}

/// Shifts the argmax a quarter cell toward the second-largest cell,
/// independently per axis along the sign of the displacement.
template <typename Scalar>
Point2<Scalar> decode_quarter_shift(const Heatmap<Scalar>& h) {
  detail::require_valid_grid(h, "decode_quarter_shift");
  const auto [m, m2] = detail::top_two_cells(h);
  const auto sign = [](Eigen::Index d) -> Scalar {
    return d > 0 ? Scalar(1) : (d < 0 ? Scalar(-1) : Scalar(0));
  };
  return h.stride *
         Point2<Scalar>(
             static_cast<Scalar>(m.col) + Scalar(0.25) * sign(m2.col - m.col),
             static_cast<Scalar>(m.row) + Scalar(0.25) * sign(m2.row - m.row));
}

/// Picks the activation cells for expectation decoding. Out-of-bounds
/// neighbors are dropped; ties resolve to the smallest row-major index.
template <typename Scalar>
ActivationSet<Scalar> select_activation_set(const Heatmap<Scalar>& h,
                                            const ActivationStrategy& strategy) {
  detail::require_valid_grid(h, "select_activation_set");
  ActivationSet<Scalar> set;

  const auto push_cell = [&](GridPoint p) {
    if (h.contains(p)) {
      set.points.push_back(p);
      set.weights.push_back(h.at(p));
    }
  };

  switch (strategy.kind) {
    case ActivationStrategy::Kind::FourNeighborOfMax: {
      const GridPoint m = detail::argmax_cell(h);
      // Four 2x2 blocks contain the max cell; keep the one holding the most
      // mass (in-bounds cells only), ties by row-major corner order.
      Scalar best_sum = -std::numeric_limits<Scalar>::infinity();
      GridPoint best_corner{};
      for (Eigen::Index dr = -1; dr <= 0; ++dr) {
        for (Eigen::Index dc = -1; dc <= 0; ++dc) {
          const GridPoint corner{m.col + dc, m.row + dr};
          Scalar sum = Scalar(0);
          for (Eigen::Index r = corner.row; r <= corner.row + 1; ++r) {
            for (Eigen::Index c = corner.col; c <= corner.col + 1; ++c) {
              if (h.contains({c, r})) {
                sum += h.values(r, c);
              }
            }
          }
          if (sum > best_sum) {
            best_sum = sum;
            best_corner = corner;
          }
        }
      }
      for (Eigen::Index r = best_corner.row; r <= best_corner.row + 1; ++r) {
        for (Eigen::Index c = best_corner.col; c <= best_corner.col + 1; ++c) {
          push_cell({c, r});
        }
      }
      break;
    }
    case ActivationStrategy::Kind::NineNeighborUnion: {
      const GridPoint m = detail::argmax_cell(h);
      for (Eigen::Index r = m.row - 1; r <= m.row + 1; ++r) {
        for (Eigen::Index c = m.col - 1; c <= m.col + 1; ++c) {
          push_cell({c, r});
        }
      }
      break;
    }
    case ActivationStrategy::Kind::TopK: {
      if (strategy.k < 1 || strategy.k > h.size()) {
        throw std::invalid_argument("top-k size outside [1, width*height]");
      }
      const Scalar* data = h.values.data();
      std::vector<Eigen::Index> order(static_cast<std::size_t>(h.size()));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::partial_sort(order.begin(), order.begin() + strategy.k, order.end(),
                        [data](Eigen::Index a, Eigen::Index b) {
                          if (data[a] != data[b]) {
                            return data[a] > data[b];
                          }
                          return a < b;
                        });
      const auto w = h.width();
      for (Eigen::Index i = 0; i < strategy.k; ++i) {
        push_cell({order[i] % w, order[i] / w});
      }
      break;
    }
  }
  return set;
}

/// Activation-probability-weighted mean of the set's cell coordinates,
/// scaled by the stride. With `renormalize` the weights are first divided by
/// their sum; without it the literal weighted sum is returned, which only
/// reconstructs coordinates when the weights already sum to 1.
template <typename Scalar>
Point2<Scalar> decode_expectation(const Heatmap<Scalar>& h,
                                  const ActivationSet<Scalar>& set,
                                  bool renormalize = true) {
  if (set.points.empty() || set.points.size() != set.weights.size()) {
    throw std::invalid_argument("activation set empty or mismatched");
  }
  Scalar sum = Scalar(0);
  Point2<Scalar> acc = Point2<Scalar>::Zero();
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const Scalar w = set.weights[i];
    detail::require_finite(w, "activation weight");
    sum += w;
    acc.x() += w * static_cast<Scalar>(set.points[i].col);
    acc.y() += w * static_cast<Scalar>(set.points[i].row);
  }
  if (renormalize) {
    if (sum <= Scalar(0)) {
      throw DegenerateSet("decode_expectation: activation weights sum to zero");
    }
    acc /= sum;
  } else if (std::abs(sum - Scalar(1)) > Scalar(1e-6)) {
    std::cerr << "subpix: decode_expectation without renormalization on "
                 "weights summing to "
              << sum << "\n";
  }
  return h.stride * acc;
}

}  // namespace subpix
