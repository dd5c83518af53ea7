#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <subpix/encode.hpp>
#include <subpix/metrics.hpp>

#include <cmath>

using namespace subpix;

namespace {

LandmarkSetPair<double> make_pair(std::vector<Point2d> preds,
                                  std::vector<Point2d> gts) {
  return {std::move(preds), std::move(gts), {}};
}

}  // namespace

TEST_CASE("nme averages normalized distances in percent") {
  const auto pair = make_pair({{1, 1}, {2, 2}}, {{1, 1}, {2, 1}});
  CHECK(nme(pair, Normalization::fixed_distance(2.0)) ==
        doctest::Approx(25.0).epsilon(1e-12));

  const auto same = make_pair({{3, 4}, {5, 6}}, {{3, 4}, {5, 6}});
  CHECK(nme(same, Normalization::fixed_distance(2.0)) == 0.0);

  const auto triangle = make_pair({{3, 4}}, {{0, 0}});
  CHECK(nme(triangle, Normalization::fixed_distance(5.0)) ==
        doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("nme normalization variants") {
  LandmarkSetPair<double> pair;
  pair.predictions = {{0, 0}, {10, 0}, {5, 6}};
  pair.ground_truth = {{0, 0}, {10, 0}, {5, 5}};
  // inter-ocular distance between gt 0 and 1 is 10
  const double io = nme(pair, Normalization::inter_ocular(0, 1));
  CHECK(io == doctest::Approx(100.0 / 3.0 * (1.0 / 10.0)).epsilon(1e-12));
  CHECK(nme(pair, Normalization::inter_pupil(0, 1)) == io);
  // bbox sqrt(25 * 4) = 10
  CHECK(nme(pair, Normalization::bbox_sqrt(25.0, 4.0)) ==
        doctest::Approx(io).epsilon(1e-12));
}

TEST_CASE("nme rejects non-positive distances and empty evaluations") {
  const auto pair = make_pair({{1, 1}}, {{1, 1}});
  CHECK_THROWS_AS(nme(pair, Normalization::fixed_distance(0.0)),
                  InvalidNormalization);
  CHECK_THROWS_AS(nme(pair, Normalization::fixed_distance(-2.0)),
                  InvalidNormalization);
  // coincident landmarks give d = 0
  CHECK_THROWS_AS(nme(pair, Normalization::inter_ocular(0, 0)),
                  InvalidNormalization);

  LandmarkSetPair<double> masked = pair;
  masked.visibility = {false};
  CHECK_THROWS_AS(nme(masked, Normalization::fixed_distance(1.0)),
                  EmptyEvaluation);
}

TEST_CASE("nme is invariant under uniform rescaling") {
  RngStream rng(21, 0);
  for (int i = 0; i < 200; ++i) {
    LandmarkSetPair<double> pair;
    for (int k = 0; k < 5; ++k) {
      pair.predictions.push_back({rng.uniform() * 50, rng.uniform() * 50});
      pair.ground_truth.push_back({rng.uniform() * 50, rng.uniform() * 50});
    }
    const double d = 1.0 + rng.uniform() * 10.0;
    const double scale = 0.1 + rng.uniform() * 20.0;
    LandmarkSetPair<double> scaled = pair;
    for (auto& p : scaled.predictions) {
      p *= scale;
    }
    for (auto& p : scaled.ground_truth) {
      p *= scale;
    }
    const double a = nme(pair, Normalization::fixed_distance(d));
    const double b = nme(scaled, Normalization::fixed_distance(d * scale));
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("pck counts inclusive hits") {
  const auto all = make_pair({{1, 1}, {2, 2}}, {{1, 1}, {2, 2}});
  CHECK(pck(all, 10.0, 0.5) == 1.0);

  // distance exactly alpha * l counts as correct
  const auto boundary = make_pair({{5, 0}}, {{0, 0}});
  CHECK(pck(boundary, 10.0, 0.5) == 1.0);

  const auto half = make_pair({{0, 0}, {10, 0}}, {{0, 0}, {0, 0}});
  CHECK(pck(half, 10.0, 0.5) == 0.5);
}

TEST_CASE("pck is monotone in alpha") {
  RngStream rng(22, 0);
  LandmarkSetPair<double> pair;
  for (int k = 0; k < 40; ++k) {
    pair.predictions.push_back({rng.uniform() * 20, rng.uniform() * 20});
    pair.ground_truth.push_back({rng.uniform() * 20, rng.uniform() * 20});
  }
  double previous = 0.0;
  for (double alpha = 0.0; alpha <= 1.0; alpha += 0.05) {
    const double v = pck(pair, 15.0, alpha);
    CHECK(v >= previous);
    previous = v;
  }
}

TEST_CASE("coordinate losses") {
  const auto same = make_pair({{1, 2}}, {{1, 2}});
  CHECK(coordinate_loss(same, CoordinateLossKind::MSE) == 0.0);
  CHECK(coordinate_loss(same, CoordinateLossKind::MAE) == 0.0);

  const auto offset = make_pair({{3, 4}}, {{0, 0}});
  CHECK(coordinate_loss(offset, CoordinateLossKind::MSE) == 25.0);
  CHECK(coordinate_loss(offset, CoordinateLossKind::MAE) == 7.0);
}

TEST_CASE("heatmap mse") {
  Heatmapd a({8, 8}, 4.0);
  Heatmapd b({8, 8}, 4.0);
  a.values(2, 2) = 1.0;
  b.values(2, 2) = 1.0;
  CHECK(heatmap_loss(a, b, HeatmapLossKind::MSE) == 0.0);
  b.values(2, 2) = 0.0;
  CHECK(heatmap_loss(a, b, HeatmapLossKind::MSE) ==
        doctest::Approx(1.0 / 64.0).epsilon(1e-12));

  Heatmapd c({4, 8}, 4.0);
  CHECK_THROWS_AS(heatmap_loss(a, c, HeatmapLossKind::MSE), ShapeMismatch);
}

TEST_CASE("cross entropy of uniform logits against one-hot is log(W*H)") {
  Heatmapd pred({8, 8}, 4.0);
  pred.values.setConstant(0.37);  // any constant logit
  Heatmapd gt({8, 8}, 4.0);
  gt.values(3, 5) = 1.0;
  CHECK(heatmap_loss(pred, gt, HeatmapLossKind::CrossEntropySoftmax) ==
        doctest::Approx(std::log(64.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy matches the closed form for spiked logits") {
  // logits c at the hot cell and 0 elsewhere: loss = log(1 + (WH-1)e^{-c})
  for (const double c : {0.0, 1.0, 3.0, 10.0}) {
    Heatmapd pred({8, 8}, 4.0);
    pred.values(3, 5) = c;
    Heatmapd gt({8, 8}, 4.0);
    gt.values(3, 5) = 1.0;
    const double direct =
        heatmap_loss(pred, gt, HeatmapLossKind::CrossEntropySoftmax);
    const double closed = std::log(1.0 + 63.0 * std::exp(-c));
    CHECK(direct == doctest::Approx(closed).epsilon(1e-9));
  }
}

TEST_CASE("cross entropy is nonnegative for distribution targets") {
  RngStream rng(23, 0);
  for (int i = 0; i < 200; ++i) {
    Heatmapd pred({6, 6}, 4.0);
    Heatmapd gt({6, 6}, 4.0);
    for (Eigen::Index j = 0; j < pred.size(); ++j) {
      pred.values.data()[j] = rng.uniform() * 4.0 - 2.0;
      gt.values.data()[j] = rng.uniform();
    }
    gt.values /= gt.values.sum();
    CHECK(heatmap_loss(pred, gt, HeatmapLossKind::CrossEntropySoftmax) >=
          -1e-12);
  }
}

TEST_CASE("error decomposition triple") {
  const Point2d p{1, 2};
  const auto zero = decompose_error(p, p, p);
  CHECK(zero.localization == 0.0);
  CHECK(zero.heatmap_error == 0.0);
  CHECK(zero.quantization_error == 0.0);

  const Point2d pred{4, 6};
  const auto no_quant = decompose_error(pred, p, p);
  CHECK(no_quant.localization == no_quant.heatmap_error);
  CHECK(no_quant.quantization_error == 0.0);

  const auto no_heat = decompose_error(pred, pred, p);
  CHECK(no_heat.localization == no_heat.quantization_error);
  CHECK(no_heat.heatmap_error == 0.0);
}

TEST_CASE("mismatched landmark counts are rejected") {
  LandmarkSetPair<double> pair;
  pair.predictions = {{1, 1}};
  pair.ground_truth = {{1, 1}, {2, 2}};
  CHECK_THROWS_AS(nme(pair, Normalization::fixed_distance(1.0)),
                  ShapeMismatch);
  CHECK_THROWS_AS(coordinate_loss(pair, CoordinateLossKind::MSE),
                  ShapeMismatch);
}

TEST_CASE("visibility masks exclude landmarks from nme and pck") {
  LandmarkSetPair<double> pair;
  pair.predictions = {{0, 0}, {100, 0}};
  pair.ground_truth = {{0, 0}, {0, 0}};
  pair.visibility = {true, false};
  CHECK(nme(pair, Normalization::fixed_distance(10.0)) == 0.0);
  CHECK(pck(pair, 10.0, 0.5) == 1.0);
}
