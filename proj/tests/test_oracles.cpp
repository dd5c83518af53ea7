#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <subpix/oracles.hpp>

#include <algorithm>
#include <array>
#include <cmath>

using namespace subpix;

namespace {

// Independent quadrature for the sorted-probability profile: midpoint rule
// over the unit square, no shared code with the Monte Carlo oracle.
std::array<double, 4> quadrature_profile(int resolution) {
  std::array<double, 4> acc{};
  for (int ix = 0; ix < resolution; ++ix) {
    for (int iy = 0; iy < resolution; ++iy) {
      const double x = (ix + 0.5) / resolution;
      const double y = (iy + 0.5) / resolution;
      std::array<double, 4> p{(1 - x) * (1 - y), x * (1 - y), (1 - x) * y,
                              x * y};
      std::sort(p.begin(), p.end(), std::greater<>());
      for (std::size_t j = 0; j < 4; ++j) {
        acc[j] += p[j];
      }
    }
  }
  const double cells = static_cast<double>(resolution) * resolution;
  for (auto& v : acc) {
    v /= cells;
  }
  return acc;
}

}  // namespace

TEST_CASE("error-bound verdict at s=4, t=0.5") {
  const auto v = check_error_bound(4.0, 0.5, 200);
  CHECK(v.pass);
  CHECK(v.expected == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(v.observed == doctest::Approx(v.expected).epsilon(1e-9));
  CHECK(v.note.find("eps=(0.5, 0.5)") != std::string::npos);
}

TEST_CASE("error-bound check accepts the degenerate stride s=1") {
  const auto v = check_error_bound(1.0, 0.5, 100);
  CHECK(v.pass);
  CHECK(v.expected == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("error-bound check at the boundary threshold uses one-sided tightness") {
  const auto v = check_error_bound(16.0, 1.0, 200);
  CHECK(v.pass);
  CHECK(v.expected == doctest::Approx(8.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(v.tolerance == doctest::Approx(16.0 * 0.02));
  // the wrap of eps -> 1 lands on the snapped eps = 0 grid point
  CHECK(v.observed >= v.expected - v.tolerance);
  CHECK(v.observed <= v.expected + 1e-9);
}

TEST_CASE("error-bound maximum sits within one grid cell of (t, t)") {
  for (const double t : {0.0, 0.25, 0.5, 0.75}) {
    const auto v = check_error_bound(4.0, t, 100);
    CHECK(v.pass);  // pass already includes the location check
  }
}

TEST_CASE("unbiasedness bands") {
  const auto v = check_unbiasedness(4.0, 1000000, RngStream(5, 0));
  CHECK(v.pass);
  CHECK(v.tolerance == doctest::Approx(0.006).epsilon(1e-9));

  const auto small = check_unbiasedness(2.0, 100000, RngStream(5, 1));
  CHECK(small.tolerance ==
        doctest::Approx(3.0 * 2.0 * std::sqrt(0.25 / 1e5)).epsilon(1e-9));
  CHECK(small.pass);
}

TEST_CASE("losslessness for integer and fractional strides") {
  for (const double s : {4.0, 7.3}) {
    const auto v = check_losslessness(s, 100);
    CHECK(v.pass);
    CHECK(v.observed <= 1e-9);
  }
}

TEST_CASE("losslessness verdict holds for supersets of the four cells") {
  for (const auto strategy :
       {ActivationStrategy::top_k(4), ActivationStrategy::top_k(6),
        ActivationStrategy::top_k(9), ActivationStrategy::nine_neighbor_union(),
        ActivationStrategy::four_neighbor_of_max()}) {
    const auto v = check_losslessness(4.0, 100, strategy);
    CHECK(v.pass);
  }
}

TEST_CASE("bias formula verdicts across thresholds") {
  int stream = 0;
  for (const double t : {0.0, 0.5, 1.0}) {
    const auto v = check_decode_bias(
        4.0, t, 200000, RngStream(6, static_cast<std::uint64_t>(stream++)));
    CHECK(v.pass);
    CHECK(v.expected == doctest::Approx(0.5 - t));
  }
}

TEST_CASE("verdicts are reproducible for identical seeds and parameters") {
  const auto a = check_unbiasedness(4.0, 100000, RngStream(9, 3));
  const auto b = check_unbiasedness(4.0, 100000, RngStream(9, 3));
  CHECK(a.observed == b.observed);
  const auto c = check_decode_bias(4.0, 0.5, 100000, RngStream(9, 4));
  const auto d = check_decode_bias(4.0, 0.5, 100000, RngStream(9, 4));
  CHECK(c.observed == d.observed);
}

TEST_CASE("sorted-probability profile matches the quadrature oracle") {
  // Frozen expectations, independently derived from the quadrature oracle:
  // {9/16, 13/48, 5/48, 1/16}.
  const std::array<double, 4> frozen{0.5625, 13.0 / 48.0, 5.0 / 48.0, 0.0625};
  const auto quad = quadrature_profile(2000);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::abs(quad[j] - frozen[j]) <= 1e-6);
    CHECK(std::abs(analytic_topk_profile()[j] - frozen[j]) <= 1e-15);
  }

  const auto profile = topk_probability_profile(1000000, RngStream(10, 0));
  double sum = 0;
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::abs(profile.mean[j] - frozen[j]) <= 0.003);
    CHECK(profile.stderr[j] > 0.0);
    CHECK(std::abs(profile.mean[j] - frozen[j]) <= 5.0 * profile.stderr[j]);
    sum += profile.mean[j];
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
  CHECK(profile.mean[0] >= 0.25);
  CHECK(std::is_sorted(profile.mean.rbegin(), profile.mean.rend()));
}

TEST_CASE("full verification suite passes and serial reruns agree") {
  const auto verdicts = run_verification(20260809);
  CHECK(verification_passed(verdicts));
  const auto again = run_verification(20260809);
  REQUIRE(verdicts.size() == again.size());
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    CHECK(verdicts[i].observed == again[i].observed);
    CHECK(verdicts[i].pass == again[i].pass);
  }
}

TEST_CASE("verification outcome logic honors the retry policy") {
  OracleVerdict det_fail;
  det_fail.name = "x";
  det_fail.pass = false;
  CHECK_FALSE(verification_passed({det_fail}));

  OracleVerdict stat_fail;
  stat_fail.name = "y";
  stat_fail.pass = false;
  stat_fail.statistical = true;
  CHECK_FALSE(verification_passed({stat_fail}));  // no retry recorded

  OracleVerdict retry_ok = stat_fail;
  retry_ok.name = "retry:y";
  retry_ok.pass = true;
  CHECK(verification_passed({stat_fail, retry_ok}));

  OracleVerdict retry_bad = retry_ok;
  retry_bad.pass = false;
  CHECK_FALSE(verification_passed({stat_fail, retry_bad}));
}

TEST_CASE("oracle preconditions") {
  CHECK_THROWS_AS(check_error_bound(4.0, 0.5, 10), std::invalid_argument);
  CHECK_THROWS_AS(check_unbiasedness(4.0, 10, RngStream(0, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_losslessness(4.0, 50), std::invalid_argument);
  CHECK_THROWS_AS(check_decode_bias(4.0, 0.5, 10, RngStream(0, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(topk_probability_profile(10, RngStream(0, 0)),
                  std::invalid_argument);
}
