#include <subpix/oracles.hpp>

#include <subpix/encode.hpp>
#include <subpix/quantize.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace subpix {

namespace {

constexpr GridShape kGrid{8, 8};
constexpr Eigen::Index kBaseCell = 3;  // keeps every activation set in bounds

std::string format_eps(double ex, double ey) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max at eps=(%.6g, %.6g)", ex, ey);
  return buf;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}


}  // namespace

OracleVerdict check_error_bound(double stride, double threshold,
                             int eps_resolution) {
  if (eps_resolution < 50) {
    throw std::invalid_argument("eps_resolution must be >= 50");
  }
  const double bound = std::sqrt(2.0) * stride / 2.0;

  std::vector<double> eps(static_cast<std::size_t>(eps_resolution));
  for (int i = 0; i < eps_resolution; ++i) {
    eps[static_cast<std::size_t>(i)] = static_cast<double>(i) / eps_resolution;
  }
  // The appendix locates the maximum at eps = t, so evaluate that point
  // exactly; t = 1 lies outside [0, 1) and only its limit is on the grid.
  if (threshold < 1.0 &&
      std::find(eps.begin(), eps.end(), threshold) == eps.end()) {
    eps.push_back(threshold);
  }

  double max_err = 0;
  double at_x = 0;
  double at_y = 0;
  for (const double ex : eps) {
    for (const double ey : eps) {
      const Point2d gt{(kBaseCell + ex) * stride, (kBaseCell + ey) * stride};
      const auto h = encode_binary<double>(gt, kGrid, stride, threshold);
      const Point2d decoded = decode_argmax_bias_corrected(h, threshold);
      const double err = (decoded - gt).norm();
      if (err > max_err) {
        max_err = err;
        at_x = ex;
        at_y = ey;
      }
    }
  }

  const bool boundary = threshold == 0.0 || threshold == 1.0;
  const double tight_tol = boundary ? stride * 0.02 : 1e-9;
  const bool bound_ok = max_err <= bound + 1e-9;
  const bool tight_ok = max_err >= bound - tight_tol;
  // Attainment location: eps = t up to one grid cell. Fractional parts wrap,
  // so at t = 1 the maximizer reappears at eps = 0.
  const double cell = 1.0 / eps_resolution;
  const auto near_t = [&](double e) {
    const double d = std::abs(e - threshold);
    return std::min(d, 1.0 - d) <= cell + 1e-12;
  };
  const bool location_ok = near_t(at_x) && near_t(at_y);

  OracleVerdict v;
  v.name = "error-bound/s=" + fmt_g(stride) + "/t=" + fmt_g(threshold);
  v.observed = max_err;
  v.expected = bound;
  v.tolerance = tight_tol;
  v.pass = bound_ok && tight_ok && location_ok;
  v.samples = static_cast<std::uint64_t>(eps.size() * eps.size());
  v.note = "max error <= bound + 1e-9 and >= bound - tol; " +
           format_eps(at_x, at_y);
  return v;
}

OracleVerdict check_unbiasedness(double stride, std::uint64_t n,
                                      RngStream rng) {
  if (n < 100000) {
    throw std::invalid_argument("n must be >= 1e5");
  }
  const double ex = rng.uniform();
  const double ey = rng.uniform();
  const Point2d gt{(kBaseCell + ex) * stride, (kBaseCell + ey) * stride};

  double sum_x = 0;
  double sum_y = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    sum_x += stride *
             static_cast<double>(quantize_random_round(gt.x(), stride, rng));
    sum_y += stride *
             static_cast<double>(quantize_random_round(gt.y(), stride, rng));
  }
  const double dn = static_cast<double>(n);
  const double dev_x = std::abs(sum_x / dn - gt.x());
  const double dev_y = std::abs(sum_y / dn - gt.y());
  const double band = 3.0 * stride * std::sqrt(0.25 / dn);

  OracleVerdict v;
  v.name = "random-round-unbiased/s=" + fmt_g(stride);
  v.observed = std::max(dev_x, dev_y);
  v.expected = 0.0;
  v.tolerance = band;
  v.pass = dev_x <= band && dev_y <= band;
  v.samples = n;
  v.statistical = true;
  v.note = "worst-axis |mean - gt|, 3-sigma worst-case Bernoulli band";
  return v;
}

OracleVerdict check_losslessness(double stride, int eps_resolution) {
  return check_losslessness(stride, eps_resolution,
                                 ActivationStrategy::top_k(4));
}

OracleVerdict check_losslessness(double stride, int eps_resolution,
                                      const ActivationStrategy& strategy) {
  if (eps_resolution < 100) {
    throw std::invalid_argument("eps_resolution must be >= 100");
  }
  double max_err = 0;
  for (int ix = 0; ix < eps_resolution; ++ix) {
    for (int iy = 0; iy < eps_resolution; ++iy) {
      const double ex = static_cast<double>(ix) / eps_resolution;
      const double ey = static_cast<double>(iy) / eps_resolution;
      const Point2d gt{(kBaseCell + ex) * stride, (kBaseCell + ey) * stride};
      const auto h = encode_expected<double>(gt, kGrid, stride);
      const auto set = select_activation_set(h, strategy);
      const Point2d decoded = decode_expectation(h, set, true);
      max_err = std::max(max_err,
                         (decoded - gt).cwiseAbs().maxCoeff());
    }
  }

  OracleVerdict v;
  v.name = "codec-lossless/s=" + fmt_g(stride);
  v.observed = max_err;
  v.expected = 0.0;
  v.tolerance = 1e-9;
  v.pass = max_err <= 1e-9;
  v.samples = static_cast<std::uint64_t>(eps_resolution) *
              static_cast<std::uint64_t>(eps_resolution);
  v.note = "max reconstruction error over the eps grid, infinity norm";
  return v;
}

OracleVerdict check_decode_bias(double stride, double threshold,
                                 std::uint64_t n, RngStream rng) {
  if (n < 100000) {
    throw std::invalid_argument("n must be >= 1e5");
  }
  double sum_x = 0;
  double sum_y = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const Point2d gt{(kBaseCell + rng.uniform()) * stride,
                     (kBaseCell + rng.uniform()) * stride};
    const auto h = encode_binary<double>(gt, kGrid, stride, threshold);
    const Point2d decoded = decode_argmax(h);
    sum_x += (decoded.x() - gt.x()) / stride;
    sum_y += (decoded.y() - gt.y()) / stride;
  }
  const double dn = static_cast<double>(n);
  const double expected = threshold_bias(threshold);
  const double band = 3.0 * std::sqrt(1.0 / 12.0 / dn);
  const double bias_x = sum_x / dn;
  const double bias_y = sum_y / dn;
  const double worst = std::abs(bias_x - expected) >= std::abs(bias_y - expected)
                           ? bias_x
                           : bias_y;

  OracleVerdict v;
  v.name = "decode-bias/s=" + fmt_g(stride) + "/t=" + fmt_g(threshold);
  v.observed = worst;
  v.expected = expected;
  v.tolerance = band;
  v.pass = std::abs(bias_x - expected) <= band &&
           std::abs(bias_y - expected) <= band;
  v.samples = n;
  v.statistical = true;
  v.note = "per-axis decode bias / stride, 3-sigma uniform-residual band";
  return v;
}

TopkProfile topk_probability_profile(std::uint64_t n, RngStream rng) {
  if (n < 100000) {
    throw std::invalid_argument("n must be >= 1e5");
  }
  std::array<double, 4> sum{};
  std::array<double, 4> sum_sq{};
  for (std::uint64_t i = 0; i < n; ++i) {
    const double ex = rng.uniform();
    const double ey = rng.uniform();
    std::array<double, 4> p{(1 - ex) * (1 - ey), ex * (1 - ey), (1 - ex) * ey,
                            ex * ey};
    std::sort(p.begin(), p.end(), std::greater<>());
    for (std::size_t j = 0; j < 4; ++j) {
      sum[j] += p[j];
      sum_sq[j] += p[j] * p[j];
    }
  }
  TopkProfile profile;
  profile.samples = n;
  const double dn = static_cast<double>(n);
  for (std::size_t j = 0; j < 4; ++j) {
    profile.mean[j] = sum[j] / dn;
    const double var = sum_sq[j] / dn - profile.mean[j] * profile.mean[j];
    profile.stderr[j] = std::sqrt(std::max(var, 0.0) / dn);
  }
  return profile;
}

std::array<double, 4> analytic_topk_profile() {
  // The four cell probabilities factor per axis into max/min parts with
  // means 3/4 and 1/4, giving E[max] = 9/16 and E[min] = 1/16; the middle
  // pair splits its combined mean 3/8 into 13/48 and 5/48.
  return {9.0 / 16.0, 13.0 / 48.0, 5.0 / 48.0, 1.0 / 16.0};
}

std::array<double, 4> trained_model_topk_profile() {
  return {0.44, 0.26, 0.17, 0.13};
}

namespace {

OracleVerdict profile_verdict(std::uint64_t n, RngStream rng) {
  const auto profile = topk_probability_profile(n, rng);
  const auto reference = analytic_topk_profile();
  double worst = 0;
  for (std::size_t j = 0; j < 4; ++j) {
    worst = std::max(worst, std::abs(profile.mean[j] - reference[j]));
  }
  OracleVerdict v;
  v.name = "topk-profile";
  v.observed = worst;
  v.expected = 0.0;
  v.tolerance = 0.003;
  v.pass = worst <= 0.003;
  v.samples = n;
  v.statistical = true;
  std::ostringstream note;
  note << "sorted means";
  for (const double m : profile.mean) {
    note << " " << m;
  }
  note << "; trained-model reference";
  for (const double m : trained_model_topk_profile()) {
    note << " " << m;
  }
  v.note = note.str();
  return v;
}

}  // namespace

std::vector<OracleVerdict> run_verification(std::uint64_t seed) {
  // Stream ids per check keep verdicts independent of suite composition.
  constexpr std::uint64_t kUnbiasedStream = 101;
  constexpr std::uint64_t kBiasStream = 201;
  constexpr std::uint64_t kProfileStream = 301;
  constexpr std::uint64_t kRetrySeedSalt = 0xa5a5a5a5deadbeefULL;

  std::vector<OracleVerdict> verdicts;
  for (const double s : {2.0, 4.0, 16.0}) {
    verdicts.push_back(check_error_bound(s, 0.5, 200));
  }
  verdicts.push_back(check_error_bound(16.0, 1.0, 200));
  for (const double s : {1.5, 2.0, 4.0, 7.3, 16.0}) {
    verdicts.push_back(check_losslessness(s, 100));
  }
  verdicts.push_back(
      check_unbiasedness(4.0, 1000000, RngStream(seed, kUnbiasedStream)));
  int bias_index = 0;
  for (const double t : {0.0, 0.5, 1.0}) {
    verdicts.push_back(check_decode_bias(
        4.0, t, 1000000, RngStream(seed, kBiasStream + bias_index++)));
  }
  verdicts.push_back(profile_verdict(1000000, RngStream(seed, kProfileStream)));

  // One retry with a derived fresh seed for statistical misses (3-sigma
  // bands fail by chance roughly 0.3% of the time).
  const std::uint64_t retry_seed = seed ^ kRetrySeedSalt;
  const std::size_t initial_count = verdicts.size();
  for (std::size_t i = 0; i < initial_count; ++i) {
    if (!verdicts[i].statistical || verdicts[i].pass) {
      continue;
    }
    OracleVerdict retry;
    if (verdicts[i].name.rfind("random-round-unbiased", 0) == 0) {
      retry = check_unbiasedness(4.0, verdicts[i].samples,
                                      RngStream(retry_seed, kUnbiasedStream));
    } else if (verdicts[i].name.rfind("decode-bias", 0) == 0) {
      retry = check_decode_bias(4.0, 0.5 - verdicts[i].expected,
                                 verdicts[i].samples,
                                 RngStream(retry_seed, kBiasStream));
    } else {
      retry = profile_verdict(verdicts[i].samples,
                              RngStream(retry_seed, kProfileStream));
    }
    retry.name = "retry:" + retry.name;
    verdicts.push_back(retry);
  }
  return verdicts;
}

bool verification_passed(const std::vector<OracleVerdict>& verdicts) {
  std::map<std::string, bool> retried;
  for (const auto& v : verdicts) {
    if (v.name.rfind("retry:", 0) == 0) {
      retried[v.name.substr(6)] = v.pass;
    }
  }
  for (const auto& v : verdicts) {
    if (v.name.rfind("retry:", 0) == 0) {
      continue;
    }
    if (!v.pass) {
      if (!v.statistical) {
        return false;
      }
      const auto it = retried.find(v.name);
      if (it == retried.end() || !it->second) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace subpix
