#include <subpix/experiment.hpp>

#include <subpix/landmarks.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace subpix {

namespace {

using nlohmann::json;

constexpr std::uint64_t kBlockSize = 1024;

[[noreturn]] void config_fail(const std::string& field,
                              const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

void require_keys(const json& j, const std::string& context,
                  std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    config_fail(context, "expected an object");
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      config_fail(context + "." + key, "unknown key");
    }
  }
}

double number_at(const json& j, const std::string& field) {
  if (!j.is_number()) {
    config_fail(field, "expected a number");
  }
  return j.get<double>();
}

std::string fmt_double(double v) { return json(v).dump(); }

// A decoder spec expanded to one sweep column.
struct DecoderInstance {
  DecoderSpec::Kind kind;
  double threshold = 0.5;
  Eigen::Index k = 0;
  bool renormalize = true;
  std::string label;
};

std::vector<DecoderInstance> flatten_decoders(const ExperimentConfig& cfg) {
  std::vector<DecoderInstance> out;
  for (const auto& spec : cfg.decoders) {
    switch (spec.kind) {
      case DecoderSpec::Kind::Argmax:
        out.push_back({spec.kind, 0.5, 0, true, "argmax"});
        break;
      case DecoderSpec::Kind::BiasCorrected:
        out.push_back({spec.kind, spec.threshold, 0, true,
                       "bias_corrected(t=" + fmt_double(spec.threshold) + ")"});
        break;
      case DecoderSpec::Kind::QuarterShift:
        out.push_back({spec.kind, 0.5, 0, true, "quarter_shift"});
        break;
      case DecoderSpec::Kind::TopK:
        for (const Eigen::Index k : spec.ks) {
          out.push_back({spec.kind, 0.5, k, spec.renormalize,
                         "topk(" + std::to_string(k) +
                             (spec.renormalize ? ")" : ",raw)")});
        }
        break;
    }
  }
  return out;
}

Point2d decode_with(const DecoderInstance& dec, const Heatmapd& h) {
  switch (dec.kind) {
    case DecoderSpec::Kind::Argmax:
      return decode_argmax(h);
    case DecoderSpec::Kind::BiasCorrected:
      return decode_argmax_bias_corrected(h, dec.threshold);
    case DecoderSpec::Kind::QuarterShift:
      return decode_quarter_shift(h);
    case DecoderSpec::Kind::TopK:
    default:
      return decode_expectation(
          h, select_activation_set(h, ActivationStrategy::top_k(dec.k)),
          dec.renormalize);
  }
}

struct Accumulator {
  double sum_err = 0;
  double max_err = 0;
  double sum_dx = 0;
  double sum_dy = 0;
  std::vector<std::uint64_t> hits;

  explicit Accumulator(std::size_t alphas) : hits(alphas, 0) {}

  void merge(const Accumulator& other) {
    sum_err += other.sum_err;
    max_err = std::max(max_err, other.max_err);
    sum_dx += other.sum_dx;
    sum_dy += other.sum_dy;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      hits[i] += other.hits[i];
    }
  }
};

double sweep_normalization_distance(const MetricConfig& metrics) {
  switch (metrics.normalization.kind) {
    case Normalization::Kind::FixedDistance:
      return metrics.normalization.distance;
    case Normalization::Kind::BBoxSqrt:
      return std::sqrt(metrics.normalization.bbox_width *
                       metrics.normalization.bbox_height);
    default:
      config_fail("metrics.normalization.kind",
                  "inter-ocular/inter-pupil need landmark files; use the "
                  "evaluate subcommand");
  }
}

std::string predictor_label(const ExperimentConfig& cfg) {
  if (cfg.predictor_stages.empty()) {
    return "perfect";
  }
  std::string label;
  for (const auto& stage : cfg.predictor_stages) {
    if (!label.empty()) {
      label += "+";
    }
    label += stage.kind == PredictorStage<double>::Kind::AdditiveNoise
                 ? "noise(" + fmt_double(stage.amount) + ")"
                 : "blur(" + fmt_double(stage.amount) + ")";
  }
  return label;
}

std::string annotator_label(const ExperimentConfig& cfg) {
  if (!cfg.annotator) {
    return "none";
  }
  return *cfg.annotator == AnnotatorKind::UnbiasedStochastic
             ? "unbiased_stochastic"
             : "deterministic_round";
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc) {
  require_keys(doc, "config",
               {"seed", "trials", "grid", "strides", "encoder", "decoders",
                "predictor", "annotator", "metrics", "output"});
  ExperimentConfig cfg;

  const auto is_nonnegative_int = [](const json& j) {
    return j.is_number_unsigned() ||
           (j.is_number_integer() && j.get<std::int64_t>() >= 0);
  };
  if (doc.contains("seed")) {
    if (!is_nonnegative_int(doc["seed"])) {
      config_fail("seed", "expected an unsigned integer");
    }
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }

  if (!doc.contains("trials") || !is_nonnegative_int(doc["trials"]) ||
      doc["trials"].get<std::uint64_t>() < 1) {
    config_fail("trials", "expected a positive integer");
  }
  cfg.trials = doc["trials"].get<std::uint64_t>();

  if (!doc.contains("grid")) {
    config_fail("grid", "missing");
  }
  require_keys(doc["grid"], "grid", {"width", "height"});
  if (!doc["grid"].contains("width") || !doc["grid"].contains("height")) {
    config_fail("grid", "width and height required");
  }
  cfg.grid.width = static_cast<Eigen::Index>(
      number_at(doc["grid"]["width"], "grid.width"));
  cfg.grid.height = static_cast<Eigen::Index>(
      number_at(doc["grid"]["height"], "grid.height"));
  if (cfg.grid.width < 4 || cfg.grid.height < 4) {
    config_fail("grid", "width and height must be >= 4");
  }

  if (!doc.contains("strides") || !doc["strides"].is_array() ||
      doc["strides"].empty()) {
    config_fail("strides", "expected a nonempty array");
  }
  for (const auto& s : doc["strides"]) {
    const double stride = number_at(s, "strides");
    if (!(stride >= 1.0) || !std::isfinite(stride)) {
      config_fail("strides", "each stride must be finite and >= 1");
    }
    cfg.strides.push_back(stride);
  }

  if (!doc.contains("encoder")) {
    config_fail("encoder", "missing");
  }
  const auto& enc = doc["encoder"];
  require_keys(enc, "encoder",
               {"kind", "sigmas", "center_mode", "threshold", "radius"});
  const std::string enc_kind = enc.value("kind", "");
  if (enc_kind == "expected") {
    cfg.encoder.kind = BaseEncoder<double>::Kind::Expected;
    if (enc.contains("sigmas") || enc.contains("center_mode") ||
        enc.contains("radius") || enc.contains("threshold")) {
      config_fail("encoder", "gaussian options given for the expected kind");
    }
  } else if (enc_kind == "gaussian") {
    cfg.encoder.kind = BaseEncoder<double>::Kind::Gaussian;
    if (!enc.contains("sigmas") || !enc["sigmas"].is_array() ||
        enc["sigmas"].empty()) {
      config_fail("encoder.sigmas", "expected a nonempty array");
    }
    for (const auto& s : enc["sigmas"]) {
      const double sigma = number_at(s, "encoder.sigmas");
      if (sigma < 0 || !std::isfinite(sigma)) {
        config_fail("encoder.sigmas", "each sigma must be finite and >= 0");
      }
      cfg.sigmas.push_back(sigma);
    }
    const std::string mode = enc.value("center_mode", "quantized");
    if (mode == "quantized") {
      cfg.encoder.center = GaussianCenter::Quantized;
    } else if (mode == "exact") {
      cfg.encoder.center = GaussianCenter::Exact;
    } else {
      config_fail("encoder.center_mode", "expected 'quantized' or 'exact'");
    }
    if (enc.contains("threshold")) {
      cfg.encoder.threshold = number_at(enc["threshold"], "encoder.threshold");
      if (cfg.encoder.threshold < 0 || cfg.encoder.threshold > 1) {
        config_fail("encoder.threshold", "must lie in [0, 1]");
      }
    }
    if (enc.contains("radius")) {
      cfg.encoder.gaussian.radius = static_cast<Eigen::Index>(
          number_at(enc["radius"], "encoder.radius"));
    }
  } else {
    config_fail("encoder.kind", "expected 'expected' or 'gaussian'");
  }

  if (!doc.contains("decoders") || !doc["decoders"].is_array() ||
      doc["decoders"].empty()) {
    config_fail("decoders", "expected a nonempty array");
  }
  for (const auto& d : doc["decoders"]) {
    require_keys(d, "decoders[]", {"kind", "threshold", "k", "renormalize"});
    DecoderSpec spec;
    const std::string kind = d.value("kind", "");
    if (kind == "argmax") {
      spec.kind = DecoderSpec::Kind::Argmax;
    } else if (kind == "bias_corrected") {
      spec.kind = DecoderSpec::Kind::BiasCorrected;
      if (d.contains("threshold")) {
        spec.threshold = number_at(d["threshold"], "decoders[].threshold");
      }
      if (spec.threshold < 0 || spec.threshold > 1) {
        config_fail("decoders[].threshold", "must lie in [0, 1]");
      }
    } else if (kind == "quarter_shift") {
      spec.kind = DecoderSpec::Kind::QuarterShift;
    } else if (kind == "topk") {
      spec.kind = DecoderSpec::Kind::TopK;
      if (!d.contains("k")) {
        config_fail("decoders[].k", "missing");
      }
      const auto parse_k = [&](const json& kj) {
        const double k = number_at(kj, "decoders[].k");
        if (k < 1 || k != std::floor(k) ||
            k > static_cast<double>(cfg.grid.width * cfg.grid.height)) {
          config_fail("decoders[].k",
                      "each k must be an integer in [1, width*height]");
        }
        spec.ks.push_back(static_cast<Eigen::Index>(k));
      };
      if (d["k"].is_array()) {
        if (d["k"].empty()) {
          config_fail("decoders[].k", "expected a nonempty array");
        }
        for (const auto& kj : d["k"]) {
          parse_k(kj);
        }
      } else {
        parse_k(d["k"]);
      }
      spec.renormalize = d.value("renormalize", true);
    } else {
      config_fail("decoders[].kind",
                  "expected argmax, bias_corrected, quarter_shift, or topk");
    }
    cfg.decoders.push_back(std::move(spec));
  }

  if (doc.contains("predictor")) {
    const auto& pred = doc["predictor"];
    require_keys(pred, "predictor", {"kind", "level", "sigma", "stages"});
    const std::string kind = pred.value("kind", "");
    const auto parse_stage = [&](const json& sj,
                                 const std::string& field) {
      require_keys(sj, field, {"kind", "level", "sigma"});
      PredictorStage<double> stage;
      const std::string sk = sj.value("kind", "");
      if (sk == "additive_noise") {
        stage.kind = PredictorStage<double>::Kind::AdditiveNoise;
        if (!sj.contains("level")) {
          config_fail(field + ".level", "missing");
        }
        stage.amount = number_at(sj["level"], field + ".level");
      } else if (sk == "blur") {
        stage.kind = PredictorStage<double>::Kind::Blur;
        if (!sj.contains("sigma")) {
          config_fail(field + ".sigma", "missing");
        }
        stage.amount = number_at(sj["sigma"], field + ".sigma");
      } else {
        config_fail(field + ".kind", "expected 'additive_noise' or 'blur'");
      }
      if (stage.amount < 0 || !std::isfinite(stage.amount)) {
        config_fail(field, "amount must be finite and >= 0");
      }
      return stage;
    };
    if (kind == "perfect") {
      // no stages
    } else if (kind == "additive_noise" || kind == "blur") {
      cfg.predictor_stages.push_back(parse_stage(pred, "predictor"));
    } else if (kind == "composite") {
      if (!pred.contains("stages") || !pred["stages"].is_array() ||
          pred["stages"].empty()) {
        config_fail("predictor.stages", "expected a nonempty array");
      }
      for (const auto& sj : pred["stages"]) {
        cfg.predictor_stages.push_back(parse_stage(sj, "predictor.stages[]"));
      }
    } else {
      config_fail("predictor.kind",
                  "expected perfect, additive_noise, blur, or composite");
    }
  }

  if (doc.contains("annotator")) {
    require_keys(doc["annotator"], "annotator", {"kind"});
    const std::string kind = doc["annotator"].value("kind", "");
    if (kind == "none") {
      cfg.annotator.reset();
    } else if (kind == "unbiased_stochastic") {
      cfg.annotator = AnnotatorKind::UnbiasedStochastic;
    } else if (kind == "deterministic_round") {
      cfg.annotator = AnnotatorKind::DeterministicRound;
    } else {
      config_fail("annotator.kind",
                  "expected none, unbiased_stochastic, or deterministic_round");
    }
  }

  if (doc.contains("metrics")) {
    const auto& m = doc["metrics"];
    require_keys(m, "metrics", {"normalization", "alphas", "per_image_mean"});
    if (m.contains("normalization")) {
      const auto& n = m["normalization"];
      require_keys(n, "metrics.normalization",
                   {"kind", "d", "width", "height", "indices"});
      const std::string kind = n.value("kind", "");
      if (kind == "fixed") {
        if (!n.contains("d")) {
          config_fail("metrics.normalization.d", "missing");
        }
        const double d = number_at(n["d"], "metrics.normalization.d");
        if (!(d > 0) || !std::isfinite(d)) {
          config_fail("metrics.normalization.d", "must be positive");
        }
        cfg.metrics.normalization = Normalization::fixed_distance(d);
      } else if (kind == "bbox_sqrt") {
        if (!n.contains("width") || !n.contains("height")) {
          config_fail("metrics.normalization", "width and height required");
        }
        const double w = number_at(n["width"], "metrics.normalization.width");
        const double h =
            number_at(n["height"], "metrics.normalization.height");
        if (!(w > 0) || !(h > 0)) {
          config_fail("metrics.normalization", "bbox sides must be positive");
        }
        cfg.metrics.normalization = Normalization::bbox_sqrt(w, h);
      } else if (kind == "inter_ocular" || kind == "inter_pupil") {
        if (!n.contains("indices") || !n["indices"].is_array() ||
            n["indices"].size() != 2) {
          config_fail("metrics.normalization.indices",
                      "expected a pair of landmark indices");
        }
        const auto i = n["indices"][0].get<std::size_t>();
        const auto j = n["indices"][1].get<std::size_t>();
        cfg.metrics.normalization = kind == "inter_ocular"
                                        ? Normalization::inter_ocular(i, j)
                                        : Normalization::inter_pupil(i, j);
      } else {
        config_fail("metrics.normalization.kind",
                    "expected fixed, bbox_sqrt, inter_ocular, or inter_pupil");
      }
    }
    if (m.contains("alphas")) {
      if (!m["alphas"].is_array() || m["alphas"].empty()) {
        config_fail("metrics.alphas", "expected a nonempty array");
      }
      for (const auto& a : m["alphas"]) {
        const double alpha = number_at(a, "metrics.alphas");
        if (alpha < 0 || alpha > 1) {
          config_fail("metrics.alphas", "each alpha must lie in [0, 1]");
        }
        cfg.metrics.alphas.push_back(alpha);
      }
    }
    cfg.metrics.per_image_mean = m.value("per_image_mean", false);
  }
  if (cfg.metrics.alphas.empty()) {
    cfg.metrics.alphas.push_back(0.5);
  }

  if (doc.contains("output")) {
    const auto& out = doc["output"];
    require_keys(out, "output", {"path", "format"});
    if (!out.contains("path") || !out["path"].is_string()) {
      config_fail("output.path", "expected a string");
    }
    cfg.output.path = out["path"].get<std::string>();
    const std::string format = out.value("format", "csv");
    if (format == "csv") {
      cfg.output.format = ReportFormat::Csv;
    } else if (format == "json") {
      cfg.output.format = ReportFormat::Json;
    } else {
      config_fail("output.format", "expected 'csv' or 'json'");
    }
  }

  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_experiment_config(doc);
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["seed"] = cfg.seed;
  doc["trials"] = cfg.trials;
  doc["grid"] = {{"width", cfg.grid.width}, {"height", cfg.grid.height}};
  doc["strides"] = cfg.strides;
  if (cfg.encoder.kind == BaseEncoder<double>::Kind::Expected) {
    doc["encoder"] = {{"kind", "expected"}};
  } else {
    doc["encoder"] = {
        {"kind", "gaussian"},
        {"sigmas", cfg.sigmas},
        {"center_mode", cfg.encoder.center == GaussianCenter::Quantized
                            ? "quantized"
                            : "exact"},
        {"threshold", cfg.encoder.threshold}};
    if (cfg.encoder.gaussian.radius >= 0) {
      doc["encoder"]["radius"] = cfg.encoder.gaussian.radius;
    }
  }
  doc["decoders"] = json::array();
  for (const auto& spec : cfg.decoders) {
    switch (spec.kind) {
      case DecoderSpec::Kind::Argmax:
        doc["decoders"].push_back({{"kind", "argmax"}});
        break;
      case DecoderSpec::Kind::BiasCorrected:
        doc["decoders"].push_back(
            {{"kind", "bias_corrected"}, {"threshold", spec.threshold}});
        break;
      case DecoderSpec::Kind::QuarterShift:
        doc["decoders"].push_back({{"kind", "quarter_shift"}});
        break;
      case DecoderSpec::Kind::TopK: {
        json ks = json::array();
        for (const auto k : spec.ks) {
          ks.push_back(k);
        }
        doc["decoders"].push_back(
            {{"kind", "topk"}, {"k", ks}, {"renormalize", spec.renormalize}});
        break;
      }
    }
  }
  if (cfg.predictor_stages.empty()) {
    doc["predictor"] = {{"kind", "perfect"}};
  } else {
    json stages = json::array();
    for (const auto& stage : cfg.predictor_stages) {
      if (stage.kind == PredictorStage<double>::Kind::AdditiveNoise) {
        stages.push_back({{"kind", "additive_noise"}, {"level", stage.amount}});
      } else {
        stages.push_back({{"kind", "blur"}, {"sigma", stage.amount}});
      }
    }
    doc["predictor"] = {{"kind", "composite"}, {"stages", stages}};
  }
  doc["annotator"] = {{"kind", annotator_label(cfg)}};
  json norm;
  switch (cfg.metrics.normalization.kind) {
    case Normalization::Kind::FixedDistance:
      norm = {{"kind", "fixed"}, {"d", cfg.metrics.normalization.distance}};
      break;
    case Normalization::Kind::BBoxSqrt:
      norm = {{"kind", "bbox_sqrt"},
              {"width", cfg.metrics.normalization.bbox_width},
              {"height", cfg.metrics.normalization.bbox_height}};
      break;
    case Normalization::Kind::InterOcular:
    case Normalization::Kind::InterPupil:
      norm = {{"kind", cfg.metrics.normalization.kind ==
                               Normalization::Kind::InterOcular
                           ? "inter_ocular"
                           : "inter_pupil"},
              {"indices", {cfg.metrics.normalization.indices.first,
                           cfg.metrics.normalization.indices.second}}};
      break;
  }
  doc["metrics"] = {{"normalization", norm},
                    {"alphas", cfg.metrics.alphas},
                    {"per_image_mean", cfg.metrics.per_image_mean}};
  // The output location is a runtime detail, not part of the experiment:
  // leaving it out keeps the echo and hash stable across --out overrides.
  return doc;
}

ExperimentReport run_sweep(const ExperimentConfig& cfg, int workers) {
  const auto decoders = flatten_decoders(cfg);
  const double norm_d = sweep_normalization_distance(cfg.metrics);
  const std::size_t n_alphas = cfg.metrics.alphas.size();

  ExperimentReport report;
  report.alphas = cfg.metrics.alphas;
  report.seed = cfg.seed;
  report.version = std::string(kVersion);
  report.config_echo = experiment_config_to_json(cfg);
  report.config_hash = config_hash(report.config_echo);

  // One pass per (stride, sigma); all decoders share each trial's heatmap.
  std::vector<std::optional<double>> sigma_axis;
  if (cfg.encoder.kind == BaseEncoder<double>::Kind::Gaussian) {
    for (const double s : cfg.sigmas) {
      sigma_axis.emplace_back(s);
    }
  } else {
    sigma_axis.emplace_back(std::nullopt);
  }

  const std::uint64_t blocks = (cfg.trials + kBlockSize - 1) / kBlockSize;
  const std::string pred_label = predictor_label(cfg);
  const std::string annot_label = annotator_label(cfg);

  for (const double stride : cfg.strides) {
    for (const auto& sigma : sigma_axis) {
      PredictorConfig<double> predictor;
      predictor.base = cfg.encoder;
      if (sigma) {
        predictor.base.gaussian.sigma = *sigma;
      }
      predictor.stages = cfg.predictor_stages;

      std::vector<std::vector<Accumulator>> partials(
          blocks, std::vector<Accumulator>(decoders.size(),
                                           Accumulator(n_alphas)));

      const auto run_block = [&](std::uint64_t block) {
        const std::uint64_t begin = block * kBlockSize;
        const std::uint64_t end =
            std::min(cfg.trials, begin + kBlockSize);
        auto& accs = partials[block];
        for (std::uint64_t trial = begin; trial < end; ++trial) {
          RngStream rng(cfg.seed, trial);
          // Ground truth with a one-cell margin so every activation set
          // stays in bounds, annotation shifts included.
          const double wx = static_cast<double>(cfg.grid.width - 3);
          const double wy = static_cast<double>(cfg.grid.height - 3);
          const Point2d gt{(1.0 + rng.uniform() * wx) * stride,
                           (1.0 + rng.uniform() * wy) * stride};
          Point2d encoded_point = gt;
          if (cfg.annotator) {
            encoded_point = annotate(gt, *cfg.annotator, rng);
          }
          const Heatmapd h =
              predict(encoded_point, predictor, cfg.grid, stride, rng);
          for (std::size_t d = 0; d < decoders.size(); ++d) {
            const Point2d decoded = decode_with(decoders[d], h);
            const Point2d delta = decoded - gt;
            const double err = delta.norm();
            auto& acc = accs[d];
            acc.sum_err += err;
            acc.max_err = std::max(acc.max_err, err);
            acc.sum_dx += delta.x();
            acc.sum_dy += delta.y();
            for (std::size_t a = 0; a < n_alphas; ++a) {
              if (err <= cfg.metrics.alphas[a] * norm_d) {
                ++acc.hits[a];
              }
            }
          }
        }
      };

      const int pool = std::max(1, workers);
      if (pool == 1 || blocks == 1) {
        for (std::uint64_t b = 0; b < blocks; ++b) {
          run_block(b);
        }
      } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::thread> threads;
        const auto n_threads =
            std::min<std::uint64_t>(static_cast<std::uint64_t>(pool), blocks);
        threads.reserve(n_threads);
        for (std::uint64_t t = 0; t < n_threads; ++t) {
          threads.emplace_back([&] {
            for (std::uint64_t b = next.fetch_add(1); b < blocks;
                 b = next.fetch_add(1)) {
              run_block(b);
            }
          });
        }
        for (auto& t : threads) {
          t.join();
        }
      }

      // Fixed block order keeps float accumulation worker-independent.
      for (std::size_t d = 0; d < decoders.size(); ++d) {
        Accumulator total(n_alphas);
        for (std::uint64_t b = 0; b < blocks; ++b) {
          total.merge(partials[b][d]);
        }
        SweepRow row;
        row.stride = stride;
        row.sigma = sigma;
        row.encoder = cfg.encoder.kind == BaseEncoder<double>::Kind::Expected
                          ? "expected"
                          : "gaussian";
        row.predictor = pred_label;
        row.annotator = annot_label;
        row.decoder = decoders[d].label;
        row.k = decoders[d].k;
        row.trials = cfg.trials;
        const double dn = static_cast<double>(cfg.trials);
        row.mean_err = total.sum_err / dn;
        row.max_err = total.max_err;
        row.bias_x = total.sum_dx / dn;
        row.bias_y = total.sum_dy / dn;
        row.nme = 100.0 * row.mean_err / norm_d;
        for (std::size_t a = 0; a < n_alphas; ++a) {
          row.pck.push_back(static_cast<double>(total.hits[a]) / dn);
        }
        row.config_key = "s=" + fmt_double(stride) +
                         "|sigma=" + (sigma ? fmt_double(*sigma) : "-") +
                         "|dec=" + decoders[d].label;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

EvaluationReport evaluate_predictions(const std::filesystem::path& pred_path,
                                      const std::filesystem::path& gt_path,
                                      const MetricConfig& metrics) {
  const auto preds =
      ingest_landmarks(pred_path, landmark_format_for(pred_path));
  const auto gts = ingest_landmarks(gt_path, landmark_format_for(gt_path));
  if (preds.size() != gts.size()) {
    throw ShapeMismatch("record count mismatch: " +
                        std::to_string(preds.size()) + " predictions vs " +
                        std::to_string(gts.size()) + " ground truth");
  }

  EvaluationReport report;
  report.alphas = metrics.alphas.empty() ? std::vector<double>{0.5}
                                         : metrics.alphas;
  report.per_image_mean = metrics.per_image_mean;
  report.pooled_pck.assign(report.alphas.size(), 0.0);

  double pooled_err_over_d = 0;
  double pooled_err = 0;
  std::vector<std::uint64_t> pooled_hits(report.alphas.size(), 0);
  double per_image_nme_sum = 0;
  std::vector<double> per_image_pck_sum(report.alphas.size(), 0.0);

  for (std::size_t r = 0; r < preds.size(); ++r) {
    if (preds[r].landmarks.size() != gts[r].landmarks.size()) {
      throw ShapeMismatch("record " + std::to_string(r + 1) +
                          ": landmark count mismatch");
    }
    LandmarkSetPair<double> pair;
    pair.predictions = preds[r].landmarks;
    pair.ground_truth = gts[r].landmarks;
    pair.visibility = gts[r].visibility;

    Normalization norm = metrics.normalization;
    if (norm.kind == Normalization::Kind::BBoxSqrt && gts[r].bbox) {
      norm = Normalization::bbox_sqrt((*gts[r].bbox)(2), (*gts[r].bbox)(3));
    }
    const double d = detail::normalization_distance(pair, norm);

    EvaluationRow row;
    row.image_id = gts[r].image_id;
    row.nme = nme(pair, norm);
    double err_sum = 0;
    for (std::size_t i = 0; i < pair.predictions.size(); ++i) {
      if (!detail::visible(pair, i)) {
        continue;
      }
      ++row.visible;
      const double err = (pair.predictions[i] - pair.ground_truth[i]).norm();
      err_sum += err;
      pooled_err += err;
      pooled_err_over_d += err / d;
      for (std::size_t a = 0; a < report.alphas.size(); ++a) {
        if (err <= report.alphas[a] * d) {
          ++pooled_hits[a];
        }
      }
    }
    row.mean_err = err_sum / static_cast<double>(row.visible);
    for (std::size_t a = 0; a < report.alphas.size(); ++a) {
      row.pck.push_back(pck(pair, d, report.alphas[a]));
      per_image_pck_sum[a] += row.pck.back();
    }
    per_image_nme_sum += row.nme;
    report.total_visible += row.visible;
    report.rows.push_back(std::move(row));
  }

  const double n_records = static_cast<double>(report.rows.size());
  if (report.total_visible > 0) {
    report.pooled_mean_err =
        pooled_err / static_cast<double>(report.total_visible);
  }
  if (metrics.per_image_mean) {
    report.pooled_nme = per_image_nme_sum / n_records;
    for (std::size_t a = 0; a < report.alphas.size(); ++a) {
      report.pooled_pck[a] = per_image_pck_sum[a] / n_records;
    }
  } else {
    if (report.total_visible == 0) {
      throw EmptyEvaluation("no visible landmarks to evaluate");
    }
    report.pooled_nme = 100.0 * pooled_err_over_d /
                        static_cast<double>(report.total_visible);
    for (std::size_t a = 0; a < report.alphas.size(); ++a) {
      report.pooled_pck[a] = static_cast<double>(pooled_hits[a]) /
                             static_cast<double>(report.total_visible);
    }
  }
  return report;
}

}  // namespace subpix
