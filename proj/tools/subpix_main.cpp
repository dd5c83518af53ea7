#include <subpix/experiment.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using subpix::ExperimentConfig;
using subpix::ReportFormat;

int run_command(const std::string& config_path, std::uint64_t seed,
                bool seed_given, int workers, const std::string& out,
                const std::string& format) {
  ExperimentConfig cfg = subpix::load_experiment_config(config_path);
  if (seed_given) {
    cfg.seed = seed;
  }
  if (!out.empty()) {
    cfg.output.path = out;
  }
  if (!format.empty()) {
    cfg.output.format =
        format == "json" ? ReportFormat::Json : ReportFormat::Csv;
  }
  if (cfg.output.path.empty()) {
    throw subpix::ConfigError(
        "no output path: set output.path in the config or pass --out");
  }

  const auto report = subpix::run_sweep(cfg, workers);
  const std::string text =
      cfg.output.format == ReportFormat::Csv
          ? subpix::report_to_csv(report)
          : subpix::report_to_json(report).dump(2) + "\n";
  subpix::write_text_atomic(cfg.output.path, text);
  std::cout << "wrote " << report.rows.size() << " rows to "
            << cfg.output.path.string() << " (config " << report.config_hash
            << ")\n";
  return 0;
}

int evaluate_command(const std::string& pred, const std::string& gt,
                     const std::string& norm, double fixed_d,
                     std::vector<std::size_t> indices, double bbox_w,
                     double bbox_h, std::vector<double> alphas,
                     bool per_image_mean, const std::string& out,
                     const std::string& format) {
  subpix::MetricConfig metrics;
  if (norm == "fixed") {
    metrics.normalization = subpix::Normalization::fixed_distance(fixed_d);
  } else if (norm == "bbox") {
    // Per-record bboxes take precedence when the ground-truth file has them.
    metrics.normalization = subpix::Normalization::bbox_sqrt(
        bbox_w > 0 ? bbox_w : 1.0, bbox_h > 0 ? bbox_h : 1.0);
  } else if (norm == "interocular" || norm == "interpupil") {
    if (indices.size() != 2) {
      std::cerr << "--indices i j is required for " << norm << "\n";
      return 1;
    }
    metrics.normalization =
        norm == "interocular"
            ? subpix::Normalization::inter_ocular(indices[0], indices[1])
            : subpix::Normalization::inter_pupil(indices[0], indices[1]);
  }
  metrics.alphas = alphas;
  metrics.per_image_mean = per_image_mean;

  const auto report = subpix::evaluate_predictions(pred, gt, metrics);
  const std::string text = format == "json"
                               ? subpix::evaluation_to_json(report).dump(2) + "\n"
                               : subpix::evaluation_to_csv(report);
  if (out.empty()) {
    std::cout << text;
  } else {
    subpix::write_text_atomic(out, text);
  }
  std::fprintf(stderr, "pooled NME %.6g%% over %zu landmarks\n",
               report.pooled_nme, report.total_visible);
  return 0;
}

int verify_command(std::uint64_t seed, const std::string& out) {
  const auto verdicts = subpix::run_verification(seed);
  for (const auto& v : verdicts) {
    std::printf("[%s] %-28s observed=%-13.6g expected=%-13.6g tol=%-10.3g "
                "n=%llu %s\n",
                v.pass ? "PASS" : "FAIL", v.name.c_str(), v.observed,
                v.expected, v.tolerance,
                static_cast<unsigned long long>(v.samples), v.note.c_str());
  }
  const bool ok = subpix::verification_passed(verdicts);
  if (!out.empty()) {
    subpix::write_text_atomic(
        out, subpix::verdicts_to_json(verdicts).dump(2) + "\n");
  }
  std::printf("verification %s\n", ok ? "PASSED" : "FAILED");
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized-rounding heatmap quantization harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a configured sweep");
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
  std::string format;
  run->add_option("--config", config_path, "experiment config JSON")
      ->required();
  auto* seed_opt = run->add_option("--seed", seed, "override config seed");
  run->add_option("--workers", workers, "worker thread count")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out, "override output path");
  run->add_option("--format", format, "override output format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* evaluate = app.add_subcommand(
      "evaluate", "score prediction files against ground truth");
  std::string pred;
  std::string gt;
  std::string norm = "fixed";
  double fixed_d = 1.0;
  std::vector<std::size_t> indices;
  double bbox_w = 0;
  double bbox_h = 0;
  std::vector<double> alphas{0.5};
  bool per_image_mean = false;
  std::string eval_out;
  std::string eval_format = "csv";
  evaluate->add_option("--pred", pred, "predictions file (.csv or .json)")
      ->required();
  evaluate->add_option("--gt", gt, "ground-truth file (.csv or .json)")
      ->required();
  evaluate->add_option("--norm", norm, "normalization kind")
      ->check(CLI::IsMember({"fixed", "bbox", "interocular", "interpupil"}));
  evaluate->add_option("--d", fixed_d, "fixed normalization distance, px");
  evaluate->add_option("--indices", indices,
                       "two gt landmark indices for inter-ocular/pupil")
      ->expected(2);
  evaluate->add_option("--bbox-width", bbox_w, "fallback bbox width");
  evaluate->add_option("--bbox-height", bbox_h, "fallback bbox height");
  evaluate->add_option("--alpha", alphas, "PCK thresholds");
  evaluate->add_flag("--per-image-mean", per_image_mean,
                     "average per-image NMEs instead of pooling landmarks");
  evaluate->add_option("--out", eval_out, "write report here (else stdout)");
  evaluate->add_option("--format", eval_format, "report format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* verify =
      app.add_subcommand("verify", "run the codec verification suite");
  std::uint64_t verify_seed = 20260809;
  std::string verify_out;
  verify->add_option("--seed", verify_seed, "suite seed");
  verify->add_option("--out", verify_out, "write verdicts JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the usage error
    return rc == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) {
      return run_command(config_path, seed, seed_opt->count() > 0, workers,
                         out, format);
    }
    if (evaluate->parsed()) {
      return evaluate_command(pred, gt, norm, fixed_d, indices, bbox_w, bbox_h,
                              alphas, per_image_mean, eval_out, eval_format);
    }
    return verify_command(verify_seed, verify_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
