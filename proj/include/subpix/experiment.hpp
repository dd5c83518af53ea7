#pragma once

#include <subpix/metrics.hpp>
#include <subpix/oracles.hpp>
#include <subpix/predict.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace subpix {

inline constexpr std::string_view kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One decoder column of the sweep. TopK entries expand to one row per k.
struct DecoderSpec {
  enum class Kind { Argmax, BiasCorrected, QuarterShift, TopK };

  Kind kind = Kind::Argmax;
  double threshold = 0.5;           // BiasCorrected
  std::vector<Eigen::Index> ks;     // TopK
  bool renormalize = true;          // TopK
};

struct MetricConfig {
  Normalization normalization = Normalization::fixed_distance(1.0);
  std::vector<double> alphas;
  bool per_image_mean = false;
};

enum class ReportFormat { Csv, Json };

struct OutputConfig {
  std::filesystem::path path;
  ReportFormat format = ReportFormat::Csv;
};

/// Full sweep description, parsed from a single JSON document.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::uint64_t trials = 1;
  GridShape grid{16, 16};
  std::vector<double> strides;
  BaseEncoder<double> encoder;
  std::vector<double> sigmas;  // gaussian encoder sweep; empty otherwise
  std::vector<DecoderSpec> decoders;
  std::vector<PredictorStage<double>> predictor_stages;
  std::optional<AnnotatorKind> annotator;
  MetricConfig metrics;
  OutputConfig output;
};

/// Rejects unknown keys anywhere in the document; error messages name the
/// offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Canonical JSON echo of a parsed config (used for the report hash).
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

struct SweepRow {
  std::string config_key;
  double stride = 0;
  std::optional<double> sigma;
  std::string encoder;
  std::string predictor;
  std::string annotator;
  std::string decoder;
  Eigen::Index k = 0;  // 0 when the decoder has no k
  std::uint64_t trials = 0;
  double mean_err = 0;
  double max_err = 0;
  double bias_x = 0;
  double bias_y = 0;
  double nme = 0;
  std::vector<double> pck;  // parallel to metric alphas
};

struct ExperimentReport {
  std::vector<double> alphas;
  std::vector<SweepRow> rows;
  std::uint64_t seed = 0;
  std::string version;
  std::string config_hash;
  nlohmann::json config_echo;
};

/// Runs the full cross-product sweep. Reports are identical for any worker
/// count: trial streams are keyed by (seed, trial index) and per-block
/// partial sums are combined in fixed block order.
ExperimentReport run_sweep(const ExperimentConfig& cfg, int workers = 1);

std::string report_to_csv(const ExperimentReport& report);
nlohmann::json report_to_json(const ExperimentReport& report,
                              bool with_timestamp = true);

/// Offline evaluation of prediction files against ground-truth files.
struct EvaluationRow {
  std::string image_id;
  std::size_t visible = 0;
  double mean_err = 0;
  double nme = 0;
  std::vector<double> pck;
};

struct EvaluationReport {
  std::vector<double> alphas;
  std::vector<EvaluationRow> rows;
  double pooled_nme = 0;
  double pooled_mean_err = 0;
  std::vector<double> pooled_pck;
  std::size_t total_visible = 0;
  bool per_image_mean = false;
};

EvaluationReport evaluate_predictions(const std::filesystem::path& pred_path,
                                      const std::filesystem::path& gt_path,
                                      const MetricConfig& metrics);

std::string evaluation_to_csv(const EvaluationReport& report);
nlohmann::json evaluation_to_json(const EvaluationReport& report);

/// Verdict serialization for the verify subcommand.
nlohmann::json verdicts_to_json(const std::vector<OracleVerdict>& verdicts);

/// Row-major float64 heatmap schema used inside JSON reports.
nlohmann::json heatmap_to_json(const Heatmapd& h);
Heatmapd heatmap_from_json(const nlohmann::json& j);

/// FNV-1a 64 over the canonical dump, as a 16-digit hex string.
std::string config_hash(const nlohmann::json& canonical);

/// Writes via a temp file plus atomic rename; partial output never lands at
/// the destination.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);

}  // namespace subpix
