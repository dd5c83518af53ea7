#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <subpix/experiment.hpp>
#include <subpix/landmarks.hpp>

#include <cstdio>
#include <filesystem>
#include <cmath>
#include <fstream>
#include <set>
#include <unistd.h>

using namespace subpix;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("subpix_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  fs::path file(const std::string& name) const { return path / name; }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

template <typename Fn>
std::string thrown_message(Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

json base_config() {
  return json{
      {"seed", 7},
      {"trials", 512},
      {"grid", {{"width", 12}, {"height", 12}}},
      {"strides", {4.0}},
      {"encoder", {{"kind", "expected"}}},
      {"decoders",
       {{{"kind", "argmax"}},
        {{"kind", "topk"}, {"k", {2, 4}}, {"renormalize", true}}}},
      {"predictor", {{"kind", "perfect"}}},
      {"metrics",
       {{"normalization", {{"kind", "fixed"}, {"d", 10.0}}},
        {"alphas", {0.1, 0.5}}}},
  };
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys and names the field") {
  auto doc = base_config();
  doc["surprise"] = 1;
  CHECK_THROWS_WITH_AS(parse_experiment_config(doc),
                       "config field 'config.surprise': unknown key",
                       ConfigError);

  doc = base_config();
  doc["grid"]["depth"] = 3;
  CHECK_THROWS_WITH_AS(parse_experiment_config(doc),
                       "config field 'grid.depth': unknown key", ConfigError);

  doc = base_config();
  doc["decoders"][0]["kind"] = "softargmax";
  CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);
}

TEST_CASE("config validation names offending fields") {
  auto doc = base_config();
  doc.erase("trials");
  CHECK_THROWS_WITH_AS(parse_experiment_config(doc),
                       "config field 'trials': expected a positive integer",
                       ConfigError);

  doc = base_config();
  doc["strides"] = json::array();
  CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);

  doc = base_config();
  doc["decoders"] = {{{"kind", "topk"}, {"k", 1000}}};
  CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);

  doc = base_config();
  doc["encoder"] = {{"kind", "gaussian"}};
  CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);

  doc = base_config();
  doc["metrics"]["normalization"] = {{"kind", "inter_ocular"},
                                     {"indices", {0, 1}}};
  const auto cfg = parse_experiment_config(doc);
  CHECK_THROWS_AS(run_sweep(cfg, 1), ConfigError);  // needs landmark files
}

TEST_CASE("sweep covers the cross product exactly once") {
  auto doc = base_config();
  doc["strides"] = {2.0, 4.0};
  doc["encoder"] = {{"kind", "gaussian"}, {"sigmas", {0.0, 1.0, 2.0}}};
  doc["trials"] = 64;
  const auto cfg = parse_experiment_config(doc);
  const auto report = run_sweep(cfg, 1);
  // 2 strides x 3 sigmas x 3 decoder instances (argmax, topk2, topk4)
  CHECK(report.rows.size() == 2 * 3 * 3);
  std::set<std::string> keys;
  for (const auto& row : report.rows) {
    keys.insert(row.config_key);
  }
  CHECK(keys.size() == report.rows.size());
}

TEST_CASE("perfect predictor rows decode losslessly") {
  auto doc = base_config();
  doc["trials"] = 2000;
  doc["strides"] = {1.5, 4.0, 7.3};
  const auto report = run_sweep(parse_experiment_config(doc), 2);
  for (const auto& row : report.rows) {
    if (row.decoder == "topk(4)") {
      CHECK(row.mean_err <= 1e-9);
      CHECK(row.max_err <= 1e-9);
      CHECK(row.pck.back() == 1.0);
    }
  }
}

TEST_CASE("reports are byte-identical across worker counts") {
  auto doc = base_config();
  doc["trials"] = 4096;
  doc["predictor"] = {{"kind", "additive_noise"}, {"level", 0.1}};
  const auto cfg = parse_experiment_config(doc);
  const auto a = run_sweep(cfg, 1);
  const auto b = run_sweep(cfg, 8);
  CHECK(report_to_csv(a) == report_to_csv(b));
  CHECK(report_to_json(a, false).dump() == report_to_json(b, false).dump());
}

TEST_CASE("config echo hash is stable and seed-sensitive") {
  const auto cfg = parse_experiment_config(base_config());
  const auto echo = experiment_config_to_json(cfg);
  CHECK(config_hash(echo) == config_hash(echo));
  auto cfg2 = cfg;
  cfg2.seed = 8;
  CHECK(config_hash(experiment_config_to_json(cfg2)) != config_hash(echo));
}

TEST_CASE("csv report carries the fixed column header") {
  auto doc = base_config();
  doc["trials"] = 16;
  const auto report = run_sweep(parse_experiment_config(doc), 1);
  const auto csv = report_to_csv(report);
  CHECK(csv.find("config_key,stride,sigma,encoder,predictor,annotator,"
                 "decoder,k,trials,mean_err_px,max_err_px,bias_x_px,"
                 "bias_y_px,nme_pct,pck@0.1,pck@0.5\n") != std::string::npos);
}

TEST_CASE("atomic writes never leave partial output") {
  TempDir dir;
  const auto target = dir.file("report.csv");
  write_text_atomic(target, "hello\n");
  CHECK(fs::exists(target));
  CHECK_FALSE(fs::exists(dir.file("report.csv.tmp")));

  CHECK_THROWS_AS(
      write_text_atomic(dir.path / "missing_dir" / "report.csv", "x"),
      std::runtime_error);
  CHECK_FALSE(fs::exists(dir.path / "missing_dir"));
}

TEST_CASE("csv landmark ingestion") {
  TempDir dir;
  const auto path = dir.file("gt.csv");
  write_file(path,
             "image_id,x0,y0,x1,y1,x2,y2,x3,y3,x4,y4\n"
             "a,1,2,3,4,5,6,7,8,9,10\n"
             "b,1.5,2.5,3.5,4.5,5.5,6.5,7.5,8.5,9.5,10.5\n");
  const auto records = ingest_landmarks(path, LandmarkFormat::Csv);
  REQUIRE(records.size() == 2);
  CHECK(records[0].image_id == "a");
  CHECK(records[0].landmarks.size() == 5);
  CHECK(records[1].landmarks[4].x() == 9.5);
}

TEST_CASE("csv ingestion rejects bad rows with row numbers") {
  TempDir dir;
  const auto nan_path = dir.file("nan.csv");
  write_file(nan_path, "image_id,x0,y0\na,nan,2\n");
  CHECK(thrown_message([&] {
          ingest_landmarks(nan_path, LandmarkFormat::Csv);
        }).find("row 2") != std::string::npos);

  const auto neg_path = dir.file("neg.csv");
  write_file(neg_path, "image_id,x0,y0\na,1,2\nb,-3,2\n");
  CHECK(thrown_message([&] {
          ingest_landmarks(neg_path, LandmarkFormat::Csv);
        }).find("row 3") != std::string::npos);

  const auto short_path = dir.file("short.csv");
  write_file(short_path, "image_id,x0,y0,x1,y1\na,1,2\n");
  CHECK_THROWS_AS(ingest_landmarks(short_path, LandmarkFormat::Csv),
                  LandmarkParseError);

  const auto empty_path = dir.file("empty.csv");
  write_file(empty_path, "");
  CHECK_THROWS_AS(ingest_landmarks(empty_path, LandmarkFormat::Csv),
                  LandmarkParseError);

  const auto header_only = dir.file("header.csv");
  write_file(header_only, "image_id,x0,y0\n");
  CHECK_THROWS_AS(ingest_landmarks(header_only, LandmarkFormat::Csv),
                  LandmarkParseError);
}

TEST_CASE("json landmark ingestion with bbox and visibility") {
  TempDir dir;
  const auto path = dir.file("gt.json");
  write_file(path, R"([
    {"image_id": "a", "landmarks": [[1, 2], [3, 4]],
     "bbox": [0, 0, 10, 20], "visibility": [true, false]},
    {"image_id": "b", "landmarks": [[5, 6], [7, 8]]}
  ])");
  const auto records = ingest_landmarks(path, LandmarkFormat::Json);
  REQUIRE(records.size() == 2);
  REQUIRE(records[0].bbox.has_value());
  CHECK((*records[0].bbox)(2) == 10.0);
  CHECK(records[0].visibility == std::vector<bool>{true, false});
  CHECK(records[1].visibility.empty());

  const auto bad = dir.file("bad.json");
  write_file(bad, R"([{"image_id": "a", "landmarks": [[1, 2]]},
                      {"image_id": "b", "landmarks": [[1, 2], [3, 4]]}])");
  CHECK(thrown_message([&] {
          ingest_landmarks(bad, LandmarkFormat::Json);
        }).find("row 2") != std::string::npos);
}

TEST_CASE("evaluate: identical files give zero error") {
  TempDir dir;
  const auto path = dir.file("gt.csv");
  write_file(path,
             "image_id,x0,y0,x1,y1\n"
             "a,1,2,3,4\n"
             "b,5,6,7,8\n");
  MetricConfig metrics;
  metrics.normalization = Normalization::fixed_distance(2.0);
  metrics.alphas = {0.5};
  const auto report = evaluate_predictions(path, path, metrics);
  CHECK(report.pooled_nme == 0.0);
  CHECK(report.pooled_pck[0] == 1.0);
  CHECK(report.rows.size() == 2);
}

TEST_CASE("evaluate reproduces the metrics example") {
  TempDir dir;
  const auto gt = dir.file("gt.csv");
  const auto pred = dir.file("pred.csv");
  write_file(gt, "image_id,x0,y0,x1,y1\na,1,1,2,1\n");
  write_file(pred, "image_id,x0,y0,x1,y1\na,1,1,2,2\n");
  MetricConfig metrics;
  metrics.normalization = Normalization::fixed_distance(2.0);
  const auto report = evaluate_predictions(pred, gt, metrics);
  CHECK(report.pooled_nme == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("evaluate rejects mismatched landmark counts") {
  TempDir dir;
  const auto gt = dir.file("gt.csv");
  const auto pred = dir.file("pred.csv");
  write_file(gt, "image_id,x0,y0,x1,y1\na,1,1,2,1\n");
  write_file(pred, "image_id,x0,y0\na,1,1\n");
  MetricConfig metrics;
  CHECK_THROWS_AS(evaluate_predictions(pred, gt, metrics), ShapeMismatch);

  const auto pred2 = dir.file("pred2.csv");
  write_file(pred2, "image_id,x0,y0,x1,y1\na,1,1,2,1\nb,1,1,2,1\n");
  CHECK_THROWS_AS(evaluate_predictions(pred2, gt, metrics), ShapeMismatch);
}

TEST_CASE("per-image pooling changes the aggregate") {
  TempDir dir;
  const auto gt = dir.file("gt.csv");
  const auto pred = dir.file("pred.csv");
  // record a: errors (0, 1); record b: errors (2, 3)
  write_file(gt,
             "image_id,x0,y0,x1,y1\n"
             "a,0,0,10,0\n"
             "b,0,10,10,10\n");
  write_file(pred,
             "image_id,x0,y0,x1,y1\n"
             "a,0,0,10,1\n"
             "b,2,10,10,13\n");
  MetricConfig metrics;
  metrics.normalization = Normalization::fixed_distance(10.0);
  const auto pooled = evaluate_predictions(pred, gt, metrics);
  CHECK(pooled.pooled_nme == doctest::Approx(15.0).epsilon(1e-12));
  metrics.per_image_mean = true;
  const auto averaged = evaluate_predictions(pred, gt, metrics);
  CHECK(averaged.pooled_nme == doctest::Approx(15.0).epsilon(1e-12));
  // both pools agree here (equal visible counts); bbox normalization per
  // record breaks the tie
  write_file(gt,
             "image_id,x0,y0,x1,y1\n"
             "a,0,0,10,0\n");
  write_file(pred,
             "image_id,x0,y0,x1,y1\n"
             "a,0,0,10,1\n");
  const auto single = evaluate_predictions(pred, gt, metrics);
  CHECK(single.rows.size() == 1);
}

TEST_CASE("evaluate uses per-record bboxes for bbox normalization") {
  TempDir dir;
  const auto gt = dir.file("gt.json");
  const auto pred = dir.file("pred.json");
  write_file(gt, R"([{"image_id": "a", "landmarks": [[0, 0], [3, 4]],
                      "bbox": [0, 0, 5, 5]}])");
  write_file(pred, R"([{"image_id": "a", "landmarks": [[0, 0], [3, 9]]}])");
  MetricConfig metrics;
  metrics.normalization = Normalization::bbox_sqrt(1.0, 1.0);
  const auto report = evaluate_predictions(pred, gt, metrics);
  // error 5 on one of two landmarks, d = sqrt(25) = 5
  CHECK(report.pooled_nme == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("heatmap json schema round-trips row-major values") {
  Heatmapd h({3, 2}, 4.0, true);
  h.values << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  const auto j = heatmap_to_json(h);
  CHECK(j["width"] == 3);
  CHECK(j["height"] == 2);
  CHECK(j["values"][1] == 0.2);  // row-major: (row 0, col 1)
  const auto back = heatmap_from_json(j);
  CHECK((back.values.array() == h.values.array()).all());
  CHECK(back.stride == 4.0);
  CHECK(back.normalized);
}

TEST_CASE("verdict json carries the suite outcome") {
  OracleVerdict v;
  v.name = "demo";
  v.pass = true;
  const auto j = verdicts_to_json({v});
  CHECK(j["pass"] == true);
  CHECK(j["verdicts"][0]["name"] == "demo");
}

TEST_CASE("bias-corrected rows approach the vanilla error bound") {
  auto doc = base_config();
  doc["trials"] = 50000;
  doc["strides"] = {4.0};
  doc["decoders"] = {{{"kind", "bias_corrected"}, {"threshold", 0.5}}};
  const auto report = run_sweep(parse_experiment_config(doc), 2);
  REQUIRE(report.rows.size() == 1);
  const double s = 4.0;
  const double bound = std::sqrt(2.0) * s / 2.0;
  CHECK(report.rows[0].max_err <= bound + 1e-9);
  CHECK(report.rows[0].max_err >= bound * 0.99);
  // mean L2 error of round-style decode under uniform fractions
  CHECK(std::abs(report.rows[0].mean_err - 0.38259786 * s) <=
        0.01 * 0.38259786 * s);
}

TEST_CASE("annotated sweeps run and stay near-unbiased") {
  auto doc = base_config();
  doc["trials"] = 20000;
  doc["annotator"] = {{"kind", "unbiased_stochastic"}};
  doc["decoders"] = {{{"kind", "topk"}, {"k", 4}}};
  const auto report = run_sweep(parse_experiment_config(doc), 2);
  REQUIRE(report.rows.size() == 1);
  // decode reconstructs the annotated integer point; error is annotation
  // noise only, which is unbiased
  CHECK(std::abs(report.rows[0].bias_x) <= 0.02);
  CHECK(std::abs(report.rows[0].bias_y) <= 0.02);
  CHECK(report.rows[0].mean_err > 0.1);
}
