#include <subpix/experiment.hpp>

#include <ctime>
#include <fstream>
#include <sstream>

namespace subpix {

namespace {

using nlohmann::json;

// Shortest round-trip double formatting, shared with the JSON writer so CSV
// and JSON report the same digits.
std::string fmt(double v) { return json(v).dump(); }

std::string alpha_label(double alpha) { return "pck@" + fmt(alpha); }

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "# subpix sweep report v" << report.version
      << " config_hash=" << report.config_hash << " seed=" << report.seed
      << "\n";
  out << "config_key,stride,sigma,encoder,predictor,annotator,decoder,k,"
         "trials,mean_err_px,max_err_px,bias_x_px,bias_y_px,nme_pct";
  for (const double a : report.alphas) {
    out << "," << alpha_label(a);
  }
  out << "\n";
  for (const auto& row : report.rows) {
    out << row.config_key << "," << fmt(row.stride) << ","
        << (row.sigma ? fmt(*row.sigma) : "") << "," << row.encoder << ","
        << row.predictor << "," << row.annotator << "," << row.decoder << ","
        << row.k << "," << row.trials << "," << fmt(row.mean_err) << ","
        << fmt(row.max_err) << "," << fmt(row.bias_x) << ","
        << fmt(row.bias_y) << "," << fmt(row.nme);
    for (const double p : row.pck) {
      out << "," << fmt(p);
    }
    out << "\n";
  }
  return out.str();
}

json report_to_json(const ExperimentReport& report, bool with_timestamp) {
  json doc;
  doc["schema"] = "subpix-report-v1";
  doc["config_hash"] = report.config_hash;
  doc["config"] = report.config_echo;
  doc["environment"] = {{"seed", report.seed}, {"version", report.version}};
  if (with_timestamp) {
    doc["environment"]["generated_at"] = utc_now();
  }
  doc["rows"] = json::array();
  for (const auto& row : report.rows) {
    json r;
    r["config_key"] = row.config_key;
    r["stride"] = row.stride;
    if (row.sigma) {
      r["sigma"] = *row.sigma;
    }
    r["encoder"] = row.encoder;
    r["predictor"] = row.predictor;
    r["annotator"] = row.annotator;
    r["decoder"] = row.decoder;
    if (row.k > 0) {
      r["k"] = row.k;
    }
    r["trials"] = row.trials;
    r["mean_err_px"] = row.mean_err;
    r["max_err_px"] = row.max_err;
    r["bias_px"] = {row.bias_x, row.bias_y};
    r["nme_pct"] = row.nme;
    json pck = json::object();
    for (std::size_t a = 0; a < report.alphas.size(); ++a) {
      pck[alpha_label(report.alphas[a])] = row.pck[a];
    }
    r["pck"] = pck;
    doc["rows"].push_back(std::move(r));
  }
  return doc;
}

std::string evaluation_to_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "image_id,visible,mean_err_px,nme_pct";
  for (const double a : report.alphas) {
    out << "," << alpha_label(a);
  }
  out << "\n";
  for (const auto& row : report.rows) {
    out << row.image_id << "," << row.visible << "," << fmt(row.mean_err)
        << "," << fmt(row.nme);
    for (const double p : row.pck) {
      out << "," << fmt(p);
    }
    out << "\n";
  }
  out << "__pooled__," << report.total_visible << ","
      << fmt(report.pooled_mean_err) << "," << fmt(report.pooled_nme);
  for (const double p : report.pooled_pck) {
    out << "," << fmt(p);
  }
  out << "\n";
  return out.str();
}

json evaluation_to_json(const EvaluationReport& report) {
  json doc;
  doc["schema"] = "subpix-evaluation-v1";
  doc["pooling"] = report.per_image_mean ? "per_image_mean" : "all_landmarks";
  doc["rows"] = json::array();
  for (const auto& row : report.rows) {
    json r;
    r["image_id"] = row.image_id;
    r["visible"] = row.visible;
    r["mean_err_px"] = row.mean_err;
    r["nme_pct"] = row.nme;
    json pck = json::object();
    for (std::size_t a = 0; a < report.alphas.size(); ++a) {
      pck[alpha_label(report.alphas[a])] = row.pck[a];
    }
    r["pck"] = pck;
    doc["rows"].push_back(std::move(r));
  }
  doc["pooled"] = {{"nme_pct", report.pooled_nme},
                   {"mean_err_px", report.pooled_mean_err},
                   {"total_visible", report.total_visible}};
  json pck = json::object();
  for (std::size_t a = 0; a < report.alphas.size(); ++a) {
    pck[alpha_label(report.alphas[a])] = report.pooled_pck[a];
  }
  doc["pooled"]["pck"] = pck;
  return doc;
}

json verdicts_to_json(const std::vector<OracleVerdict>& verdicts) {
  json doc;
  doc["schema"] = "subpix-verdicts-v1";
  doc["pass"] = verification_passed(verdicts);
  doc["verdicts"] = json::array();
  for (const auto& v : verdicts) {
    doc["verdicts"].push_back({{"name", v.name},
                               {"observed", v.observed},
                               {"expected", v.expected},
                               {"tolerance", v.tolerance},
                               {"pass", v.pass},
                               {"samples", v.samples},
                               {"statistical", v.statistical},
                               {"note", v.note}});
  }
  return doc;
}

json heatmap_to_json(const Heatmapd& h) {
  json doc;
  doc["width"] = h.width();
  doc["height"] = h.height();
  doc["stride"] = h.stride;
  doc["normalized"] = h.normalized;
  json values = json::array();
  const double* data = h.values.data();  // row-major storage
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    values.push_back(data[i]);
  }
  doc["values"] = std::move(values);
  return doc;
}

Heatmapd heatmap_from_json(const json& j) {
  const auto width = j.at("width").get<Eigen::Index>();
  const auto height = j.at("height").get<Eigen::Index>();
  Heatmapd h({width, height}, j.at("stride").get<double>(),
             j.value("normalized", false));
  const auto& values = j.at("values");
  if (!values.is_array() ||
      values.size() != static_cast<std::size_t>(width * height)) {
    throw InvalidHeatmap("heatmap values must hold width*height numbers");
  }
  double* data = h.values.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    data[i] = values[i].get<double>();
  }
  return h;
}

std::string config_hash(const json& canonical) {
  const std::string dump = canonical.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char c : dump) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text) {
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw std::runtime_error("output directory does not exist: " +
                             parent.string());
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("failed to write " + tmp);
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace subpix
