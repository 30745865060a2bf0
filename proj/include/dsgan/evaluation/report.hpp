#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsgan/core/key_value.hpp"
#include "dsgan/data/image.hpp"
#include "dsgan/metrics/geo_metrics.hpp"

namespace dsgan {

inline constexpr int kReportVersion = 1;
inline constexpr const char* kReportFormat = "dsgan-metrics-report";

struct MetricConfig {
  std::size_t max_lag = 100;
  std::vector<double> lbp_radii{1.0, 2.0};
  std::size_t hog_cell = 8;
  std::size_t hog_bins = 9;
  Connectivity connectivity = Connectivity::four;
  // Model-space binarization threshold.
  double threshold = 0.0;

  void validate() const;
  bool operator==(const MetricConfig&) const = default;
};

struct SetStatistics {
  std::size_t count = 0;
  double tv_isotropic_mean = 0.0, tv_isotropic_std = 0.0;
  double tv_anisotropic_mean = 0.0, tv_anisotropic_std = 0.0;
  bool operator==(const SetStatistics&) const = default;
};

struct Chi2Result {
  std::string descriptor;  // lbp_r1, lbp_r2, hog, ...
  // chi2(pooled synthetic histogram, pooled real histogram)
  double chi2 = 0.0;
  // mean over synthetic images of chi2(image histogram, pooled real histogram)
  double chi2_per_image_mean = 0.0;
  bool operator==(const Chi2Result&) const = default;
};

using OptionalCurve = std::vector<std::optional<double>>;

struct ConnectivitySummary {
  int facies = 1;
  Axis axis = Axis::x;
  std::vector<ConnectivityCurve> real, synthetic;  // one per image, in input order
  OptionalCurve real_min, real_max, real_mean, synthetic_mean;
};

struct MetricsReport {
  int version = kReportVersion;
  SetStatistics real, synthetic;
  std::vector<Chi2Result> chi2;
  std::vector<ConnectivitySummary> connectivity;  // facies 0/1 x axis X/Y
  MetricConfig metric_config;
  KeyValueText config_snapshot;
  std::string checkpoint_id;
  std::size_t image_height = 0, image_width = 0;

  const Chi2Result& chi2_for(const std::string& descriptor) const;
};

// Runs every metric on every image. Both sets must be non-empty and share one
// image size.
MetricsReport evaluate(const std::vector<TextureImage>& real, const std::vector<TextureImage>& synthetic,
                       const MetricConfig& config);

// Undefined entries are skipped; a lag with no defined entry stays undefined.
OptionalCurve curve_mean(const std::vector<ConnectivityCurve>& curves);
OptionalCurve curve_min(const std::vector<ConnectivityCurve>& curves);
OptionalCurve curve_max(const std::vector<ConnectivityCurve>& curves);

// report.json, curves_real.csv, curves_synthetic.csv, envelope.csv in `directory`.
void emit_report(const MetricsReport& report, const std::filesystem::path& directory);
std::string report_to_json(const MetricsReport& report);
// Throws VersionError on an unknown version, FormatError on malformed JSON.
MetricsReport report_from_json(const std::string& text);
MetricsReport parse_report(const std::filesystem::path& json_path);

// Plain-text tables: one row per TV / chi2 metric, real-data column first.
// The Real column comes from the first report.
std::string summary_table(const MetricsReport& report, const std::string& name = "synthetic");
std::string compare_runs(const MetricsReport& a, const MetricsReport& b,
                         const std::string& name_a = "run A", const std::string& name_b = "run B");

// Sorted *.png files of a directory.
std::vector<TextureImage> load_image_dir(const std::filesystem::path& directory);

}  // namespace dsgan
