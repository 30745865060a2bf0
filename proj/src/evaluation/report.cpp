#include "dsgan/evaluation/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "dsgan/core/error.hpp"
#include "dsgan/data/png_io.hpp"

namespace dsgan {
namespace {

using nlohmann::json;

std::string descriptor_name(double radius) {
  std::string r = format_double(radius);
  std::replace(r.begin(), r.end(), '.', 'p');
  return "lbp_r" + r;
}

SetStatistics tv_statistics(const std::vector<TextureImage>& images) {
  SetStatistics s;
  s.count = images.size();
  std::vector<double> iso, aniso;
  for (const auto& img : images) {
    iso.push_back(total_variation(img, TvVariant::isotropic));
    aniso.push_back(total_variation(img, TvVariant::anisotropic));
  }
  auto moments = [](const std::vector<double>& v, double& mean, double& sd) {
    double sum = 0.0;
    for (double x : v) sum += x;
    mean = sum / static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    sd = std::sqrt(sq / static_cast<double>(v.size()));
  };
  moments(iso, s.tv_isotropic_mean, s.tv_isotropic_std);
  moments(aniso, s.tv_anisotropic_mean, s.tv_anisotropic_std);
  return s;
}

Chi2Result compare_histograms(const std::string& name, const std::vector<DescriptorHistogram>& real,
                              const std::vector<DescriptorHistogram>& synthetic) {
  const DescriptorHistogram pooled_real = pooled_histogram(real);
  Chi2Result r{name, chi2_distance(pooled_histogram(synthetic), pooled_real), 0.0};
  for (const auto& h : synthetic) r.chi2_per_image_mean += chi2_distance(h, pooled_real);
  r.chi2_per_image_mean /= static_cast<double>(synthetic.size());
  return r;
}

template <typename Reduce>
OptionalCurve reduce_curves(const std::vector<ConnectivityCurve>& curves, Reduce reduce) {
  if (curves.empty()) return {};
  OptionalCurve out(curves.front().max_lag());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::vector<double> defined;
    for (const auto& c : curves)
      if (c.probabilities.at(i)) defined.push_back(*c.probabilities[i]);
    if (!defined.empty()) out[i] = reduce(defined);
  }
  return out;
}

json optional_curve_json(const OptionalCurve& c) {
  json a = json::array();
  for (const auto& v : c) a.push_back(v ? json(*v) : json(nullptr));
  return a;
}

OptionalCurve optional_curve_from(const json& a) {
  OptionalCurve c;
  for (const auto& v : a) c.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  return c;
}

json curves_json(const std::vector<ConnectivityCurve>& curves) {
  json a = json::array();
  for (const auto& c : curves)
    a.push_back({{"probabilities", optional_curve_json(c.probabilities)}, {"pair_counts", c.pair_counts}});
  return a;
}

std::vector<ConnectivityCurve> curves_from(const json& a, int facies, Axis axis) {
  std::vector<ConnectivityCurve> out;
  for (const auto& c : a)
    out.push_back({facies, axis, optional_curve_from(c.at("probabilities")),
                   c.at("pair_counts").get<std::vector<std::uint64_t>>()});
  return out;
}

json stats_json(const SetStatistics& s) {
  return {{"count", s.count},
          {"isotropic", {{"mean", s.tv_isotropic_mean}, {"std", s.tv_isotropic_std}}},
          {"anisotropic", {{"mean", s.tv_anisotropic_mean}, {"std", s.tv_anisotropic_std}}}};
}

SetStatistics stats_from(const json& j) {
  return {j.at("count").get<std::size_t>(),
          j.at("isotropic").at("mean").get<double>(),
          j.at("isotropic").at("std").get<double>(),
          j.at("anisotropic").at("mean").get<double>(),
          j.at("anisotropic").at("std").get<double>()};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void MetricConfig::validate() const {
  if (max_lag < 1) throw ValidationError("max_lag must be >= 1");
  if (lbp_radii.empty()) throw ValidationError("lbp_radii must list at least one radius");
  for (double r : lbp_radii)
    if (!(r > 0.0)) throw ValidationError("lbp_radii entries must be > 0");
  if (hog_cell < 1) throw ValidationError("hog_cell must be >= 1");
  if (hog_bins < 1) throw ValidationError("hog_bins must be >= 1");
  if (!std::isfinite(threshold) || threshold <= -1.0 || threshold >= 1.0)
    throw ValidationError("threshold must lie strictly inside (-1, 1)");
}

const Chi2Result& MetricsReport::chi2_for(const std::string& descriptor) const {
  for (const auto& c : chi2)
    if (c.descriptor == descriptor) return c;
  throw ValidationError("report has no chi2 entry '" + descriptor + "'");
}

OptionalCurve curve_mean(const std::vector<ConnectivityCurve>& curves) {
  return reduce_curves(curves, [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  });
}

OptionalCurve curve_min(const std::vector<ConnectivityCurve>& curves) {
  return reduce_curves(curves, [](const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); });
}

OptionalCurve curve_max(const std::vector<ConnectivityCurve>& curves) {
  return reduce_curves(curves, [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); });
}

MetricsReport evaluate(const std::vector<TextureImage>& real, const std::vector<TextureImage>& synthetic,
                       const MetricConfig& config) {
  config.validate();
  if (real.empty() || synthetic.empty()) throw ValidationError("evaluate: image sets must be non-empty");
  const std::size_t h = real.front().height(), w = real.front().width();
  for (const auto* set : {&real, &synthetic})
    for (const auto& img : *set)
      if (img.height() != h || img.width() != w)
        throw ValidationError("evaluate: all images must be " + std::to_string(h) + "x" + std::to_string(w) +
                              ", got " + std::to_string(img.height()) + "x" + std::to_string(img.width()));
  if (config.max_lag >= std::min(h, w))
    throw ValidationError("max_lag " + std::to_string(config.max_lag) + " must be smaller than the image extent " +
                          std::to_string(std::min(h, w)));

  MetricsReport report;
  report.metric_config = config;
  report.image_height = h;
  report.image_width = w;
  report.real = tv_statistics(real);
  report.synthetic = tv_statistics(synthetic);

  auto histograms = [](const std::vector<TextureImage>& set, auto&& fn) {
    std::vector<DescriptorHistogram> out;
    out.reserve(set.size());
    for (const auto& img : set) out.push_back(fn(img));
    return out;
  };
  for (double r : config.lbp_radii) {
    auto fn = [r](const TextureImage& img) { return lbp_histogram(img, r); };
    report.chi2.push_back(compare_histograms(descriptor_name(r), histograms(real, fn), histograms(synthetic, fn)));
  }
  {
    auto fn = [&](const TextureImage& img) { return hog_histogram(img, config.hog_cell, config.hog_bins); };
    report.chi2.push_back(compare_histograms("hog", histograms(real, fn), histograms(synthetic, fn)));
  }

  std::vector<BinaryFacies> real_fac, syn_fac;
  for (const auto& img : real) real_fac.push_back(binarize(img, config.threshold));
  for (const auto& img : synthetic) syn_fac.push_back(binarize(img, config.threshold));
  for (int facies : {0, 1})
    for (Axis axis : {Axis::x, Axis::y}) {
      ConnectivitySummary s{facies, axis, {}, {}, {}, {}, {}, {}};
      for (const auto& f : real_fac)
        s.real.push_back(connectivity_function(f, facies, axis, config.max_lag, config.connectivity));
      for (const auto& f : syn_fac)
        s.synthetic.push_back(connectivity_function(f, facies, axis, config.max_lag, config.connectivity));
      s.real_min = curve_min(s.real);
      s.real_max = curve_max(s.real);
      s.real_mean = curve_mean(s.real);
      s.synthetic_mean = curve_mean(s.synthetic);
      report.connectivity.push_back(std::move(s));
    }
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  json j;
  j["format"] = kReportFormat;
  j["version"] = report.version;
  j["checkpoint_id"] = report.checkpoint_id;
  j["image_size"] = {report.image_height, report.image_width};
  j["total_variation"] = {{"real", stats_json(report.real)}, {"synthetic", stats_json(report.synthetic)}};
  json chi2 = json::array();
  for (const auto& c : report.chi2)
    chi2.push_back({{"descriptor", c.descriptor}, {"chi2", c.chi2}, {"chi2_per_image_mean", c.chi2_per_image_mean}});
  j["chi2"] = chi2;
  json conn = json::array();
  for (const auto& s : report.connectivity)
    conn.push_back({{"facies", s.facies},
                    {"axis", to_string(s.axis)},
                    {"real_min", optional_curve_json(s.real_min)},
                    {"real_max", optional_curve_json(s.real_max)},
                    {"real_mean", optional_curve_json(s.real_mean)},
                    {"synthetic_mean", optional_curve_json(s.synthetic_mean)},
                    {"real_curves", curves_json(s.real)},
                    {"synthetic_curves", curves_json(s.synthetic)}});
  j["connectivity"] = conn;
  const MetricConfig& mc = report.metric_config;
  j["metric_config"] = {{"max_lag", mc.max_lag},
                        {"lbp_radii", mc.lbp_radii},
                        {"hog_cell", mc.hog_cell},
                        {"hog_bins", mc.hog_bins},
                        {"connectivity", to_string(mc.connectivity)},
                        {"threshold", mc.threshold}};
  json cfg = json::object();
  for (const auto& [k, v] : report.config_snapshot.entries()) cfg[k] = v;
  j["config"] = cfg;
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("metrics report: ") + e.what());
  }
  if (!j.is_object() || j.value("format", std::string()) != kReportFormat)
    throw FormatError("metrics report: missing or wrong 'format' field");
  if (!j.contains("version") || !j["version"].is_number_integer())
    throw FormatError("metrics report: missing 'version' field");
  const int version = j["version"].get<int>();
  if (version != kReportVersion)
    throw VersionError("metrics report version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kReportVersion) + ")");
  try {
    MetricsReport r;
    r.version = version;
    r.checkpoint_id = j.at("checkpoint_id").get<std::string>();
    r.image_height = j.at("image_size").at(0).get<std::size_t>();
    r.image_width = j.at("image_size").at(1).get<std::size_t>();
    r.real = stats_from(j.at("total_variation").at("real"));
    r.synthetic = stats_from(j.at("total_variation").at("synthetic"));
    for (const auto& c : j.at("chi2"))
      r.chi2.push_back({c.at("descriptor").get<std::string>(), c.at("chi2").get<double>(),
                        c.at("chi2_per_image_mean").get<double>()});
    for (const auto& c : j.at("connectivity")) {
      ConnectivitySummary s;
      s.facies = c.at("facies").get<int>();
      s.axis = parse_axis(c.at("axis").get<std::string>());
      s.real_min = optional_curve_from(c.at("real_min"));
      s.real_max = optional_curve_from(c.at("real_max"));
      s.real_mean = optional_curve_from(c.at("real_mean"));
      s.synthetic_mean = optional_curve_from(c.at("synthetic_mean"));
      s.real = curves_from(c.at("real_curves"), s.facies, s.axis);
      s.synthetic = curves_from(c.at("synthetic_curves"), s.facies, s.axis);
      r.connectivity.push_back(std::move(s));
    }
    const json& mc = j.at("metric_config");
    r.metric_config.max_lag = mc.at("max_lag").get<std::size_t>();
    r.metric_config.lbp_radii = mc.at("lbp_radii").get<std::vector<double>>();
    r.metric_config.hog_cell = mc.at("hog_cell").get<std::size_t>();
    r.metric_config.hog_bins = mc.at("hog_bins").get<std::size_t>();
    r.metric_config.connectivity = parse_connectivity(mc.at("connectivity").get<std::string>());
    r.metric_config.threshold = mc.at("threshold").get<double>();
    for (const auto& [k, v] : j.at("config").items()) r.config_snapshot.set(k, v.get<std::string>());
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("metrics report: ") + e.what());
  }
}

MetricsReport parse_report(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + json_path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

void emit_report(const MetricsReport& report, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  write_file(directory / "report.json", report_to_json(report));

  std::ostringstream real, synthetic, envelope;
  write_curve_csv_header(real);
  write_curve_csv_header(synthetic);
  envelope << "facies,axis,lag,real_min,real_max,real_mean,synthetic_mean\n";
  for (const auto& s : report.connectivity) {
    for (std::size_t i = 0; i < s.real.size(); ++i) write_curve_csv(real, s.real[i], "real_" + std::to_string(i));
    for (std::size_t i = 0; i < s.synthetic.size(); ++i)
      write_curve_csv(synthetic, s.synthetic[i], "synthetic_" + std::to_string(i));
    for (std::size_t i = 0; i < s.real_min.size(); ++i)
      envelope << s.facies << ',' << to_string(s.axis) << ',' << i + 1 << ',' << cell(s.real_min[i]) << ','
               << cell(s.real_max[i]) << ',' << cell(s.real_mean[i]) << ',' << cell(s.synthetic_mean[i]) << '\n';
  }
  write_file(directory / "curves_real.csv", real.str());
  write_file(directory / "curves_synthetic.csv", synthetic.str());
  write_file(directory / "envelope.csv", envelope.str());
}

namespace {

std::string metrics_table(const std::vector<std::pair<std::string, const MetricsReport*>>& runs) {
  auto num = [](double v) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(3) << v;
    return s.str();
  };
  const MetricsReport& first = *runs.front().second;
  std::vector<std::vector<std::string>> rows{{"metric", "Real"}, {"TV_i", num(first.real.tv_isotropic_mean)},
                                             {"TV_a", num(first.real.tv_anisotropic_mean)}};
  for (const auto& c : first.chi2) rows.push_back({"chi2 " + c.descriptor, "-"});
  for (const auto& [name, r] : runs) {
    rows[0].push_back(name);
    rows[1].push_back(num(r->synthetic.tv_isotropic_mean));
    rows[2].push_back(num(r->synthetic.tv_anisotropic_mean));
    for (std::size_t i = 0; i < first.chi2.size(); ++i) {
      std::string v = "n/a";
      for (const auto& d : r->chi2)
        if (d.descriptor == first.chi2[i].descriptor) v = num(d.chi2);
      rows[3 + i].push_back(v);
    }
  }
  std::vector<std::size_t> widths(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  std::ostringstream out;
  for (const auto& row : rows) {
    out << std::left << std::setw(static_cast<int>(widths[0])) << row[0] << std::right;
    for (std::size_t i = 1; i < row.size(); ++i) out << "  " << std::setw(static_cast<int>(widths[i])) << row[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string summary_table(const MetricsReport& report, const std::string& name) {
  return metrics_table({{name, &report}});
}

std::string compare_runs(const MetricsReport& a, const MetricsReport& b, const std::string& name_a,
                         const std::string& name_b) {
  return metrics_table({{name_a, &a}, {name_b, &b}});
}

std::vector<TextureImage> load_image_dir(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory))
    throw ValidationError("not a directory: " + directory.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(directory))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no .png files in " + directory.string());
  std::vector<TextureImage> images;
  for (const auto& f : files) images.push_back(read_png(f));
  return images;
}

}  // namespace dsgan
