#include "dsgan/metrics/geo_metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dsgan/core/error.hpp"
#include "dsgan/core/key_value.hpp"

namespace dsgan {
namespace {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  std::uint32_t find(std::uint32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::uint32_t> parent;
};

std::vector<double> storage_pixels(const TextureImage& img) {
  return img.space() == ValueSpace::storage ? img.pixels() : img.to_storage().pixels();
}

// Snaps coordinates that are integers up to rounding noise (cos(pi/2) etc.).
double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-12 ? r : v;
}

}  // namespace

BinaryFacies binarize(const TextureImage& img, double threshold) {
  const TextureImage m = img.in_space(ValueSpace::model);
  BinaryFacies fac{m.height(), m.width(), std::vector<std::uint8_t>(m.pixels().size()), threshold};
  for (std::size_t i = 0; i < fac.labels.size(); ++i) fac.labels[i] = m.pixels()[i] > threshold ? 1 : 0;
  return fac;
}

std::string to_string(Axis axis) { return axis == Axis::x ? "X" : "Y"; }

Axis parse_axis(const std::string& text) {
  if (text == "X" || text == "x") return Axis::x;
  if (text == "Y" || text == "y") return Axis::y;
  throw ValidationError("unknown axis '" + text + "' (expected X or Y)");
}

std::string to_string(Connectivity c) { return c == Connectivity::four ? "4" : "8"; }

Connectivity parse_connectivity(const std::string& text) {
  if (text == "4") return Connectivity::four;
  if (text == "8") return Connectivity::eight;
  throw ValidationError("unknown connectivity '" + text + "' (expected 4 or 8)");
}

std::vector<std::uint32_t> label_components(const BinaryFacies& fac, Connectivity connectivity) {
  const std::size_t h = fac.height, w = fac.width;
  DisjointSets sets(h * w);
  auto idx = [w](std::size_t r, std::size_t c) { return static_cast<std::uint32_t>(r * w + c); };
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const auto v = fac(r, c);
      if (c + 1 < w && fac(r, c + 1) == v) sets.unite(idx(r, c), idx(r, c + 1));
      if (r + 1 < h && fac(r + 1, c) == v) sets.unite(idx(r, c), idx(r + 1, c));
      if (connectivity == Connectivity::eight && r + 1 < h) {
        if (c + 1 < w && fac(r + 1, c + 1) == v) sets.unite(idx(r, c), idx(r + 1, c + 1));
        if (c > 0 && fac(r + 1, c - 1) == v) sets.unite(idx(r, c), idx(r + 1, c - 1));
      }
    }
  std::vector<std::uint32_t> ids(h * w);
  for (std::uint32_t i = 0; i < ids.size(); ++i) ids[i] = sets.find(i);
  return ids;
}

ConnectivityCurve connectivity_function(const BinaryFacies& fac, int facies, Axis axis,
                                        std::size_t max_lag, Connectivity connectivity) {
  const std::size_t extent = axis == Axis::x ? fac.width : fac.height;
  if (max_lag < 1 || max_lag >= extent)
    throw ValidationError("max_lag must be in [1, " + std::to_string(extent) + ") for axis " + to_string(axis));
  if (facies != 0 && facies != 1) throw ValidationError("facies label must be 0 or 1");

  const auto ids = label_components(fac, connectivity);
  const auto target = static_cast<std::uint8_t>(facies);
  ConnectivityCurve curve{facies, axis, {}, {}};
  curve.probabilities.resize(max_lag);
  curve.pair_counts.resize(max_lag);
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    std::uint64_t pairs = 0, joined = 0;
    const std::size_t rows = axis == Axis::y ? fac.height - lag : fac.height;
    const std::size_t cols = axis == Axis::x ? fac.width - lag : fac.width;
    const std::size_t offset = axis == Axis::x ? lag : lag * fac.width;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t a = r * fac.width + c, b = a + offset;
        if (fac.labels[a] != target || fac.labels[b] != target) continue;
        ++pairs;
        if (ids[a] == ids[b]) ++joined;
      }
    curve.pair_counts[lag - 1] = pairs;
    if (pairs > 0) curve.probabilities[lag - 1] = static_cast<double>(joined) / static_cast<double>(pairs);
  }
  return curve;
}

double total_variation(const TextureImage& img, TvVariant variant) {
  const std::size_t h = img.height(), w = img.width();
  if (h < 2 || w < 2) throw ValidationError("total_variation needs an image of at least 2x2");
  const auto p = storage_pixels(img);
  double total = 0.0;
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double v = p[r * w + c];
      const double dr = r + 1 < h ? p[(r + 1) * w + c] - v : 0.0;
      const double dc = c + 1 < w ? p[r * w + c + 1] - v : 0.0;
      total += variant == TvVariant::isotropic ? std::sqrt(dr * dr + dc * dc) : std::abs(dr) + std::abs(dc);
    }
  return total / static_cast<double>(h * w);
}

DescriptorHistogram lbp_histogram(const TextureImage& img, double radius) {
  if (!(radius > 0.0)) throw ValidationError("LBP radius must be > 0");
  const std::size_t h = img.height(), w = img.width();
  const double span = 2.0 * radius + 1.0;
  if (!(static_cast<double>(h) > span && static_cast<double>(w) > span))
    throw ValidationError("LBP needs an image larger than 2R+1 in both dimensions");
  const auto p = storage_pixels(img);
  const auto border = static_cast<std::size_t>(std::ceil(radius));

  struct Tap {
    long r0, c0;
    double fr, fc;
  };
  std::array<Tap, 8> taps{};
  for (int k = 0; k < 8; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / 8.0;
    const double dr = snap(-radius * std::sin(theta));
    const double dc = snap(radius * std::cos(theta));
    const double r0 = std::floor(dr), c0 = std::floor(dc);
    taps[k] = {static_cast<long>(r0), static_cast<long>(c0), dr - r0, dc - c0};
  }

  DescriptorHistogram hist{DescriptorKind::lbp, radius, std::vector<double>(256, 0.0)};
  std::uint64_t count = 0;
  auto at = [&](long r, long c) { return p[static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c)]; };
  for (std::size_t r = border; r + border < h; ++r)
    for (std::size_t c = border; c + border < w; ++c) {
      const double centre = p[r * w + c];
      unsigned code = 0;
      for (int k = 0; k < 8; ++k) {
        const Tap& t = taps[k];
        const long rr = static_cast<long>(r) + t.r0, cc = static_cast<long>(c) + t.c0;
        double v = at(rr, cc);
        // Lerp form keeps constant neighbourhoods exact.
        if (t.fc != 0.0 || t.fr != 0.0) {
          const double top = t.fc != 0.0 ? v + t.fc * (at(rr, cc + 1) - v) : v;
          double bottom = top;
          if (t.fr != 0.0) {
            const double b0 = at(rr + 1, cc);
            bottom = t.fc != 0.0 ? b0 + t.fc * (at(rr + 1, cc + 1) - b0) : b0;
          }
          v = top + t.fr * (bottom - top);
        }
        if (v >= centre) code |= 1u << k;
      }
      hist.bins[code] += 1.0;
      ++count;
    }
  for (double& b : hist.bins) b /= static_cast<double>(count);
  return hist;
}

DescriptorHistogram hog_histogram(const TextureImage& img, std::size_t cell, std::size_t bins) {
  if (cell == 0 || bins == 0) throw ValidationError("HOG cell size and bin count must be >= 1");
  const std::size_t h = img.height(), w = img.width();
  if (h < cell || w < cell) throw ValidationError("HOG needs an image of at least one cell");
  const auto p = storage_pixels(img);
  auto at = [&](std::size_t r, std::size_t c) { return p[r * w + c]; };

  const std::size_t cells_r = h / cell, cells_c = w / cell;
  std::vector<double> mean(bins, 0.0), cell_hist(bins);
  for (std::size_t cr = 0; cr < cells_r; ++cr)
    for (std::size_t cc = 0; cc < cells_c; ++cc) {
      std::fill(cell_hist.begin(), cell_hist.end(), 0.0);
      for (std::size_t r = cr * cell; r < (cr + 1) * cell; ++r)
        for (std::size_t c = cc * cell; c < (cc + 1) * cell; ++c) {
          const double gx = at(r, std::min(c + 1, w - 1)) - at(r, c == 0 ? 0 : c - 1);
          const double gy = at(std::min(r + 1, h - 1), c) - at(r == 0 ? 0 : r - 1, c);
          const double mag = std::hypot(gx, gy);
          if (mag == 0.0) continue;
          double theta = std::atan2(gy, gx);
          if (theta < 0.0) theta += std::numbers::pi;
          if (theta >= std::numbers::pi) theta -= std::numbers::pi;
          auto bin = static_cast<std::size_t>(theta / std::numbers::pi * static_cast<double>(bins));
          cell_hist[std::min(bin, bins - 1)] += mag;
        }
      double norm = 0.0;
      for (double v : cell_hist) norm += v * v;
      norm = std::sqrt(norm) + 1e-6;
      for (std::size_t b = 0; b < bins; ++b) mean[b] += cell_hist[b] / norm;
    }

  DescriptorHistogram hist{DescriptorKind::hog, 0.0, std::move(mean)};
  const double total = std::accumulate(hist.bins.begin(), hist.bins.end(), 0.0);
  if (total > 0.0)
    for (double& b : hist.bins) b /= total;
  else
    std::fill(hist.bins.begin(), hist.bins.end(), 1.0 / static_cast<double>(bins));
  return hist;
}

double chi2_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("chi2_distance: histograms differ in bin count");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - q[i];
    d += diff * diff / (p[i] + q[i] + 1e-10);
  }
  return 0.5 * d;
}

double chi2_distance(const DescriptorHistogram& p, const DescriptorHistogram& q) {
  if (p.kind != q.kind || p.radius != q.radius)
    throw ValidationError("chi2_distance: histograms of different descriptors");
  return chi2_distance(std::span<const double>(p.bins), std::span<const double>(q.bins));
}

DescriptorHistogram pooled_histogram(const std::vector<DescriptorHistogram>& hists) {
  if (hists.empty()) throw ValidationError("pooled_histogram: no histograms");
  DescriptorHistogram pooled{hists.front().kind, hists.front().radius,
                             std::vector<double>(hists.front().bins.size(), 0.0)};
  for (const auto& h : hists) {
    if (h.kind != pooled.kind || h.radius != pooled.radius || h.bins.size() != pooled.bins.size())
      throw ValidationError("pooled_histogram: mixed descriptors");
    for (std::size_t i = 0; i < h.bins.size(); ++i) pooled.bins[i] += h.bins[i];
  }
  for (double& b : pooled.bins) b /= static_cast<double>(hists.size());
  return pooled;
}

void write_curve_csv_header(std::ostream& out) {
  out << "facies,axis,lag,probability,pair_count,image_id\n";
}

void write_curve_csv(std::ostream& out, const ConnectivityCurve& curve, const std::string& image_id) {
  for (std::size_t i = 0; i < curve.max_lag(); ++i) {
    out << curve.facies << ',' << to_string(curve.axis) << ',' << i + 1 << ',';
    if (curve.probabilities[i]) out << format_double(*curve.probabilities[i]);
    out << ',' << curve.pair_counts[i] << ',' << image_id << '\n';
  }
}

}  // namespace dsgan
