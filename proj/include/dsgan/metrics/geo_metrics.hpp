#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dsgan/data/image.hpp"

namespace dsgan {

// Two-class label grid.
struct BinaryFacies {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> labels;
  double threshold = 0.0;

  std::uint8_t operator()(std::size_t row, std::size_t col) const { return labels[row * width + col]; }
};

// Label 1 where the model-space pixel is strictly above `threshold`.
// Storage-space images are converted to model space first.
BinaryFacies binarize(const TextureImage& img, double threshold = 0.0);

enum class Axis { x, y };  // x: along a row (column offset), y: along a column (row offset)
enum class Connectivity { four, eight };

std::string to_string(Axis axis);
Axis parse_axis(const std::string& text);
std::string to_string(Connectivity c);
Connectivity parse_connectivity(const std::string& text);

// Component id per pixel; components never mix facies.
std::vector<std::uint32_t> label_components(const BinaryFacies& fac, Connectivity connectivity);

struct ConnectivityCurve {
  int facies = 1;
  Axis axis = Axis::x;
  // Index i holds lag i + 1. nullopt where no same-facies pair exists.
  std::vector<std::optional<double>> probabilities;
  std::vector<std::uint64_t> pair_counts;

  std::size_t max_lag() const { return probabilities.size(); }
};

ConnectivityCurve connectivity_function(const BinaryFacies& fac, int facies, Axis axis,
                                        std::size_t max_lag,
                                        Connectivity connectivity = Connectivity::four);

enum class TvVariant { isotropic, anisotropic };

// Per-pixel mean of forward-difference magnitudes on [0,1] values; differences
// leaving the image count as 0.
double total_variation(const TextureImage& img, TvVariant variant);

enum class DescriptorKind { lbp, hog };

struct DescriptorHistogram {
  DescriptorKind kind = DescriptorKind::lbp;
  double radius = 0.0;  // lbp only
  std::vector<double> bins;
};

// 8-neighbour circular LBP on [0,1] values with bilinear sampling. Neighbour k
// sits at angle 2*pi*k/8 (row offset -R sin, column offset R cos) and sets bit
// k when it is >= the centre. Pixels closer than ceil(R) to the border are skipped.
DescriptorHistogram lbp_histogram(const TextureImage& img, double radius);

// Central-difference gradients (replicated border), unsigned orientation
// hard-binned and magnitude weighted per cell; cell histograms are
// L2-normalised, averaged and rescaled to sum 1. Zero gradient everywhere
// gives the uniform histogram.
DescriptorHistogram hog_histogram(const TextureImage& img, std::size_t cell = 8, std::size_t bins = 9);

double chi2_distance(std::span<const double> p, std::span<const double> q);
// Throws ValidationError when kind, radius or bin count differ.
double chi2_distance(const DescriptorHistogram& p, const DescriptorHistogram& q);

// Bin-wise mean of histograms of one kind.
DescriptorHistogram pooled_histogram(const std::vector<DescriptorHistogram>& hists);

// CSV columns: facies,axis,lag,probability,pair_count,image_id. Undefined
// probabilities are written as empty fields.
void write_curve_csv_header(std::ostream& out);
void write_curve_csv(std::ostream& out, const ConnectivityCurve& curve, const std::string& image_id);

}  // namespace dsgan
