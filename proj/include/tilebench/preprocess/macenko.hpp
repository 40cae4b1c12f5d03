#pragma once

#include <Eigen/Core>

#include "tilebench/preprocess/image.hpp"

namespace tilebench::preprocess {

struct PreprocessConfig;

// Stain basis in optical-density space. Column 0 is hematoxylin, column 1 eosin.
struct StainProfile {
  Eigen::Matrix<double, 3, 2> stain_matrix;
  Eigen::Vector2d max_concentrations;

  // Commonly used H&E target (unit columns).
  static StainProfile reference();

  // Throws InvariantViolation unless columns are unit, independent, and maxima positive.
  void validate() const;
};

// Per-channel optical density of an 8-bit value: -log10((v + 1) / I0).
double optical_density(int value, int transmitted_light);

// Fits the stain basis from the tile's optical-density cloud.
// Throws InsufficientTissue (< 100 tissue pixels) or DegenerateStains.
StainProfile macenko_fit(const Image& tile, const PreprocessConfig& cfg);

// Re-expresses each pixel's stain concentrations (under `source`) in the
// reference profile of `cfg`.
Image macenko_normalize(const Image& tile, const StainProfile& source, const PreprocessConfig& cfg);

// Fits `tile` and normalizes it in one call.
Image macenko_normalize(const Image& tile, const PreprocessConfig& cfg);

// Two-variable nonnegative least squares: argmin_{c >= 0} |A c - b|.
Eigen::Vector2d nnls2(const Eigen::Matrix<double, 3, 2>& a, const Eigen::Vector3d& b);

// Linear-interpolated percentile (p in [0, 100]) of an unsorted sample.
double percentile(std::vector<double> values, double p);

}  // namespace tilebench::preprocess
