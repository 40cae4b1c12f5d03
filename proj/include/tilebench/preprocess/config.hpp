#pragma once

#include "tilebench/core/config.hpp"
#include "tilebench/preprocess/macenko.hpp"

namespace tilebench::preprocess {

enum class StainFitScope { PerTile, PerSlide };

struct PreprocessConfig {
  int tile_native_px = 512;
  double target_mpp = 0.5;
  int output_px = 224;
  double od_background_threshold = 0.15;  // beta
  double angle_percentile = 1.0;          // alpha
  int transmitted_light = 255;            // I0
  double concentration_percentile = 99.0;
  double edge_fraction_min = 0.02;
  double canny_low = 40.0;
  double canny_high = 100.0;
  StainFitScope stain_fit = StainFitScope::PerTile;
  StainProfile reference_profile = StainProfile::reference();

  // Throws ConfigError when a field is out of range.
  void validate() const;

  static PreprocessConfig from_config(const KeyValueConfig& cfg, const std::string& section = "preprocess");
  void to_config(KeyValueConfig& cfg, const std::string& section = "preprocess") const;
};

}  // namespace tilebench::preprocess
