#include "tilebench/preprocess/config.hpp"

#include "tilebench/core/errors.hpp"

namespace tilebench::preprocess {

void PreprocessConfig::validate() const {
  if (tile_native_px <= 0) throw ConfigError("tile_native_px must be positive");
  if (!(target_mpp > 0.0)) throw ConfigError("target_mpp must be positive");
  if (output_px <= 0 || output_px > tile_native_px) throw ConfigError("output_px must be in (0, tile_native_px]");
  if (!(od_background_threshold > 0.0 && od_background_threshold < 1.0)) {
    throw ConfigError("od_background_threshold must be in (0, 1)");
  }
  if (!(angle_percentile > 0.0 && angle_percentile < 50.0)) throw ConfigError("angle_percentile must be in (0, 50)");
  if (transmitted_light <= 0) throw ConfigError("transmitted_light must be positive");
  if (!(concentration_percentile > 0.0 && concentration_percentile <= 100.0)) {
    throw ConfigError("concentration_percentile must be in (0, 100]");
  }
  if (!(edge_fraction_min >= 0.0 && edge_fraction_min <= 1.0)) throw ConfigError("edge_fraction_min must be in [0, 1]");
  if (!(canny_low >= 0.0 && canny_low <= canny_high)) throw ConfigError("need 0 <= canny_low <= canny_high");
  try {
    reference_profile.validate();
  } catch (const InvariantViolation& e) {
    throw ConfigError(std::string("reference_profile: ") + e.what());
  }
}

PreprocessConfig PreprocessConfig::from_config(const KeyValueConfig& cfg, const std::string& section) {
  const auto key = [&](const char* name) { return section + "." + name; };
  PreprocessConfig p;
  p.tile_native_px = static_cast<int>(cfg.get_int(key("tile_native_px"), p.tile_native_px));
  p.target_mpp = cfg.get_double(key("target_mpp"), p.target_mpp);
  p.output_px = static_cast<int>(cfg.get_int(key("output_px"), p.output_px));
  p.od_background_threshold = cfg.get_double(key("od_background_threshold"), p.od_background_threshold);
  p.angle_percentile = cfg.get_double(key("angle_percentile"), p.angle_percentile);
  p.transmitted_light = static_cast<int>(cfg.get_int(key("transmitted_light"), p.transmitted_light));
  p.concentration_percentile = cfg.get_double(key("concentration_percentile"), p.concentration_percentile);
  p.edge_fraction_min = cfg.get_double(key("edge_fraction_min"), p.edge_fraction_min);
  p.canny_low = cfg.get_double(key("canny_low"), p.canny_low);
  p.canny_high = cfg.get_double(key("canny_high"), p.canny_high);
  const auto scope = cfg.get_string(key("stain_fit"), "tile");
  if (scope == "tile") {
    p.stain_fit = StainFitScope::PerTile;
  } else if (scope == "slide") {
    p.stain_fit = StainFitScope::PerSlide;
  } else {
    throw ConfigError("stain_fit must be 'tile' or 'slide'");
  }
  if (cfg.contains(key("reference_stain_matrix"))) {
    const auto m = cfg.get_doubles(key("reference_stain_matrix"), {});
    if (m.size() != 6) throw ConfigError("reference_stain_matrix needs 6 values (row-major 3x2)");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 2; ++c) p.reference_profile.stain_matrix(r, c) = m[r * 2 + c];
    }
  }
  if (cfg.contains(key("reference_max_concentrations"))) {
    const auto m = cfg.get_doubles(key("reference_max_concentrations"), {});
    if (m.size() != 2) throw ConfigError("reference_max_concentrations needs 2 values");
    p.reference_profile.max_concentrations << m[0], m[1];
  }
  p.validate();
  return p;
}

void PreprocessConfig::to_config(KeyValueConfig& cfg, const std::string& section) const {
  const auto key = [&](const char* name) { return section + "." + name; };
  cfg.set(key("tile_native_px"), tile_native_px);
  cfg.set(key("target_mpp"), target_mpp);
  cfg.set(key("output_px"), output_px);
  cfg.set(key("od_background_threshold"), od_background_threshold);
  cfg.set(key("angle_percentile"), angle_percentile);
  cfg.set(key("transmitted_light"), transmitted_light);
  cfg.set(key("concentration_percentile"), concentration_percentile);
  cfg.set(key("edge_fraction_min"), edge_fraction_min);
  cfg.set(key("canny_low"), canny_low);
  cfg.set(key("canny_high"), canny_high);
  cfg.set(key("stain_fit"), std::string(stain_fit == StainFitScope::PerTile ? "tile" : "slide"));
  std::vector<double> m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 2; ++c) m.push_back(reference_profile.stain_matrix(r, c));
  }
  cfg.set(key("reference_stain_matrix"), m);
  cfg.set(key("reference_max_concentrations"),
          std::vector<double>{reference_profile.max_concentrations[0], reference_profile.max_concentrations[1]});
}

}  // namespace tilebench::preprocess
