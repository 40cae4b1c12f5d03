#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "tilebench/core/types.hpp"

namespace tilebench {

// Manifest files are JSON Lines: the first object carries `task` and
// `split_role`, every following object is one SlideRecord.
CohortManifest read_manifest(std::istream& in);
CohortManifest load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const CohortManifest& manifest);
void save_manifest(const std::filesystem::path& path, const CohortManifest& manifest);

// Throws InvariantViolation on duplicate ids, non-positive mpp or labels outside {0,1}.
void validate(const CohortManifest& manifest);

// Keeps one slide per patient. The winner is the slide with the smallest
// hash of (patient_id, slide_id, seed), so input order never matters.
CohortManifest select_one_slide_per_patient(const CohortManifest& manifest, std::uint64_t seed);

// Tile annotations, one TileRecord per line.
std::vector<TileRecord> read_tiles(std::istream& in);
std::vector<TileRecord> load_tiles(const std::filesystem::path& path);
void write_tiles(std::ostream& out, const std::vector<TileRecord>& tiles);
void save_tiles(const std::filesystem::path& path, const std::vector<TileRecord>& tiles);

}  // namespace tilebench
