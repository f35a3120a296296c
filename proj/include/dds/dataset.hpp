#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dds/image.hpp"

namespace dds {

struct ManifestRecord {
  std::string image_path;  // relative to the manifest's directory
  std::string mask_path;
  std::string split;  // "train" or "test"
  std::string source;
};

/// Image/mask pairing plus split assignment, stored as versioned JSON.
struct DatasetManifest {
  std::vector<ManifestRecord> records;
  std::filesystem::path base_dir;

  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::filesystem::path resolve(const std::string& rel) const { return base_dir / rel; }
  std::vector<std::size_t> split_indices(const std::string& split) const;
  /// Confirms every referenced file exists.
  void check_files_exist() const;
};

/// Seed-deterministic shuffle, then floor(ratio * n) records tagged train
/// and the remainder test.
void split_manifest(DatasetManifest& manifest, double ratio, std::uint64_t seed);

/// Pixelwise sum of all masks resized (nearest) to the target resolution,
/// normalized so the maximum is exactly 1. Returned as an (H, W) raster.
Tensor average_annotation_map(const std::vector<BinaryMask>& masks, int height, int width);

struct ObjectStats {
  int count = 0;
  std::vector<double> area_fractions;  // per component, in first-encounter order
};

/// 8-connected component count and per-object area fractions.
ObjectStats object_stats(const BinaryMask& mask);

/// Half-open binning [e_i, e_{i+1}), last bin closed; values outside the
/// edges are ignored.
std::vector<std::int64_t> histogram(const std::vector<double>& values,
                                    const std::vector<double>& edges);

}  // namespace dds
