#pragma once

#include <filesystem>

#include "dds/image.hpp"

namespace dds {

/// 8-bit RGB PNG -> (3, H, W) raster in [0,1].
Tensor read_image_png(const std::filesystem::path& path);

/// 8-bit grayscale PNG -> binary mask; foreground iff value >= 128.
BinaryMask read_mask_png(const std::filesystem::path& path);

void write_image_png(const std::filesystem::path& path, const Tensor& rgb);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
/// Grayscale PNG with value = round(255 * s).
void write_saliency_png(const std::filesystem::path& path, const SaliencyMap& map);

}  // namespace dds
