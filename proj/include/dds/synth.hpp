#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "dds/image.hpp"

namespace dds {

/// One spherical cap: center on the unit sphere plus an angular radius.
struct SphericalCap {
  double lon = 0.0;     // radians in [-pi, pi)
  double lat = 0.0;     // radians in [-pi/2, pi/2]
  double radius = 0.0;  // angular radius, radians
  std::array<double, 3> color{0.8, 0.8, 0.8};
};

/// Value ranges for the random scene generator.
struct SceneSpec {
  int width = 512;
  int height = 256;
  int min_caps = 1;
  int max_caps = 4;
  double min_radius_deg = 8.0;
  double max_radius_deg = 25.0;
  double noise_sigma = 0.02;
};

/// Longitude/latitude of a pixel center in an equirectangular raster.
std::pair<double, double> pixel_lonlat(int x, int y, int width, int height);

/// Great-circle distance between two (lon, lat) points, radians.
double great_circle_distance(double lon1, double lat1, double lon2, double lat2);

/// Rasterize explicit caps onto an equirectangular image/mask pair. A pixel
/// is foreground iff its center lies strictly inside some cap. The image is
/// a smooth background gradient, per-cap flat color fill (later caps paint
/// over earlier ones) and seeded Gaussian noise, clamped to [0,1].
std::pair<EquirectImage, BinaryMask> render_caps(int width, int height,
                                                 const std::vector<SphericalCap>& caps,
                                                 double noise_sigma, std::uint64_t noise_seed);

/// Draw a random scene. Deterministic in (seed, spec). Caps near the poles
/// come out horizontally stretched, as equirectangular projection dictates.
std::pair<EquirectImage, BinaryMask> synth_scene(std::uint64_t seed, const SceneSpec& spec);

}  // namespace dds
