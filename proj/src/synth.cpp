#include "dds/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dds {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::pair<double, double> pixel_lonlat(int x, int y, int width, int height) {
  double lon = (x + 0.5) / width * 2.0 * kPi - kPi;
  double lat = kPi / 2.0 - (y + 0.5) / height * kPi;
  return {lon, lat};
}

double great_circle_distance(double lon1, double lat1, double lon2, double lat2) {
  // Haversine form, stable for small separations.
  double sdlat = std::sin((lat2 - lat1) / 2.0);
  double sdlon = std::sin((lon2 - lon1) / 2.0);
  double a = sdlat * sdlat + std::cos(lat1) * std::cos(lat2) * sdlon * sdlon;
  return 2.0 * std::asin(std::min(1.0, std::sqrt(a)));
}

std::pair<EquirectImage, BinaryMask> render_caps(int width, int height,
                                                 const std::vector<SphericalCap>& caps,
                                                 double noise_sigma, std::uint64_t noise_seed) {
  if (width <= 0 || height <= 0) throw DegenerateSpecError("render_caps: empty raster");

  EquirectImage img;
  img.pixels = Tensor({3, height, width});
  BinaryMask mask(height, width);

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      auto [lon, lat] = pixel_lonlat(x, y, width, height);
      // Background: latitude ramp plus a longitude wave, different per channel.
      double base0 = 0.35 + 0.25 * (lat / (kPi / 2.0));
      double base1 = 0.40 + 0.15 * std::sin(lon);
      double base2 = 0.45 - 0.20 * (lat / (kPi / 2.0));
      std::array<double, 3> color{base0, base1, base2};

      for (const SphericalCap& cap : caps) {
        if (great_circle_distance(lon, lat, cap.lon, cap.lat) < cap.radius) {
          color = cap.color;
          mask.at(y, x) = 1;
        }
      }
      for (int c = 0; c < 3; ++c) {
        double v = color[c];
        if (noise_sigma > 0.0) v += noise(rng);
        img.pixels.at(c, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return {std::move(img), std::move(mask)};
}

namespace {

bool cap_covers_some_pixel(const SphericalCap& cap, int width, int height) {
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      auto [lon, lat] = pixel_lonlat(x, y, width, height);
      if (great_circle_distance(lon, lat, cap.lon, cap.lat) < cap.radius) return true;
    }
  return false;
}

}  // namespace

std::pair<EquirectImage, BinaryMask> synth_scene(std::uint64_t seed, const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0 || spec.max_caps <= 0 || spec.max_radius_deg <= 0.0)
    throw DegenerateSpecError("synth_scene: spec ranges must be positive");
  if (spec.min_caps > spec.max_caps || spec.min_radius_deg > spec.max_radius_deg)
    throw DegenerateSpecError("synth_scene: empty spec range");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cap_count(std::max(0, spec.min_caps), spec.max_caps);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> radius(spec.min_radius_deg * kPi / 180.0,
                                                spec.max_radius_deg * kPi / 180.0);

  const int k = cap_count(rng);
  std::vector<SphericalCap> caps;
  caps.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    SphericalCap cap;
    // Centers uniform on the sphere: lon uniform, sin(lat) uniform. A cap so
    // small it rasterizes empty is resampled; as a last resort its center is
    // snapped onto a pixel center, which that cap then covers outright.
    bool covered = false;
    for (int attempt = 0; attempt < 16 && !covered; ++attempt) {
      cap.lon = unit(rng) * 2.0 * kPi - kPi;
      cap.lat = std::asin(unit(rng) * 2.0 - 1.0);
      cap.radius = radius(rng);
      covered = cap_covers_some_pixel(cap, spec.width, spec.height);
    }
    if (!covered && cap.radius > 0.0) {
      int px = std::min(spec.width - 1, static_cast<int>((cap.lon + kPi) / (2.0 * kPi) * spec.width));
      int py = std::min(spec.height - 1, static_cast<int>((kPi / 2.0 - cap.lat) / kPi * spec.height));
      std::tie(cap.lon, cap.lat) = pixel_lonlat(px, py, spec.width, spec.height);
    }
    cap.color = {0.2 + 0.8 * unit(rng), 0.2 + 0.8 * unit(rng), 0.2 + 0.8 * unit(rng)};
    caps.push_back(cap);
  }

  auto out = render_caps(spec.width, spec.height, caps, spec.noise_sigma, seed ^ 0x9e3779b97f4a7c15ULL);
  out.first.provenance = "synthetic:" + std::to_string(seed);
  return out;
}

}  // namespace dds
