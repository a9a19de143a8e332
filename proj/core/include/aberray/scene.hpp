#pragma once

#include <cstdint>

#include "aberray/render.hpp"

namespace aberray {

/// Synthetic RGBD test scenes: fronto-parallel tiles of random depth, each
/// carrying dense per-pixel texture so every frame has something to focus on.
struct SceneOptions {
  int width = 640;
  int height = 480;
  int tile_px = 24;
  double min_depth_m = 0.6;
  double max_depth_m = 3.0;
};

/// Tile depths are log-uniform in [min_depth_m, max_depth_m].
RgbdImage textured_tile_scene(const SceneOptions& options, std::uint64_t seed);

/// A single textured plane at constant depth.
RgbdImage textured_plane(int width, int height, double depth_m, std::uint64_t seed);

}  // namespace aberray
