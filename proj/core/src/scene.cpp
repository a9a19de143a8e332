#include "aberray/scene.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "aberray/error.hpp"
#include "aberray/rng.hpp"

namespace aberray {
namespace {

// Value noise summed over octaves of 1 to 8 pixels, so the texture has
// energy at every scale a focus measure looks at without being dominated by
// single-pixel noise.
std::vector<double> octave_noise(int width, int height, Rng& rng) {
  constexpr std::array<int, 4> kCell = {1, 2, 4, 8};
  constexpr std::array<double, 4> kWeight = {0.2, 0.3, 0.3, 0.2};
  std::vector<double> out(static_cast<std::size_t>(width * height), 0.0);
  for (std::size_t o = 0; o < kCell.size(); ++o) {
    const int s = kCell[o];
    const int gw = width / s + 2;
    const int gh = height / s + 2;
    std::vector<double> grid(static_cast<std::size_t>(gw * gh));
    for (double& v : grid) v = rng.uniform();
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        const double gy = (r + 0.5) / s, gx = (c + 0.5) / s;
        const int y0 = static_cast<int>(gy), x0 = static_cast<int>(gx);
        const double ty = s == 1 ? 0.0 : gy - y0, tx = s == 1 ? 0.0 : gx - x0;
        auto g = [&](int y, int x) { return grid[static_cast<std::size_t>(y * gw + x)]; };
        const double v = (1 - ty) * ((1 - tx) * g(y0, x0) + tx * g(y0, x0 + 1)) +
                         ty * ((1 - tx) * g(y0 + 1, x0) + tx * g(y0 + 1, x0 + 1));
        out[static_cast<std::size_t>(r * width + c)] += kWeight[o] * v;
      }
  }
  return out;
}

Image texture(int width, int height, std::uint64_t seed, const std::vector<std::array<double, 3>>& tile_colors,
              int tile_px, int tiles_x) {
  Image rgb(width, height, 3);
  Rng rng(derive_seed(seed, "texture"));
  const std::vector<double> noise = octave_noise(width, height, rng);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const auto& base = tile_colors[static_cast<std::size_t>((r / tile_px) * tiles_x + c / tile_px)];
      const double u = 0.2 + 0.8 * noise[static_cast<std::size_t>(r * width + c)];
      for (int ch = 0; ch < 3; ++ch) rgb.at(r, c, ch) = base[static_cast<std::size_t>(ch)] * u;
    }
  return rgb;
}

}  // namespace

RgbdImage textured_tile_scene(const SceneOptions& o, std::uint64_t seed) {
  if (o.width < 1 || o.height < 1 || o.tile_px < 1) throw ValidationError("scene dimensions must be positive");
  if (!(o.min_depth_m > 0.0 && o.max_depth_m >= o.min_depth_m)) throw ValidationError("bad scene depth range");
  const int tiles_x = (o.width + o.tile_px - 1) / o.tile_px;
  const int tiles_y = (o.height + o.tile_px - 1) / o.tile_px;
  const auto n = static_cast<std::size_t>(tiles_x * tiles_y);

  Rng rng(derive_seed(seed, "tiles"));
  std::vector<std::array<double, 3>> colors(n);
  std::vector<double> depths(n);
  const double log_lo = std::log(o.min_depth_m), log_hi = std::log(o.max_depth_m);
  for (std::size_t t = 0; t < n; ++t) {
    for (double& v : colors[t]) v = rng.uniform(0.3, 1.0);
    depths[t] = std::exp(rng.uniform(log_lo, log_hi));
  }

  Image depth(o.width, o.height, 1);
  for (int r = 0; r < o.height; ++r)
    for (int c = 0; c < o.width; ++c)
      depth.at(r, c) = depths[static_cast<std::size_t>((r / o.tile_px) * tiles_x + c / o.tile_px)];
  return make_rgbd(texture(o.width, o.height, seed, colors, o.tile_px, tiles_x), std::move(depth));
}

RgbdImage textured_plane(int width, int height, double depth_m, std::uint64_t seed) {
  if (width < 1 || height < 1) throw ValidationError("scene dimensions must be positive");
  Image rgb = texture(width, height, seed, {{0.8, 0.8, 0.8}}, std::max(width, height), 1);
  return make_rgbd(std::move(rgb), Image(width, height, 1, depth_m));
}

}  // namespace aberray
