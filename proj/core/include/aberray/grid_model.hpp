#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "aberray/lens.hpp"
#include "aberray/parallel.hpp"
#include "aberray/psf.hpp"

namespace aberray {

struct GridLayout {
  int depths = 20;
  int nx = 8;
  int ny = 8;
};

/// Ray-traced kernels on a lattice spanning the whole frustum: depth planes
/// evenly spaced in normalised depth, positions evenly spaced over [-1, 1]
/// in normalised x and y, one lattice per stored focus distance.
struct GridModel {
  std::vector<double> focus_m;  // ascending
  std::vector<double> z_norm;   // ascending, 0 .. 1
  std::vector<double> x_norm;   // ascending, -1 .. 1
  std::vector<double> y_norm;
  int k = kDefaultPsfSize;
  double pixel_pitch_mm = 0.05;
  Frustum frustum;
  std::vector<double> kernels;  // [focus][z][y][x][k*k]

  std::size_t index(std::size_t f, std::size_t z, std::size_t y, std::size_t x) const {
    return ((f * z_norm.size() + z) * y_norm.size() + y) * x_norm.size() + x;
  }
  PsfGrid stored(std::size_t f, std::size_t z, std::size_t y, std::size_t x) const;
  std::size_t nearest_focus(double focus_m) const;
};

GridModel build_grid_model(const LensPrescription& lens, const std::vector<double>& focus_samples_m,
                           const GridLayout& layout, std::size_t spp, std::uint64_t seed,
                           double pixel_pitch_mm, int k = kDefaultPsfSize,
                           DepthNorm depth_norm = DepthNorm::kLinear,
                           const Executor& executor = Executor::serial());

/// Corner indices and weights of the trilinear blend (x fastest).
struct TrilinearStencil {
  std::size_t focus = 0;
  std::array<std::size_t, 3> lower{};  // z, y, x
  std::array<double, 3> t{};           // fractional offsets in z, y, x
  double weight(int corner) const;     // corner bits: 4 = z, 2 = y, 1 = x
};

/// Stored as a PSFG dataset, one record per lattice node in [focus][z][y][x]
/// order. Loading rebuilds the even lattice from the distinct coordinates.
void save_grid_model(const std::filesystem::path& path, const GridModel& model);
GridModel load_grid_model(const std::filesystem::path& path, const LensPrescription& lens,
                          double pixel_pitch_mm, DepthNorm depth_norm = DepthNorm::kLinear);

/// Throws ValidationError for queries outside the lattice hull.
TrilinearStencil grid_stencil(const GridModel& model, const ObjectQuery& query);

/// Trilinear blend of the eight surrounding kernels at the nearest stored
/// focus, renormalised to unit sum.
PsfGrid grid_query(const GridModel& model, const ObjectQuery& query);

}  // namespace aberray
