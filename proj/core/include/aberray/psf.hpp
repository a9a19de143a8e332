#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "aberray/lens.hpp"
#include "aberray/raytrace.hpp"

namespace aberray {

inline constexpr int kDefaultPsfSize = 11;

enum class Provenance { kRaytraced, kGaussian, kSurrogateMlp, kSurrogateGrid };

const char* to_string(Provenance p);

/// k x k kernel on the sensor pixel lattice. Row index grows with sensor +y,
/// column index with sensor +x; entry (k/2, k/2) is the chief-ray pixel.
struct PsfGrid {
  int k = kDefaultPsfSize;
  double pixel_pitch_mm = 0.0;
  Provenance provenance = Provenance::kRaytraced;
  std::vector<double> kernel;  // row-major

  PsfGrid() = default;
  PsfGrid(int size, double pitch_mm, Provenance prov);

  double& at(int row, int col) { return kernel[static_cast<std::size_t>(row * k + col)]; }
  double at(int row, int col) const { return kernel[static_cast<std::size_t>(row * k + col)]; }
  int center() const { return k / 2; }
  double sum() const;
  /// Scales to unit sum. Throws NumericError if the sum is not positive.
  void normalize();
  /// Mean squared distance from the kernel centroid, in pixels^2.
  double second_moment() const;
};

/// The tent function 1 - t on [0, 1], zero beyond.
double splat_weight(double t);

/// Unnormalised splat of every hit onto the k x k window whose centre pixel
/// is centred on `center_mm` (sensor coordinates). Each hit spreads over the
/// four nearest pixel centres; parts falling outside the window are dropped.
PsfGrid splat(const SpotDiagram& spot, double pixel_pitch_mm, int k, const Vec2& center_mm);

/// splat() followed by normalisation. Throws NumericError("empty PSF ...")
/// when nothing lands in the window.
PsfGrid rasterize(const SpotDiagram& spot, double pixel_pitch_mm, int k, const Vec2& center_mm);

/// Thin-lens circle-of-confusion diameter in mm.
double coc_diameter_mm(double focal_length_mm, double f_number, double z_m, double focus_m);

/// Isotropic Gaussian (sigma = D/4) truncated at radius D/2, evaluated at
/// pixel centres. Degenerates to a centre delta when D < pitch.
PsfGrid gaussian_coc_psf(double focal_length_mm, double f_number, double z_m, double focus_m,
                         double pixel_pitch_mm, int k = kDefaultPsfSize);

enum class DepthNorm { kLinear, kInverse };

/// Object-space imaging volume. The apex sits on the first vertex; the
/// cross-section at depth z spans +-z*tan_half_x by +-z*tan_half_y.
struct Frustum {
  double tan_half_x = 0.0;
  double tan_half_y = 0.0;
  double min_depth_m = 0.2;
  double max_depth_m = 20.0;
  DepthNorm depth_norm = DepthNorm::kLinear;

  /// Half-FoV from the sensor half-extent over the paraxial focal length.
  static Frustum for_lens(const LensPrescription& lens, DepthNorm norm = DepthNorm::kLinear);

  double normalize_depth(double z_m) const;
  double denormalize_depth(double z_norm) const;
};

struct ObjectQuery {
  double x_norm = 0.0;
  double y_norm = 0.0;
  double z_norm = 0.0;
  double focus_norm = 0.0;
  double x_m = 0.0;
  double y_m = 0.0;
  double z_m = 0.0;
  double focus_m = 0.0;

  Vec3 source_m() const { return {x_m, y_m, z_m}; }
};

/// Metric to normalised. Throws ValidationError outside the frustum.
ObjectQuery normalize_query(double x_m, double y_m, double z_m, double focus_m,
                            const Frustum& frustum);

/// Normalised lateral position with metric depth and focus.
ObjectQuery query_from_normalized(double x_norm, double y_norm, double z_m, double focus_m,
                                  const Frustum& frustum);

/// Ray-traced PSF of one object point through a tracer that is already
/// focused at query.focus_m. The window is centred on the chief-ray landing.
/// If nothing lands in the window the point is re-traced with 4x and then
/// 16x the rays before giving up.
PsfGrid raytraced_psf(const Tracer& focused, const ObjectQuery& query, std::size_t spp,
                      std::uint64_t seed, double pixel_pitch_mm, int k = kDefaultPsfSize);

std::string describe(const ObjectQuery& q);

}  // namespace aberray
