#include "aberray/focus.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "aberray/error.hpp"
#include "aberray/paraxial.hpp"
#include "aberray/raytrace.hpp"

namespace aberray {
namespace {

constexpr int kBundleSide = 8;  // 64-ray stratified bundle
constexpr double kBracketHalfWidthMm = 2.0;
constexpr double kSensorToleranceMm = 1e-5;

// Image-space segments of the on-axis bundle; independent of sensor position.
struct Bundle {
  std::vector<Vec3> points;
  std::vector<Vec3> directions;
};

Bundle trace_bundle(const LensPrescription& lens, double object_distance_m) {
  Tracer tracer(lens);
  const Vec3 source_mm = source_to_lens_frame(Vec3(0.0, 0.0, object_distance_m));
  Bundle bundle;
  for (int i = 0; i < kBundleSide; ++i) {
    for (int j = 0; j < kBundleSide; ++j) {
      const Vec2 disk = concentric_disk((i + 0.5) / kBundleSide, (j + 0.5) / kBundleSide) *
                        tracer.entrance_pupil_radius_mm();
      Ray ray = tracer.launch(source_mm, disk);
      if (!tracer.propagate(ray)) continue;
      bundle.points.push_back(ray.origin);
      bundle.directions.push_back(ray.direction);
    }
  }
  if (bundle.points.size() < kBundleSide)
    throw NumericError("on-axis bundle almost entirely vignetted");
  return bundle;
}

double rms_at(const Bundle& bundle, double sensor_z) {
  const std::size_t n = bundle.points.size();
  std::vector<Vec2> hits(n);
  Vec2 centroid = Vec2::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (sensor_z - bundle.points[k].z()) / bundle.directions[k].z();
    const Vec3 p = bundle.points[k] + t * bundle.directions[k];
    hits[k] = p.head<2>();
    centroid += hits[k];
  }
  centroid /= static_cast<double>(n);
  double sum = 0.0;
  for (const Vec2& h : hits) sum += (h - centroid).squaredNorm();
  return std::sqrt(sum / static_cast<double>(n));
}

}  // namespace

double on_axis_rms_radius(const LensPrescription& lens, double object_distance_m,
                          double sensor_distance_mm) {
  const Bundle bundle = trace_bundle(lens, object_distance_m);
  return rms_at(bundle, lens.vertex_z(lens.surfaces.size() - 1) + sensor_distance_mm);
}

LensPrescription focus_to(const LensPrescription& lens, double focus_distance_m) {
  if (!(focus_distance_m >= kMinDepthM && focus_distance_m <= kMaxDepthM))
    throw ValidationError("focus distance " + std::to_string(focus_distance_m) +
                          " m outside [0.2, 20] m");

  const double seed =
      paraxial_image_distance(lens, focus_distance_m * 1000.0, lens.design_wavelength_nm);
  const Bundle bundle = trace_bundle(lens, focus_distance_m);
  const double last_vertex = lens.vertex_z(lens.surfaces.size() - 1);

  // Golden-section search; RMS radius is unimodal in sensor position.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::max(1e-3, seed - kBracketHalfWidthMm);
  double hi = seed + kBracketHalfWidthMm;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = rms_at(bundle, last_vertex + x1);
  double f2 = rms_at(bundle, last_vertex + x2);
  const double bracket_lo = lo;
  const double bracket_hi = hi;
  while (hi - lo > kSensorToleranceMm) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = rms_at(bundle, last_vertex + x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = rms_at(bundle, last_vertex + x2);
    }
  }
  const double best = 0.5 * (lo + hi);
  if (best - bracket_lo < 2.0 * kSensorToleranceMm || bracket_hi - best < 2.0 * kSensorToleranceMm)
    throw NumericError("focus search hit the bracket edge; paraxial seed was " +
                       std::to_string(seed) + " mm");

  LensPrescription focused = lens;
  focused.sensor_distance_mm = best;
  return focused;
}

Tracer focused_tracer(const LensPrescription& lens, double focus_distance_m) {
  return Tracer(focus_to(lens, focus_distance_m), focus_distance_m);
}

}  // namespace aberray
