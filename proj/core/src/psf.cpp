#include "aberray/psf.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <sstream>

#include "aberray/error.hpp"
#include "aberray/paraxial.hpp"

namespace aberray {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::kRaytraced: return "raytraced";
    case Provenance::kGaussian: return "gaussian";
    case Provenance::kSurrogateMlp: return "surrogate_mlp";
    case Provenance::kSurrogateGrid: return "surrogate_grid";
  }
  return "unknown";
}

PsfGrid::PsfGrid(int size, double pitch_mm, Provenance prov)
    : k(size), pixel_pitch_mm(pitch_mm), provenance(prov),
      kernel(static_cast<std::size_t>(size * size), 0.0) {
  if (size < 1 || size % 2 == 0) throw ValidationError("PSF size must be odd, got " + std::to_string(size));
}

double PsfGrid::sum() const {
  double s = 0.0;
  for (double v : kernel) s += v;
  return s;
}

void PsfGrid::normalize() {
  const double s = sum();
  if (!(s > 0.0) || !std::isfinite(s)) throw NumericError("cannot normalise PSF with sum " + std::to_string(s));
  for (double& v : kernel) v /= s;
}

double PsfGrid::second_moment() const {
  const double s = sum();
  if (!(s > 0.0)) return 0.0;
  double mr = 0.0, mc = 0.0;
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) {
      mr += r * at(r, c);
      mc += c * at(r, c);
    }
  mr /= s;
  mc /= s;
  double m2 = 0.0;
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) m2 += ((r - mr) * (r - mr) + (c - mc) * (c - mc)) * at(r, c);
  return m2 / s;
}

double splat_weight(double t) { return (t >= 0.0 && t <= 1.0) ? 1.0 - t : 0.0; }

PsfGrid splat(const SpotDiagram& spot, double pixel_pitch_mm, int k, const Vec2& center_mm) {
  if (!(pixel_pitch_mm > 0.0)) throw ValidationError("pixel pitch must be positive");
  PsfGrid psf(k, pixel_pitch_mm, Provenance::kRaytraced);
  const double c = psf.center();
  for (const SpotHit& hit : spot.hits) {
    const double u = (hit.x - center_mm.x()) / pixel_pitch_mm + c;  // column coordinate
    const double v = (hit.y - center_mm.y()) / pixel_pitch_mm + c;  // row coordinate
    if (!(u > -1.0 && u < k && v > -1.0 && v < k)) continue;
    const double u0 = std::floor(u);
    const double v0 = std::floor(v);
    const double fu = u - u0;
    const double fv = v - v0;
    const int col = static_cast<int>(u0);
    const int row = static_cast<int>(v0);
    const double wc[2] = {1.0 - fu, fu};
    const double wr[2] = {1.0 - fv, fv};
    for (int a = 0; a < 2; ++a) {
      const int r = row + a;
      if (r < 0 || r >= k) continue;
      for (int b = 0; b < 2; ++b) {
        const int cc = col + b;
        if (cc < 0 || cc >= k) continue;
        psf.at(r, cc) += wr[a] * wc[b];
      }
    }
  }
  return psf;
}

PsfGrid rasterize(const SpotDiagram& spot, double pixel_pitch_mm, int k, const Vec2& center_mm) {
  PsfGrid psf = splat(spot, pixel_pitch_mm, k, center_mm);
  if (!(psf.sum() > 0.0)) {
    std::ostringstream msg;
    msg << "empty PSF for source (" << spot.source_point_m.x() << ", " << spot.source_point_m.y()
        << ", " << spot.source_point_m.z() << ") m focused at " << spot.focus_distance_m << " m";
    throw NumericError(msg.str());
  }
  psf.normalize();
  return psf;
}

double coc_diameter_mm(double focal_length_mm, double f_number, double z_m, double focus_m) {
  const double f = focal_length_mm;
  const double fd = focus_m * 1000.0;
  const double z = z_m * 1000.0;
  if (!(fd > f)) throw ValidationError("focus distance must exceed the focal length");
  if (!(z > 0.0)) throw ValidationError("object depth must be positive");
  return (f / f_number) * (std::abs(z - fd) / z) * (f / (fd - f));
}

PsfGrid gaussian_coc_psf(double focal_length_mm, double f_number, double z_m, double focus_m,
                         double pixel_pitch_mm, int k) {
  const double d = coc_diameter_mm(focal_length_mm, f_number, z_m, focus_m);
  PsfGrid psf(k, pixel_pitch_mm, Provenance::kGaussian);
  const int c = psf.center();
  if (d < pixel_pitch_mm) {
    psf.at(c, c) = 1.0;
    return psf;
  }
  const double sigma = d / 4.0;
  const double radius_sq = d * d / 4.0;
  for (int r = 0; r < k; ++r) {
    for (int col = 0; col < k; ++col) {
      const double dy = (r - c) * pixel_pitch_mm;
      const double dx = (col - c) * pixel_pitch_mm;
      const double rho_sq = dx * dx + dy * dy;
      if (rho_sq <= radius_sq) psf.at(r, col) = std::exp(-rho_sq / (2.0 * sigma * sigma));
    }
  }
  psf.normalize();
  return psf;
}

Frustum Frustum::for_lens(const LensPrescription& lens, DepthNorm norm) {
  const ParaxialSummary p = paraxial_analyze(lens, lens.design_wavelength_nm);
  Frustum f;
  f.tan_half_x = lens.sensor_width_mm / 2.0 / std::abs(p.effective_focal_length_mm);
  f.tan_half_y = lens.sensor_height_mm / 2.0 / std::abs(p.effective_focal_length_mm);
  f.depth_norm = norm;
  return f;
}

double Frustum::normalize_depth(double z_m) const {
  if (depth_norm == DepthNorm::kInverse)
    return (1.0 / min_depth_m - 1.0 / z_m) / (1.0 / min_depth_m - 1.0 / max_depth_m);
  return (z_m - min_depth_m) / (max_depth_m - min_depth_m);
}

double Frustum::denormalize_depth(double z_norm) const {
  if (depth_norm == DepthNorm::kInverse)
    return 1.0 / (1.0 / min_depth_m - z_norm * (1.0 / min_depth_m - 1.0 / max_depth_m));
  return min_depth_m + z_norm * (max_depth_m - min_depth_m);
}

namespace {

void check_depth(double v, const char* what, const Frustum& f) {
  constexpr double kSlack = 1e-9;
  if (!(v >= f.min_depth_m - kSlack && v <= f.max_depth_m + kSlack))
    throw ValidationError(std::string(what) + " " + std::to_string(v) + " m outside [" +
                          std::to_string(f.min_depth_m) + ", " + std::to_string(f.max_depth_m) +
                          "] m");
}

}  // namespace

ObjectQuery normalize_query(double x_m, double y_m, double z_m, double focus_m,
                            const Frustum& frustum) {
  check_depth(z_m, "depth", frustum);
  check_depth(focus_m, "focus distance", frustum);
  ObjectQuery q;
  q.x_m = x_m;
  q.y_m = y_m;
  q.z_m = z_m;
  q.focus_m = focus_m;
  q.x_norm = x_m / (z_m * frustum.tan_half_x);
  q.y_norm = y_m / (z_m * frustum.tan_half_y);
  q.z_norm = frustum.normalize_depth(z_m);
  q.focus_norm = frustum.normalize_depth(focus_m);
  if (std::abs(q.x_norm) > 1.0 + 1e-12 || std::abs(q.y_norm) > 1.0 + 1e-12)
    throw ValidationError("point outside the frustum: " + describe(q));
  return q;
}

ObjectQuery query_from_normalized(double x_norm, double y_norm, double z_m, double focus_m,
                                  const Frustum& frustum) {
  ObjectQuery q = normalize_query(x_norm * z_m * frustum.tan_half_x,
                                  y_norm * z_m * frustum.tan_half_y, z_m, focus_m, frustum);
  // Keep the caller's normalised values exactly rather than the round trip.
  q.x_norm = x_norm;
  q.y_norm = y_norm;
  return q;
}

PsfGrid raytraced_psf(const Tracer& focused, const ObjectQuery& query, std::size_t spp,
                      std::uint64_t seed, double pixel_pitch_mm, int k) {
  const Vec3 source = query.source_m();
  SpotDiagram spot = focused.trace_point(source, spp, seed);
  Vec2 center;
  if (auto chief = focused.chief_ray_landing(source)) {
    center = *chief;
  } else {
    center = spot.centroid();
  }
  PsfGrid psf = splat(spot, pixel_pitch_mm, k, center);
  for (std::size_t boost = 4; !(psf.sum() > 0.0) && boost <= 16; boost *= 4) {
    spdlog::debug("no rays in PSF window for {}; retracing with {}x rays", describe(query), boost);
    spot = focused.trace_point(source, spp * boost, seed ^ boost);
    psf = splat(spot, pixel_pitch_mm, k, center);
  }
  if (!(psf.sum() > 0.0)) throw NumericError("empty PSF for " + describe(query));
  psf.normalize();
  return psf;
}

std::string describe(const ObjectQuery& q) {
  std::ostringstream s;
  s << "point (" << q.x_m << ", " << q.y_m << ", " << q.z_m << ") m focused at " << q.focus_m
    << " m";
  return s.str();
}

}  // namespace aberray
