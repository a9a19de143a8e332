#include "aberray/paraxial.hpp"

#include <cmath>

#include "aberray/error.hpp"

namespace aberray {
namespace {

struct ParaxialRay {
  double y;
  double u;
};

// Traces from the first vertex through surfaces [0, end). Stops at the vertex
// of surface `end - 1` after refraction when `transfer_last` is false.
ParaxialRay trace(const LensPrescription& lens, ParaxialRay ray, std::size_t end,
                  double wavelength_nm, bool transfer_last) {
  double n = 1.0;
  for (std::size_t i = 0; i < end; ++i) {
    const Surface& s = lens.surfaces[i];
    const double n2 = lens.index_after(i, wavelength_nm);
    ray.u = (n * ray.u - ray.y * s.curvature() * (n2 - n)) / n2;
    n = n2;
    if (i + 1 < end || transfer_last) ray.y += s.thickness * ray.u;
  }
  return ray;
}

// Ray heights at the stop vertex.
double height_at_stop(const LensPrescription& lens, ParaxialRay ray, double wavelength_nm) {
  const std::size_t stop = lens.stop_index();
  if (stop == 0) return ray.y;
  return trace(lens, ray, stop, wavelength_nm, true).y;
}

}  // namespace

ParaxialSummary paraxial_analyze(const LensPrescription& lens, double wavelength_nm) {
  const std::size_t count = lens.surfaces.size();
  const ParaxialRay axial = trace(lens, {1.0, 0.0}, count, wavelength_nm, false);
  if (std::abs(axial.u) < 1e-12) throw NumericError("afocal system: zero optical power");

  ParaxialSummary out;
  out.effective_focal_length_mm = -1.0 / axial.u;
  out.back_focal_distance_mm = -axial.y / axial.u;

  const double stop_semi = lens.surfaces[lens.stop_index()].semi_diameter;
  const double y_a = height_at_stop(lens, {1.0, 0.0}, wavelength_nm);
  const double y_b = height_at_stop(lens, {0.0, 1.0}, wavelength_nm);
  if (std::abs(y_a) < 1e-15) throw NumericError("entrance pupil at infinity");

  out.entrance_pupil_diameter_mm = 2.0 * stop_semi / std::abs(y_a);
  // Chief ray: y_b - (y_b / y_a) * y_a = 0 at the stop; its object-space
  // segment crosses the axis at z = y_b / y_a.
  out.entrance_pupil_distance_mm = y_b / y_a;

  const double marginal_height = out.entrance_pupil_diameter_mm / 2.0;
  const ParaxialRay marginal = trace(lens, {marginal_height, 0.0}, count, wavelength_nm, false);
  const double n_image = lens.index_after(count - 1, wavelength_nm);
  out.working_f_number = 1.0 / (2.0 * n_image * std::abs(marginal.u));
  return out;
}

double paraxial_image_distance(const LensPrescription& lens, double object_distance_mm,
                               double wavelength_nm) {
  const ParaxialRay ray =
      trace(lens, {1.0, 1.0 / object_distance_mm}, lens.surfaces.size(), wavelength_nm, false);
  if (std::abs(ray.u) < 1e-15) throw NumericError("image at infinity");
  return -ray.y / ray.u;
}

}  // namespace aberray
