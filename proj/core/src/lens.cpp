#include "aberray/lens.hpp"

#include <cmath>
#include <limits>

#include "aberray/error.hpp"

namespace aberray {

double Material::index_at(double wavelength_nm, Dispersion model) const {
  if (model == Dispersion::kNone || abbe_number <= 0.0) return refractive_index_d;
  auto inv_sq = [](double nm) { return 1.0 / (nm * nm); };
  const double span = inv_sq(kFLineNm) - inv_sq(kCLineNm);
  return refractive_index_d +
         (refractive_index_d - 1.0) / abbe_number * (inv_sq(wavelength_nm) - inv_sq(kDLineNm)) / span;
}

const char* to_string(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::kSphere:
      return "sphere";
    case SurfaceKind::kAsphere:
      return "asphere";
    case SurfaceKind::kApertureStop:
      return "aper";
  }
  return "?";
}

double Surface::sag(double rho) const {
  const double c = curvature();
  const double q = 1.0 - (1.0 + conic) * c * c * rho;
  if (q < 0.0) return std::numeric_limits<double>::quiet_NaN();
  double z = c * rho / (1.0 + std::sqrt(q));
  if (kind == SurfaceKind::kAsphere) {
    // alpha_4 rho^2 + alpha_6 rho^3 + ... (Horner in rho).
    double poly = 0.0;
    for (int i = 4; i >= 0; --i) poly = poly * rho + aspheric[i];
    z += poly * rho * rho;
  }
  return z;
}

double Surface::sag_slope(double rho) const {
  const double c = curvature();
  const double q = 1.0 - (1.0 + conic) * c * c * rho;
  if (q <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  double slope = c / (2.0 * std::sqrt(q));
  if (kind == SurfaceKind::kAsphere) {
    double poly = 0.0;
    for (int i = 4; i >= 0; --i) poly = poly * rho + (i + 2) * aspheric[i];
    slope += poly * rho;
  }
  return slope;
}

void LensPrescription::validate() const {
  if (surfaces.size() < 2) throw ValidationError("lens '" + name + "' needs at least 2 surfaces");
  if (!(sensor_distance_mm > 0.0)) throw ValidationError("sensor_distance_mm must be > 0");
  if (!(sensor_width_mm > 0.0) || !(sensor_height_mm > 0.0))
    throw ValidationError("sensor dimensions must be > 0");
  if (!(design_wavelength_nm > 0.0)) throw ValidationError("design_wavelength_nm must be > 0");

  int stops = 0;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const Surface& s = surfaces[i];
    const std::string where = "surface " + std::to_string(i + 1) + ": ";
    if (!(s.semi_diameter > 0.0)) throw ValidationError(where + "semi_diameter must be > 0");
    if (!(s.thickness >= 0.0)) throw ValidationError(where + "thickness must be >= 0");
    if (!std::isfinite(s.radius) || !std::isfinite(s.conic))
      throw ValidationError(where + "non-finite radius or conic");
    if (s.kind == SurfaceKind::kApertureStop) {
      ++stops;
      if (s.material_after) throw ValidationError(where + "aperture stop cannot carry a material");
      if (s.radius != 0.0) throw ValidationError(where + "aperture stop must be planar");
    }
    if (s.kind != SurfaceKind::kAsphere) {
      for (double a : s.aspheric)
        if (a != 0.0) throw ValidationError(where + "aspheric coefficients on a non-asphere");
    }
    if (s.material_after) {
      const Material& m = *s.material_after;
      if (!(m.refractive_index_d >= 1.0)) throw ValidationError(where + "refractive index < 1");
      if (!(m.abbe_number > 0.0)) throw ValidationError(where + "Abbe number must be > 0");
    }
  }
  if (stops != 1)
    throw ValidationError("lens '" + name + "' must have exactly one aperture stop, found " +
                          std::to_string(stops));
}

std::size_t LensPrescription::stop_index() const {
  for (std::size_t i = 0; i < surfaces.size(); ++i)
    if (surfaces[i].kind == SurfaceKind::kApertureStop) return i;
  throw ValidationError("lens has no aperture stop");
}

double LensPrescription::vertex_z(std::size_t surface) const {
  double z = 0.0;
  for (std::size_t i = 0; i < surface; ++i) z += surfaces[i].thickness;
  return z;
}

double LensPrescription::sensor_z() const {
  return vertex_z(surfaces.size() - 1) + sensor_distance_mm;
}

double LensPrescription::index_after(std::size_t surface, double wavelength_nm) const {
  const auto& m = surfaces[surface].material_after;
  return m ? m->index_at(wavelength_nm, dispersion) : 1.0;
}

}  // namespace aberray
