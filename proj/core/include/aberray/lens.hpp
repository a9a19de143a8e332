#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace aberray {

/// Helium d-line, the wavelength at which catalog indices are tabulated.
inline constexpr double kDLineNm = 587.56;
inline constexpr double kFLineNm = 486.13;
inline constexpr double kCLineNm = 656.27;

/// Simulation wavelength used throughout the experiments.
inline constexpr double kDefaultWavelengthNm = 589.0;

enum class Dispersion {
  kNone,        ///< n(lambda) = n_d for every wavelength
  kAbbeLinear,  ///< linear in 1/lambda^2 through n_d with slope from V
};

struct Material {
  double refractive_index_d = 1.0;
  double abbe_number = 0.0;
  std::string name;

  double index_at(double wavelength_nm, Dispersion model) const;

  bool operator==(const Material&) const = default;
};

enum class SurfaceKind { kSphere, kAsphere, kApertureStop };

const char* to_string(SurfaceKind kind);

/// Even asphere coefficient orders, in storage order.
inline constexpr std::array<int, 5> kAsphereOrders = {4, 6, 8, 10, 12};

struct Surface {
  SurfaceKind kind = SurfaceKind::kSphere;
  double radius = 0.0;  ///< mm; 0 means planar
  double thickness = 0.0;
  double semi_diameter = 0.0;
  double conic = 0.0;
  std::array<double, 5> aspheric{};  ///< alpha_4 .. alpha_12, mm^(1-order)
  std::optional<Material> material_after;

  double curvature() const { return radius == 0.0 ? 0.0 : 1.0 / radius; }
  bool planar() const { return radius == 0.0; }

  /// Axial sag z(r) for rho = r^2. Returns NaN outside the conic's domain.
  double sag(double rho) const;
  /// dz/d(rho). NaN outside the domain.
  double sag_slope(double rho) const;

  bool operator==(const Surface&) const = default;
};

/// A sequential, rotationally symmetric lens, object side first. Distances are
/// in millimetres along +z (toward the sensor) from the first vertex.
class LensPrescription {
 public:
  std::string name;
  std::vector<Surface> surfaces;
  double sensor_width_mm = 32.0;
  double sensor_height_mm = 24.0;
  double sensor_distance_mm = 0.0;  ///< last vertex to sensor plane
  double design_wavelength_nm = kDefaultWavelengthNm;
  Dispersion dispersion = Dispersion::kNone;

  /// Throws ValidationError on any invariant violation.
  void validate() const;

  std::size_t stop_index() const;
  double vertex_z(std::size_t surface) const;
  double sensor_z() const;

  /// Refractive index of the medium following `surface` (air when absent).
  double index_after(std::size_t surface, double wavelength_nm) const;

  bool operator==(const LensPrescription&) const = default;
};

}  // namespace aberray
