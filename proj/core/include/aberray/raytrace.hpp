#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "aberray/lens.hpp"
#include "aberray/paraxial.hpp"

namespace aberray {

inline constexpr double kMinSourceDepthM = 0.2;
inline constexpr double kMaxSourceDepthM = 20.0;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Lens frame: origin at the first vertex, +z toward the sensor, millimetres.
struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double wavelength_nm = kDefaultWavelengthNm;
  bool alive = true;
  double energy = 1.0;
};

struct SurfaceHit {
  Vec3 point;
  Vec3 normal;  ///< unit, pointing toward -z
};

/// Intersection with a centred surface whose vertex sits at z = vertex_z_mm.
/// Misses (no root, Newton failure, outside the clear aperture) yield nullopt.
std::optional<SurfaceHit> intersect_surface(const Ray& ray, const Surface& surface,
                                            double vertex_z_mm);

/// Vector Snell's law. nullopt signals total internal reflection. The normal
/// may face either way.
std::optional<Vec3> refract(const Vec3& direction, const Vec3& normal, double n_in, double n_out);

/// Maps a point of the unit square to the unit disk (Shirley-Chiu concentric map).
Vec2 concentric_disk(double u, double v);

struct SpotHit {
  double x = 0.0;  ///< sensor plane, mm
  double y = 0.0;
  bool on_sensor = true;
};

struct SpotDiagram {
  std::vector<SpotHit> hits;
  std::size_t emitted_count = 0;
  Vec3 source_point_m = Vec3::Zero();
  double focus_distance_m = std::numeric_limits<double>::quiet_NaN();

  std::size_t killed_count() const { return emitted_count - hits.size(); }
  /// RMS distance of the hits from their centroid, mm. 0 for no hits.
  double rms_radius() const;
  Vec2 centroid() const;
};

/// Object-space sources are given in metres as (x, y, depth) where depth is
/// the distance in front of the first vertex.
Vec3 source_to_lens_frame(const Vec3& source_m);

/// Precomputed tracing state for one (possibly focused) prescription.
class Tracer {
 public:
  explicit Tracer(LensPrescription lens,
                  double focus_distance_m = std::numeric_limits<double>::quiet_NaN());

  const LensPrescription& lens() const { return lens_; }
  const ParaxialSummary& paraxial() const { return paraxial_; }
  double focus_distance_m() const { return focus_distance_m_; }
  double entrance_pupil_radius_mm() const { return pupil_radius_; }
  double entrance_pupil_z_mm() const { return pupil_z_; }

  /// Sends `ray` through every surface. Returns false (and marks it dead) on
  /// a miss, TIR, or a backward-travelling ray. On success the ray sits on the
  /// last surface with its image-space direction.
  bool propagate(Ray& ray) const;

  /// Structure-of-arrays variant of propagate() for many rays at once.
  /// Spherical and planar surfaces run branch-free so the loop vectorises;
  /// aspheres fall back to the scalar Newton intersection per ray.
  struct Batch {
    std::vector<double> ox, oy, oz, dx, dy, dz;
    std::vector<unsigned char> alive;

    void resize(std::size_t n);
    std::size_t size() const { return ox.size(); }
  };
  void propagate(Batch& batch) const;

  /// Intersects a propagated ray with the sensor plane.
  std::optional<SpotHit> to_sensor(const Ray& ray) const;

  /// Ray from a lens-frame source point through a point on the entrance pupil plane.
  Ray launch(const Vec3& source_mm, const Vec2& pupil_point_mm) const;

  /// spp rays through the paraxial entrance pupil, sampled uniformly over the
  /// disk. Samples are rotated to the source azimuth so the diagram rotates
  /// with the source.
  SpotDiagram trace_point(const Vec3& source_m, std::size_t spp, std::uint64_t seed) const;

  /// Centroid of a 16-ray near-paraxial bundle around the pupil centre; the
  /// sensor position a PSF window is centred on.
  std::optional<Vec2> chief_ray_landing(const Vec3& source_m) const;

 private:
  LensPrescription lens_;
  ParaxialSummary paraxial_;
  double focus_distance_m_;
  std::vector<double> vertex_z_;
  std::vector<double> index_after_;
  double sensor_z_;
  double pupil_z_;
  double pupil_radius_;
};

/// Convenience wrapper: builds a Tracer and traces one point.
SpotDiagram trace_point(const LensPrescription& lens, const Vec3& source_m, std::size_t spp,
                        std::uint64_t seed);

}  // namespace aberray
