#include "aberray/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aberray/error.hpp"
#include "aberray/rng.hpp"

namespace aberray {
namespace {

constexpr int kMaxNewtonIterations = 32;
constexpr double kSagTolerance = 1e-12;

// f(t) = sag(rho(t)) - z(t) in the surface's local frame.
struct SagResidual {
  const Surface& surface;
  const Vec3& p;
  const Vec3& d;

  double value(double t) const {
    const Vec3 q = p + t * d;
    return surface.sag(q.x() * q.x() + q.y() * q.y()) - q.z();
  }
  double derivative(double t) const {
    const Vec3 q = p + t * d;
    const double rho = q.x() * q.x() + q.y() * q.y();
    return surface.sag_slope(rho) * 2.0 * (q.x() * d.x() + q.y() * d.y()) - d.z();
  }
};

std::optional<double> newton(const SagResidual& f, double t) {
  for (int i = 0; i < kMaxNewtonIterations; ++i) {
    const double value = f.value(t);
    if (!std::isfinite(value)) return std::nullopt;
    if (std::abs(value) < kSagTolerance) return t;
    const double slope = f.derivative(t);
    if (!std::isfinite(slope) || slope == 0.0) return std::nullopt;
    t -= value / slope;
  }
  const double value = f.value(t);
  if (std::isfinite(value) && std::abs(value) < 1e-10) return t;
  return std::nullopt;
}

// Bisection between the vertex-plane hit and the plane at the sag of that
// hit's radius, then a Newton polish.
std::optional<double> bisect(const SagResidual& f, double t_plane) {
  const Vec3 q = f.p + t_plane * f.d;
  const double z_sag = f.surface.sag(q.x() * q.x() + q.y() * q.y());
  if (!std::isfinite(z_sag)) return std::nullopt;
  double lo = t_plane;
  double hi = t_plane + z_sag / f.d.z();
  double f_lo = f.value(lo);
  double f_hi = f.value(hi);
  if (!std::isfinite(f_lo) || !std::isfinite(f_hi) || f_lo * f_hi > 0.0) return std::nullopt;
  for (int i = 0; i < 80 && std::abs(hi - lo) > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f.value(mid);
    if (!std::isfinite(f_mid)) return std::nullopt;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return newton(f, 0.5 * (lo + hi));
}

// Branch-free sphere/plane intersection plus refraction over a ray batch. On
// a sphere c|q|^2 - 2 q_z = 0 the vector (c qx, c qy, c qz - 1) is already
// unit length, and with c = 0 it is the plane normal.
struct SphereStep {
  double c;
  double vz;
  double semi_sq;
  double eta;

  template <bool kRefract>
  void run(std::size_t n, double* __restrict ox, double* __restrict oy, double* __restrict oz,
           double* __restrict dx, double* __restrict dy, double* __restrict dz,
           unsigned char* __restrict alive) const {
    for (std::size_t k = 0; k < n; ++k) {
      const double px = ox[k];
      const double py = oy[k];
      const double pz = oz[k] - vz;
      const double half_b = c * (px * dx[k] + py * dy[k] + pz * dz[k]) - dz[k];
      const double cc = c * (px * px + py * py + pz * pz) - 2.0 * pz;
      const double disc = half_b * half_b - c * cc;
      const double root = std::sqrt(std::max(disc, 0.0));
      const double denom = -half_b + std::copysign(root, -half_b);
      const double t = cc / denom;
      const double qx = px + t * dx[k];
      const double qy = py + t * dy[k];
      const double qz = pz + t * dz[k];
      int ok = (disc >= 0.0) & (denom != 0.0) & (t > -1e-9) & (qx * qx + qy * qy <= semi_sq);

      double ndx = dx[k];
      double ndy = dy[k];
      double ndz = dz[k];
      if constexpr (kRefract) {
        const double nx = c * qx;
        const double ny = c * qy;
        const double nz = c * qz - 1.0;
        const double cos_raw = -(ndx * nx + ndy * ny + ndz * nz);
        const double flip = std::copysign(1.0, cos_raw);
        const double cos_i = cos_raw * flip;
        const double kk = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
        const double scale = (eta * cos_i - std::sqrt(std::max(kk, 0.0))) * flip;
        ndx = eta * ndx + scale * nx;
        ndy = eta * ndy + scale * ny;
        ndz = eta * ndz + scale * nz;
        ok &= (kk >= 0.0) & (ndz > 0.0);
      }
      ox[k] = qx;
      oy[k] = qy;
      oz[k] = qz + vz;
      dx[k] = ndx;
      dy[k] = ndy;
      dz[k] = ndz;
      alive[k] = static_cast<unsigned char>(alive[k] & ok);
    }
  }
};

}  // namespace

std::optional<SurfaceHit> intersect_surface(const Ray& ray, const Surface& surface,
                                            double vertex_z_mm) {
  const Vec3 p = ray.origin - Vec3(0.0, 0.0, vertex_z_mm);
  const Vec3& d = ray.direction;
  if (d.z() == 0.0) return std::nullopt;
  const double t_plane = -p.z() / d.z();

  double t = t_plane;
  if (surface.kind == SurfaceKind::kAsphere) {
    const SagResidual f{surface, p, d};
    auto root = newton(f, t_plane);
    if (!root) root = bisect(f, t_plane);
    if (!root) return std::nullopt;
    t = *root;
  } else if (!surface.planar()) {
    // c|q|^2 - 2 q_z = 0 along q = p + t d, solved with the root that
    // degenerates to the vertex plane as c -> 0.
    const double c = surface.curvature();
    const double half_b = c * p.dot(d) - d.z();
    const double cc = c * p.squaredNorm() - 2.0 * p.z();
    const double disc = half_b * half_b - c * cc;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    const double denom = -half_b >= 0.0 ? -half_b + root : -half_b - root;
    if (denom == 0.0) return std::nullopt;
    t = cc / denom;
  }
  if (t < -1e-9) return std::nullopt;

  const Vec3 local = p + t * d;
  const double rho = local.x() * local.x() + local.y() * local.y();
  if (rho > surface.semi_diameter * surface.semi_diameter) return std::nullopt;

  SurfaceHit hit;
  hit.point = local + Vec3(0.0, 0.0, vertex_z_mm);
  if (surface.planar() && surface.kind != SurfaceKind::kAsphere) {
    hit.normal = Vec3(0.0, 0.0, -1.0);
  } else {
    const double slope = surface.sag_slope(rho);
    if (!std::isfinite(slope)) return std::nullopt;
    hit.normal = Vec3(2.0 * local.x() * slope, 2.0 * local.y() * slope, -1.0).normalized();
  }
  return hit;
}

std::optional<Vec3> refract(const Vec3& direction, const Vec3& normal, double n_in,
                            double n_out) {
  Vec3 n = normal;
  double cos_i = -direction.dot(n);
  if (cos_i < 0.0) {
    n = -n;
    cos_i = -cos_i;
  }
  const double eta = n_in / n_out;
  const double k = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
  if (k < 0.0) return std::nullopt;
  return (eta * direction + (eta * cos_i - std::sqrt(k)) * n).normalized();
}

Vec2 concentric_disk(double u, double v) {
  const double a = 2.0 * u - 1.0;
  const double b = 2.0 * v - 1.0;
  if (a == 0.0 && b == 0.0) return Vec2::Zero();
  constexpr double kQuarterPi = std::numbers::pi / 4.0;
  double r;
  double phi;
  if (std::abs(a) > std::abs(b)) {
    r = a;
    phi = kQuarterPi * (b / a);
  } else {
    r = b;
    phi = 2.0 * kQuarterPi - kQuarterPi * (a / b);
  }
  return {r * std::cos(phi), r * std::sin(phi)};
}

double SpotDiagram::rms_radius() const {
  if (hits.empty()) return 0.0;
  const Vec2 c = centroid();
  double sum = 0.0;
  for (const SpotHit& h : hits) sum += (h.x - c.x()) * (h.x - c.x()) + (h.y - c.y()) * (h.y - c.y());
  return std::sqrt(sum / static_cast<double>(hits.size()));
}

Vec2 SpotDiagram::centroid() const {
  Vec2 c = Vec2::Zero();
  if (hits.empty()) return c;
  for (const SpotHit& h : hits) c += Vec2(h.x, h.y);
  return c / static_cast<double>(hits.size());
}

Vec3 source_to_lens_frame(const Vec3& source_m) {
  return {source_m.x() * 1000.0, source_m.y() * 1000.0, -source_m.z() * 1000.0};
}

Tracer::Tracer(LensPrescription lens, double focus_distance_m)
    : lens_(std::move(lens)), focus_distance_m_(focus_distance_m) {
  lens_.validate();
  const double wl = lens_.design_wavelength_nm;
  paraxial_ = paraxial_analyze(lens_, wl);
  double z = 0.0;
  for (std::size_t i = 0; i < lens_.surfaces.size(); ++i) {
    vertex_z_.push_back(z);
    index_after_.push_back(lens_.index_after(i, wl));
    z += lens_.surfaces[i].thickness;
  }
  sensor_z_ = vertex_z_.back() + lens_.sensor_distance_mm;
  pupil_z_ = paraxial_.entrance_pupil_distance_mm;
  pupil_radius_ = paraxial_.entrance_pupil_diameter_mm / 2.0;
}

bool Tracer::propagate(Ray& ray) const {
  double n_in = 1.0;
  for (std::size_t i = 0; i < lens_.surfaces.size(); ++i) {
    const Surface& s = lens_.surfaces[i];
    const auto hit = intersect_surface(ray, s, vertex_z_[i]);
    if (!hit) {
      ray.alive = false;
      return false;
    }
    ray.origin = hit->point;
    const double n_out = index_after_[i];
    if (n_out != n_in) {
      const auto dir = refract(ray.direction, hit->normal, n_in, n_out);
      if (!dir || dir->z() <= 0.0) {
        ray.alive = false;
        return false;
      }
      ray.direction = *dir;
    }
    n_in = n_out;
  }
  return true;
}

void Tracer::Batch::resize(std::size_t n) {
  for (auto* v : {&ox, &oy, &oz, &dx, &dy, &dz}) v->assign(n, 0.0);
  alive.assign(n, 1);
}

void Tracer::propagate(Batch& b) const {
  const std::size_t n = b.size();
  double* __restrict ox = b.ox.data();
  double* __restrict oy = b.oy.data();
  double* __restrict oz = b.oz.data();
  double* __restrict dx = b.dx.data();
  double* __restrict dy = b.dy.data();
  double* __restrict dz = b.dz.data();
  unsigned char* __restrict alive = b.alive.data();

  double n_in = 1.0;
  for (std::size_t i = 0; i < lens_.surfaces.size(); ++i) {
    const Surface& s = lens_.surfaces[i];
    const double vz = vertex_z_[i];
    const double n_out = index_after_[i];

    if (s.kind == SurfaceKind::kAsphere) {
      for (std::size_t k = 0; k < n; ++k) {
        if (!alive[k]) continue;
        Ray ray;
        ray.origin = Vec3(ox[k], oy[k], oz[k]);
        ray.direction = Vec3(dx[k], dy[k], dz[k]);
        const auto hit = intersect_surface(ray, s, vz);
        if (!hit) {
          alive[k] = 0;
          continue;
        }
        Vec3 d = ray.direction;
        if (n_out != n_in) {
          const auto dir = refract(d, hit->normal, n_in, n_out);
          if (!dir || dir->z() <= 0.0) {
            alive[k] = 0;
            continue;
          }
          d = *dir;
        }
        ox[k] = hit->point.x();
        oy[k] = hit->point.y();
        oz[k] = hit->point.z();
        dx[k] = d.x();
        dy[k] = d.y();
        dz[k] = d.z();
      }
      n_in = n_out;
      continue;
    }

    const SphereStep step{s.curvature(), vz, s.semi_diameter * s.semi_diameter, n_in / n_out};
    if (n_out != n_in) {
      step.run<true>(n, ox, oy, oz, dx, dy, dz, alive);
    } else {
      step.run<false>(n, ox, oy, oz, dx, dy, dz, alive);
    }
    n_in = n_out;
  }
}

std::optional<SpotHit> Tracer::to_sensor(const Ray& ray) const {
  if (!ray.alive || ray.direction.z() <= 0.0) return std::nullopt;
  const double t = (sensor_z_ - ray.origin.z()) / ray.direction.z();
  const Vec3 p = ray.origin + t * ray.direction;
  SpotHit hit{p.x(), p.y(), true};
  hit.on_sensor = std::abs(hit.x) <= lens_.sensor_width_mm / 2.0 &&
                  std::abs(hit.y) <= lens_.sensor_height_mm / 2.0;
  return hit;
}

Ray Tracer::launch(const Vec3& source_mm, const Vec2& pupil_point_mm) const {
  Ray ray;
  ray.origin = source_mm;
  ray.direction = (Vec3(pupil_point_mm.x(), pupil_point_mm.y(), pupil_z_) - source_mm).normalized();
  ray.wavelength_nm = lens_.design_wavelength_nm;
  return ray;
}

SpotDiagram Tracer::trace_point(const Vec3& source_m, std::size_t spp, std::uint64_t seed) const {
  if (spp == 0) throw ValidationError("spp must be >= 1");
  if (!(source_m.z() >= kMinSourceDepthM - 1e-9 && source_m.z() <= kMaxSourceDepthM + 1e-9))
    throw ValidationError("source depth " + std::to_string(source_m.z()) +
                          " m outside [0.2, 20] m");
  SpotDiagram spot;
  spot.emitted_count = spp;
  spot.source_point_m = source_m;
  spot.focus_distance_m = focus_distance_m_;
  spot.hits.reserve(spp);

  const Vec3 source_mm = source_to_lens_frame(source_m);
  const double azimuth = std::atan2(source_m.y(), source_m.x());
  const double ca = std::cos(azimuth);
  const double sa = std::sin(azimuth);

  Rng rng(seed);
  Batch batch;
  batch.resize(spp);
  for (std::size_t k = 0; k < spp; ++k) {
    const double u = rng.uniform();
    const double v = rng.uniform();
    const Vec2 disk = concentric_disk(u, v) * pupil_radius_;
    const Vec2 pupil(ca * disk.x() - sa * disk.y(), sa * disk.x() + ca * disk.y());
    const Ray ray = launch(source_mm, pupil);
    batch.ox[k] = ray.origin.x();
    batch.oy[k] = ray.origin.y();
    batch.oz[k] = ray.origin.z();
    batch.dx[k] = ray.direction.x();
    batch.dy[k] = ray.direction.y();
    batch.dz[k] = ray.direction.z();
  }
  propagate(batch);

  const double half_w = lens_.sensor_width_mm / 2.0;
  const double half_h = lens_.sensor_height_mm / 2.0;
  for (std::size_t k = 0; k < spp; ++k) {
    if (!batch.alive[k]) continue;
    const double t = (sensor_z_ - batch.oz[k]) / batch.dz[k];
    SpotHit hit{batch.ox[k] + t * batch.dx[k], batch.oy[k] + t * batch.dy[k], true};
    hit.on_sensor = std::abs(hit.x) <= half_w && std::abs(hit.y) <= half_h;
    spot.hits.push_back(hit);
  }
  return spot;
}

std::optional<Vec2> Tracer::chief_ray_landing(const Vec3& source_m) const {
  constexpr int kBundle = 16;
  const Vec3 source_mm = source_to_lens_frame(source_m);
  const double r = 1e-3 * pupil_radius_;
  Batch batch;
  batch.resize(kBundle);
  for (int k = 0; k < kBundle; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / kBundle;
    const Ray ray = launch(source_mm, Vec2(r * std::cos(phi), r * std::sin(phi)));
    batch.ox[k] = ray.origin.x();
    batch.oy[k] = ray.origin.y();
    batch.oz[k] = ray.origin.z();
    batch.dx[k] = ray.direction.x();
    batch.dy[k] = ray.direction.y();
    batch.dz[k] = ray.direction.z();
  }
  propagate(batch);
  Vec2 sum = Vec2::Zero();
  int count = 0;
  for (int k = 0; k < kBundle; ++k) {
    if (!batch.alive[k]) continue;
    const double t = (sensor_z_ - batch.oz[k]) / batch.dz[k];
    sum += Vec2(batch.ox[k] + t * batch.dx[k], batch.oy[k] + t * batch.dy[k]);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

SpotDiagram trace_point(const LensPrescription& lens, const Vec3& source_m, std::size_t spp,
                        std::uint64_t seed) {
  return Tracer(lens).trace_point(source_m, spp, seed);
}

}  // namespace aberray
