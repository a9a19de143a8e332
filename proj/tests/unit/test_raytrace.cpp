#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "aberray/error.hpp"
#include "aberray/focus.hpp"
#include "aberray/raytrace.hpp"
#include "aberray/rng.hpp"
#include "test_support.hpp"

namespace aberray {
namespace {

using testing::canon;
using testing::lensnet;

Ray make_ray(const Vec3& origin, const Vec3& direction) {
  Ray r;
  r.origin = origin;
  r.direction = direction.normalized();
  return r;
}

TEST(Intersect, AxialRayHitsEveryVertexHeadOn) {
  const LensPrescription& lens = canon();
  for (std::size_t i = 0; i < lens.surfaces.size(); ++i) {
    const double vz = lens.vertex_z(i);
    const auto hit = intersect_surface(make_ray({0, 0, vz - 5.0}, {0, 0, 1}), lens.surfaces[i], vz);
    ASSERT_TRUE(hit) << "surface " << i + 1;
    EXPECT_NEAR((hit->point - Vec3(0, 0, vz)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((hit->normal - Vec3(0, 0, -1)).norm(), 0.0, 1e-12);
  }
}

TEST(Intersect, PlainAsphereFollowsTheSpherePath) {
  Surface sphere;
  sphere.radius = -37.5;
  sphere.semi_diameter = 20.0;
  Surface asphere = sphere;
  asphere.kind = SurfaceKind::kAsphere;
  Rng rng(7);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 origin(rng.uniform(-8, 8), rng.uniform(-8, 8), -10.0);
    const Vec3 dir(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 1.0);
    const auto a = intersect_surface(make_ray(origin, dir), sphere, 2.0);
    const auto b = intersect_surface(make_ray(origin, dir), asphere, 2.0);
    ASSERT_EQ(a.has_value(), b.has_value()) << "ray " << i;
    if (!a) continue;
    ++hits;
    EXPECT_LT((a->point - b->point).norm(), 1e-7) << "ray " << i;
    EXPECT_LT((a->normal - b->normal).norm(), 1e-7) << "ray " << i;
  }
  EXPECT_GT(hits, 900);
}

TEST(Intersect, AsphereHitsSatisfyTheSagEquation) {
  const LensPrescription& lens = canon();
  Rng rng(11);
  for (std::size_t s : {8u, 9u}) {
    const Surface& surf = lens.surfaces[s];
    const double vz = lens.vertex_z(s);
    for (int i = 0; i < 500; ++i) {
      const Vec3 origin(rng.uniform(-6, 6), rng.uniform(-6, 6), vz - 4.0);
      const Vec3 dir(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 1.0);
      const auto hit = intersect_surface(make_ray(origin, dir), surf, vz);
      if (!hit) continue;
      const double rho = hit->point.x() * hit->point.x() + hit->point.y() * hit->point.y();
      EXPECT_LT(std::abs(hit->point.z() - vz - surf.sag(rho)), 1e-9);
      EXPECT_NEAR(hit->normal.norm(), 1.0, 1e-12);
      EXPECT_LT(hit->normal.z(), 0.0);
    }
  }
}

TEST(Intersect, ClearApertureClips) {
  const LensPrescription& lens = lensnet();
  for (std::size_t i = 0; i < lens.surfaces.size(); ++i) {
    const Surface& s = lens.surfaces[i];
    const double vz = lens.vertex_z(i);
    EXPECT_FALSE(intersect_surface(make_ray({1.01 * s.semi_diameter, 0, vz - 20}, {0, 0, 1}), s, vz))
        << "surface " << i + 1;
    EXPECT_TRUE(intersect_surface(make_ray({0, 0.99 * s.semi_diameter, vz - 20}, {0, 0, 1}), s, vz))
        << "surface " << i + 1;
  }
}

TEST(Refract, NormalIncidencePassesStraight) {
  const Vec3 n(0, 0, -1);
  for (double n_out : {1.0, 1.33, 1.9}) {
    const auto t = refract({0, 0, 1}, n, 1.5, n_out);
    ASSERT_TRUE(t);
    EXPECT_NEAR((*t - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
  }
}

TEST(Refract, IdentityMediumPassesStraight) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 d = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0).normalized();
    const Vec3 n = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), -1.0).normalized();
    const auto t = refract(d, n, 1.0, 1.0);
    ASSERT_TRUE(t);
    EXPECT_NEAR((*t - d).norm(), 0.0, 1e-14);
  }
}

TEST(Refract, BeyondTheCriticalAngleIsTotalInternalReflection) {
  const Vec3 n(0, 0, -1);
  const double critical = std::asin(1.0 / 1.5);
  EXPECT_NEAR(critical * 180.0 / std::numbers::pi, 41.81, 0.01);
  const double at45 = std::numbers::pi / 4.0;
  EXPECT_FALSE(refract({std::sin(at45), 0, std::cos(at45)}, n, 1.5, 1.0));
  const double below = critical - 1e-3;
  EXPECT_TRUE(refract({std::sin(below), 0, std::cos(below)}, n, 1.5, 1.0));
}

TEST(Refract, TangentialMomentumIsPreserved) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 d = Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), 1.0).normalized();
    const Vec3 n = Vec3(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), -1.0).normalized();
    const double n_in = rng.uniform(1.0, 1.9);
    const double n_out = rng.uniform(1.0, 1.9);
    const auto t = refract(d, n, n_in, n_out);
    if (!t) continue;
    EXPECT_NEAR(t->norm(), 1.0, 1e-12);
    const Vec3 tin = n_in * (d - d.dot(n) * n);
    const Vec3 tout = n_out * (*t - t->dot(n) * n);
    EXPECT_LT((tin - tout).norm(), 1e-12);
    EXPECT_GT(t->z(), 0.0);
  }
}

TEST(Sampling, ConcentricMapFillsTheDiskUniformly) {
  EXPECT_NEAR(concentric_disk(0.5, 0.5).norm(), 0.0, 1e-15);
  double mean_r2 = 0.0;
  const int n = 200;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 p = concentric_disk((i + 0.5) / n, (j + 0.5) / n);
      EXPECT_LE(p.norm(), 1.0 + 1e-12);
      mean_r2 += p.squaredNorm();
    }
  // E[r^2] = 1/2 for a uniform disk.
  EXPECT_NEAR(mean_r2 / (n * n), 0.5, 1e-3);
}

TEST(Tracer, LaunchedRaysAreUnitWithUnitEnergy) {
  const Tracer tracer(lensnet());
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Ray r = tracer.launch(source_to_lens_frame({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 1.5}),
                                {rng.uniform(-5, 5), rng.uniform(-5, 5)});
    EXPECT_NEAR(r.direction.norm(), 1.0, 1e-12);
    EXPECT_EQ(r.energy, 1.0);
    EXPECT_TRUE(r.alive);
  }
}

TEST(TracePoint, FocusedCanonOnAxisSpotIsTight) {
  const double pixel_mm = 32.0 / 960.0;
  const Tracer tracer = focused_tracer(canon(), 1.5);
  const SpotDiagram spot = tracer.trace_point({0, 0, 1.5}, 2048, 1);
  ASSERT_GT(spot.hits.size(), 1000u);
  EXPECT_LT(spot.rms_radius(), 5.0 * pixel_mm);
  EXPECT_LT(spot.centroid().norm(), 1e-3);
}

TEST(TracePoint, EnergyBookkeeping) {
  const Tracer tracer = focused_tracer(lensnet(), 1.5);
  for (const Vec3& src : {Vec3(0, 0, 1.5), Vec3(0.5, 0.3, 1.2), Vec3(-6, 4, 20.0)}) {
    const SpotDiagram spot = tracer.trace_point(src, 777, 9);
    EXPECT_EQ(spot.emitted_count, 777u);
    EXPECT_EQ(spot.hits.size() + spot.killed_count(), 777u);
    const auto& lens = tracer.lens();
    for (const SpotHit& h : spot.hits) {
      if (h.on_sensor) {
        EXPECT_LE(std::abs(h.x), lens.sensor_width_mm / 2.0);
        EXPECT_LE(std::abs(h.y), lens.sensor_height_mm / 2.0);
      }
    }
  }
}

TEST(TracePoint, IsDeterministic) {
  const Tracer tracer = focused_tracer(canon(), 2.0);
  const SpotDiagram a = tracer.trace_point({0.2, -0.1, 1.0}, 1024, 42);
  const SpotDiagram b = tracer.trace_point({0.2, -0.1, 1.0}, 1024, 42);
  ASSERT_EQ(a.hits.size(), b.hits.size());
  for (std::size_t i = 0; i < a.hits.size(); ++i) {
    EXPECT_EQ(a.hits[i].x, b.hits[i].x);
    EXPECT_EQ(a.hits[i].y, b.hits[i].y);
  }
  const SpotDiagram c = tracer.trace_point({0.2, -0.1, 1.0}, 1024, 43);
  EXPECT_NE(a.hits.front().x, c.hits.front().x);
}

TEST(TracePoint, RotatingTheSourceRotatesTheSpot) {
  for (const LensPrescription* lens : {&canon(), &lensnet()}) {
    const Tracer tracer = focused_tracer(*lens, 1.5);
    const double r = 0.35, z = 1.1;
    const SpotDiagram base = tracer.trace_point({r, 0, z}, 512, 4);
    for (double deg : {30.0, 90.0, 200.0}) {
      const double a = deg * std::numbers::pi / 180.0;
      const SpotDiagram rot = tracer.trace_point({r * std::cos(a), r * std::sin(a), z}, 512, 4);
      ASSERT_EQ(rot.hits.size(), base.hits.size()) << lens->name << " " << deg;
      double worst = 0.0;
      for (std::size_t i = 0; i < base.hits.size(); ++i) {
        const double x = base.hits[i].x * std::cos(a) - base.hits[i].y * std::sin(a);
        const double y = base.hits[i].x * std::sin(a) + base.hits[i].y * std::cos(a);
        worst = std::max(worst, std::hypot(x - rot.hits[i].x, y - rot.hits[i].y));
      }
      EXPECT_LT(worst, 1e-6) << lens->name << " " << deg;
    }
  }
}

TEST(TracePoint, DoublingSppKeepsTheCentroidWithinAPixel) {
  const double pixel_mm = 32.0 / 960.0;
  const Tracer tracer = focused_tracer(canon(), 1.5);
  for (const Vec3& src : {Vec3(0.3, 0.2, 2.0), Vec3(-0.4, 0.1, 0.8)}) {
    const Vec2 a = tracer.trace_point(src, 2048, derive_seed(8, "spp")).centroid();
    const Vec2 b = tracer.trace_point(src, 4096, derive_seed(8, "spp")).centroid();
    EXPECT_LT((a - b).norm(), pixel_mm);
  }
}

TEST(TracePoint, FocusingOnAPointBeatsFocusingElsewhere) {
  const Tracer near = focused_tracer(lensnet(), 1.0);
  const Tracer far = focused_tracer(lensnet(), 5.0);
  EXPECT_LT(near.trace_point({0, 0, 1.0}, 1024, 1).rms_radius(), far.trace_point({0, 0, 1.0}, 1024, 1).rms_radius());
  EXPECT_LT(far.trace_point({0, 0, 5.0}, 1024, 1).rms_radius(), near.trace_point({0, 0, 5.0}, 1024, 1).rms_radius());
}

TEST(TracePoint, InvalidArgumentsAreRejected) {
  const Tracer tracer(lensnet());
  EXPECT_THROW(tracer.trace_point({0, 0, 1.5}, 0, 1), ValidationError);
  EXPECT_THROW(tracer.trace_point({0, 0, 0.1}, 16, 1), ValidationError);
  EXPECT_THROW(tracer.trace_point({0, 0, 21.0}, 16, 1), ValidationError);
}

TEST(TracePoint, BatchAndScalarPropagationAgree) {
  const Tracer tracer = focused_tracer(canon(), 1.5);
  Rng rng(13);
  std::vector<Ray> rays;
  for (int i = 0; i < 256; ++i)
    rays.push_back(tracer.launch(source_to_lens_frame({rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3), 1.2}),
                                 {rng.uniform(-15, 15), rng.uniform(-15, 15)}));
  Tracer::Batch batch;
  batch.resize(rays.size());
  for (std::size_t i = 0; i < rays.size(); ++i) {
    batch.ox[i] = rays[i].origin.x();
    batch.oy[i] = rays[i].origin.y();
    batch.oz[i] = rays[i].origin.z();
    batch.dx[i] = rays[i].direction.x();
    batch.dy[i] = rays[i].direction.y();
    batch.dz[i] = rays[i].direction.z();
    batch.alive[i] = 1;
  }
  tracer.propagate(batch);
  int alive = 0;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    Ray r = rays[i];
    const bool ok = tracer.propagate(r);
    ASSERT_EQ(ok, batch.alive[i] != 0) << "ray " << i;
    if (!ok) continue;
    ++alive;
    EXPECT_NEAR(r.origin.x(), batch.ox[i], 1e-9);
    EXPECT_NEAR(r.origin.y(), batch.oy[i], 1e-9);
    EXPECT_NEAR(r.direction.z(), batch.dz[i], 1e-12);
  }
  EXPECT_GT(alive, 20);
  EXPECT_LT(alive, 256);
}

}  // namespace
}  // namespace aberray
