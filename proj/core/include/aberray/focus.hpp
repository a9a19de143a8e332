#pragma once

#include "aberray/lens.hpp"
#include "aberray/raytrace.hpp"

namespace aberray {

inline constexpr double kMinDepthM = 0.2;
inline constexpr double kMaxDepthM = 20.0;

/// Returns a copy of `lens` whose sensor distance minimises the on-axis RMS
/// spot radius of a point at `focus_distance_m` in front of the first vertex.
/// Paraxial seed, then golden-section search over a fixed 64-ray bundle.
LensPrescription focus_to(const LensPrescription& lens, double focus_distance_m);

/// RMS spot radius (mm) of the fixed 64-ray on-axis bundle at a sensor
/// distance. Used by focus_to and exposed for scanning.
/// Tracer for focus_to(lens, focus_distance_m) that remembers the focus.
Tracer focused_tracer(const LensPrescription& lens, double focus_distance_m);

double on_axis_rms_radius(const LensPrescription& lens, double object_distance_m,
                          double sensor_distance_mm);

}  // namespace aberray
