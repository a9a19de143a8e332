#pragma once

#include "aberray/lens.hpp"

namespace aberray {

struct ParaxialSummary {
  double effective_focal_length_mm = 0.0;
  double back_focal_distance_mm = 0.0;  ///< last vertex to paraxial focus
  double working_f_number = 0.0;        ///< 1 / (2 |u'|) of the infinite-conjugate marginal ray
  double entrance_pupil_diameter_mm = 0.0;
  double entrance_pupil_distance_mm = 0.0;  ///< from the first vertex, +z toward the sensor
};

/// First-order y-u trace at the given wavelength. Throws NumericError for an
/// afocal system.
ParaxialSummary paraxial_analyze(const LensPrescription& lens, double wavelength_nm);

/// Paraxial image distance (last vertex to image) for an object `object_distance_mm`
/// in front of the first vertex.
double paraxial_image_distance(const LensPrescription& lens, double object_distance_mm,
                               double wavelength_nm);

}  // namespace aberray
