#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "aberray/lens.hpp"

namespace aberray {

/// Parses the text lens format:
///
///   name=...
///   sensor_width_mm=32
///   sensor_height_mm=24
///   sensor_distance_mm=29.792     (optional; defaults to the last thickness)
///   design_wavelength_nm=589
///   surf 1 kind=sphere radius=25.445 thickness=5.12 semi_diameter=15 n=1.729 V=54.494
///   surf 7 kind=aper radius=inf thickness=1.414 semi_diameter=9
///
/// Blank lines and lines starting with '#' are ignored.
LensPrescription parse_prescription(std::string_view document);
LensPrescription load_prescription(const std::filesystem::path& path);

std::string serialize_prescription(const LensPrescription& lens);

}  // namespace aberray
