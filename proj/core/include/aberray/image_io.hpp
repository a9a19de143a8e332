#pragma once

#include <filesystem>

#include "aberray/image.hpp"

namespace aberray {

/// Reads an 8- or 16-bit PNG as linear-light RGB in [0, 1]. 8-bit files are
/// decoded with the sRGB curve, 16-bit files are taken as linear.
Image read_png_rgb(const std::filesystem::path& path);

/// Writes linear RGB, clamped to [0, 1]: 8-bit sRGB-encoded, or 16-bit linear.
void write_png_rgb(const std::filesystem::path& path, const Image& rgb, bool sixteen_bit = false);

/// Reads a 16-bit single-channel PNG and multiplies raw values by `scale`.
Image read_png_depth16(const std::filesystem::path& path, double scale);

/// Portable float map ("Pf" or "PF"). Written little-endian with scale -1.
Image read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Image& image);

/// Maps a single-channel image through a perceptual colormap over [lo, hi]
/// and writes an 8-bit RGB PNG.
void write_colormap_png(const std::filesystem::path& path, const Image& scalar, double lo, double hi);

/// Reads a depth map from PFM, or from 16-bit PNG with `png_scale` metres per unit.
Image read_depth(const std::filesystem::path& path, double png_scale);

}  // namespace aberray
