#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aberray/image.hpp"
#include "aberray/parallel.hpp"
#include "aberray/provider.hpp"

namespace aberray {

/// RGB in linear light plus a metric depth map on the same pixel grid.
struct RgbdImage {
  Image rgb;
  Image depth;
  std::vector<unsigned char> clamped;  // 1 where the depth was clamped into range
  std::size_t clamped_count = 0;
};

/// Clamps depths into [min_m, max_m], recording which pixels moved.
RgbdImage make_rgbd(Image rgb, Image depth, double min_m = 0.2, double max_m = 20.0);

/// Per-pixel kernels, row-major pixels, each k*k row-major.
struct PsfField {
  int width = 0;
  int height = 0;
  int k = 0;
  std::vector<double> kernels;

  PsfField() = default;
  PsfField(int w, int h, int kernel_size);
  double* kernel(int row, int col) { return kernels.data() + offset(row, col); }
  const double* kernel(int row, int col) const { return kernels.data() + offset(row, col); }

 private:
  std::size_t offset(int row, int col) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)) *
           static_cast<std::size_t>(k * k);
  }
};

/// Sensor position (mm) of a pixel centre for an image `width` pixels wide
/// spread over the sensor with the given pitch, centred on the axis.
std::array<double, 2> pixel_to_sensor_mm(int row, int col, int width, int height, double pitch_mm);

/// Object query imaged at a pixel: the sensor offset over the sensor
/// half-extent gives the normalised position (negated, the image is
/// inverted). Positions beyond the frustum are clamped; `clamped` counts them.
ObjectQuery pixel_query(int row, int col, int width, int height, double depth_m, double focus_m,
                        const LensPrescription& lens, const Frustum& frustum, double pitch_mm,
                        std::size_t* clamped = nullptr);

PsfField pixel_psf_field(const LensPrescription& lens, const Image& depth, double focus_m,
                         const PsfProvider& provider, const Executor& executor = Executor::serial());

/// out(i, j) = sum_ab in(i + a - c, j + b - c) * K_ij[a][b], c = k / 2, with
/// replicate padding. Every output pixel uses its own kernel.
Image local_convolve(const Image& image, const PsfField& field, const Executor& executor = Executor::serial());

enum class PatchPadding {
  kHalo,       // pad each patch from the surrounding image; identical to local_convolve
  kReplicate,  // pad each patch by replicating its own border; seams differ
};

Image local_convolve_patched(const Image& image, const PsfField& field, std::array<int, 2> patch = {320, 480},
                             PatchPadding padding = PatchPadding::kHalo,
                             const Executor& executor = Executor::serial());

struct FocalStack {
  std::vector<Image> frames;
  std::vector<double> focus_distances_m;
  std::string lens_name;
  Provenance psf_source = Provenance::kRaytraced;
};

/// S focus distances evenly spaced over the image's depth range, each
/// jittered by up to +-perturb_frac of the spacing, sorted ascending.
std::vector<double> stack_focus_distances(double min_depth_m, double max_depth_m, int stack_size,
                                          double perturb_frac, std::uint64_t seed);

FocalStack simulate_stack(const LensPrescription& lens, const RgbdImage& image, int stack_size,
                          double perturb_frac, std::uint64_t seed, const PsfProvider& provider,
                          const Executor& executor = Executor::serial());

/// Renders one frame at an explicit focus distance.
Image render_frame(const LensPrescription& lens, const RgbdImage& image, double focus_m,
                   const PsfProvider& provider, const Executor& executor = Executor::serial());

}  // namespace aberray
