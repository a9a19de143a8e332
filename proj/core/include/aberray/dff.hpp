#pragma once

#include <string>
#include <vector>

#include "aberray/image.hpp"
#include "aberray/render.hpp"

namespace aberray {

enum class FocusMeasure { kModifiedLaplacian, kGradientMagnitude };

const char* to_string(FocusMeasure m);

/// Per-frame focus measure on the channel-mean image, summed over a
/// window x window neighbourhood (replicate borders). Single-channel output.
std::vector<Image> sharpness_volume(const FocalStack& stack, FocusMeasure measure = FocusMeasure::kModifiedLaplacian,
                                    int window = 9);
Image sharpness(const Image& frame, FocusMeasure measure = FocusMeasure::kModifiedLaplacian, int window = 9);

struct DepthEstimate {
  Image depth;
  std::vector<Image> probability;  // S single-channel maps, per-pixel sum 1
};

/// Softmax over frames of sharpness / T with T = relative_temperature times
/// the pixel's sharpness range across frames; depth is the probability
/// weighted focus distance. relative_temperature <= 0 selects the argmax
/// frame with ties going to the lowest index.
DepthEstimate estimate_depth(const std::vector<double>& focus_distances_m, const std::vector<Image>& sharpness,
                             double relative_temperature = 0.1);
DepthEstimate estimate_depth(const FocalStack& stack, double relative_temperature = 0.1,
                             FocusMeasure measure = FocusMeasure::kModifiedLaplacian, int window = 9);

/// Per-pixel argmax frame index, lowest index on ties.
std::vector<int> argmax_frames(const std::vector<Image>& sharpness);

Image synthesize_aif(const FocalStack& stack, const std::vector<Image>& probability);

double psnr(const Image& a, const Image& b, double peak = 1.0);

struct DepthMetrics {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double abs_rel = 0.0;
  double sqr_rel = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t count = 0;
};

/// Metrics over pixels where mask != 0 (an empty mask means every pixel).
DepthMetrics compute_metrics(const Image& pred, const Image& gt, const std::vector<unsigned char>& mask = {});

/// Mask of usable pixels: not clamped when the RGBD image was built.
std::vector<unsigned char> valid_mask(const RgbdImage& image);

/// Pixelwise mean of |error| over a set of same-shaped maps.
Image radial_error_map(const std::vector<Image>& error_maps);

/// Mean of `map` over pixels whose distance from the image centre, as a
/// fraction of the half-diagonal, lies in [r_lo, r_hi].
double radial_mean(const Image& map, double r_lo, double r_hi);

/// Outer annulus (r >= 0.9) mean over central disk (r <= 0.1) mean.
double annulus_center_ratio(const Image& map);

}  // namespace aberray
