#pragma once

#include <cstdint>
#include <vector>

#include "aberray/dff.hpp"
#include "aberray/provider.hpp"
#include "aberray/scene.hpp"

namespace aberray {

/// Classical depth-from-focus over a set of synthetic scenes, scored against
/// the scenes' true depth.
struct DomainGapConfig {
  SceneOptions scene;
  int scenes = 5;
  int stack_size = 10;
  double perturb_frac = 0.25;
  /// 0 picks the sharpest frame outright.
  double relative_temperature = 0.0;
  std::uint64_t seed = 0;
};

struct DomainGapResult {
  Image mean_abs_error;  // pixelwise over scenes
  double annulus_center_ratio = 0.0;
  double center_error_m = 0.0;
  double annulus_error_m = 0.0;
  std::vector<DepthMetrics> metrics;  // one per scene
};

DomainGapResult domain_gap_study(const LensPrescription& lens, const PsfProvider& provider,
                                 const DomainGapConfig& config, const Executor& executor = Executor::serial());

/// A textured fronto-parallel plane rendered at explicit focus distances.
/// Reports the most common per-pixel sharpest frame in a patch at the image
/// centre and in a patch inset from the top-left corner.
struct FocusFlipConfig {
  int width = 640;
  int height = 480;
  double plane_depth_m = 1.5;
  std::vector<double> focus_distances_m;
  int patch = 32;
  int inset = 12;
  std::uint64_t seed = 0;
};

struct FocusFlipResult {
  int center_frame = -1;
  int corner_frame = -1;
  std::vector<double> center_sharpness;  // patch mean per frame
  std::vector<double> corner_sharpness;
};

FocusFlipResult focus_flip_study(const LensPrescription& lens, const PsfProvider& provider,
                                 const FocusFlipConfig& config, const Executor& executor = Executor::serial());

}  // namespace aberray
