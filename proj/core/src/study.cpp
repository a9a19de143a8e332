#include "aberray/study.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "aberray/error.hpp"
#include "aberray/rng.hpp"

namespace aberray {

DomainGapResult domain_gap_study(const LensPrescription& lens, const PsfProvider& provider,
                                 const DomainGapConfig& config, const Executor& executor) {
  if (config.scenes < 1) throw ValidationError("domain gap study needs at least one scene");
  std::vector<Image> errors;
  DomainGapResult result;
  for (int i = 0; i < config.scenes; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const RgbdImage scene = textured_tile_scene(config.scene, derive_seed(config.seed, "scene", idx));
    const FocalStack stack = simulate_stack(lens, scene, config.stack_size, config.perturb_frac,
                                            derive_seed(config.seed, "stack", idx), provider, executor);
    const DepthEstimate est = estimate_depth(stack, config.relative_temperature);
    const std::vector<unsigned char> mask = valid_mask(scene);
    Image err(scene.depth.width(), scene.depth.height(), 1);
    for (std::size_t p = 0; p < err.pixel_count(); ++p)
      err.values()[p] = mask[p] ? std::abs(est.depth.values()[p] - scene.depth.values()[p]) : 0.0;
    result.metrics.push_back(compute_metrics(est.depth, scene.depth, mask));
    spdlog::info("scene {}: {} stack, mae {:.4f} m", i, to_string(provider.provenance()), result.metrics.back().mae);
    errors.push_back(std::move(err));
  }
  result.mean_abs_error = radial_error_map(errors);
  result.center_error_m = radial_mean(result.mean_abs_error, 0.0, 0.1);
  result.annulus_error_m = radial_mean(result.mean_abs_error, 0.9, 1.0);
  result.annulus_center_ratio = annulus_center_ratio(result.mean_abs_error);
  return result;
}

namespace {

int patch_mode(const std::vector<int>& argmax, int width, int row0, int col0, int patch, int frames) {
  std::vector<int> votes(static_cast<std::size_t>(frames), 0);
  for (int r = row0; r < row0 + patch; ++r)
    for (int c = col0; c < col0 + patch; ++c) ++votes[static_cast<std::size_t>(argmax[static_cast<std::size_t>(r * width + c)])];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<double> patch_means(const std::vector<Image>& sharp, int row0, int col0, int patch) {
  std::vector<double> out;
  for (const Image& s : sharp) {
    double sum = 0.0;
    for (int r = row0; r < row0 + patch; ++r)
      for (int c = col0; c < col0 + patch; ++c) sum += s.at(r, c);
    out.push_back(sum / (patch * patch));
  }
  return out;
}

}  // namespace

FocusFlipResult focus_flip_study(const LensPrescription& lens, const PsfProvider& provider,
                                 const FocusFlipConfig& config, const Executor& executor) {
  if (config.focus_distances_m.empty()) throw ValidationError("focus flip study needs focus distances");
  if (config.patch < 1 || config.inset < 0 || config.inset + config.patch > config.width / 2 ||
      config.inset + config.patch > config.height / 2)
    throw ValidationError("focus flip patch does not fit the image");
  const RgbdImage plane = textured_plane(config.width, config.height, config.plane_depth_m, config.seed);
  FocalStack stack;
  stack.lens_name = lens.name;
  stack.psf_source = provider.provenance();
  stack.focus_distances_m = config.focus_distances_m;
  for (double f : config.focus_distances_m) stack.frames.push_back(render_frame(lens, plane, f, provider, executor));

  const std::vector<Image> sharp = sharpness_volume(stack);
  const std::vector<int> argmax = argmax_frames(sharp);
  const int frames = static_cast<int>(stack.frames.size());
  const int cr = config.height / 2 - config.patch / 2;
  const int cc = config.width / 2 - config.patch / 2;
  FocusFlipResult out;
  out.center_frame = patch_mode(argmax, config.width, cr, cc, config.patch, frames);
  out.corner_frame = patch_mode(argmax, config.width, config.inset, config.inset, config.patch, frames);
  out.center_sharpness = patch_means(sharp, cr, cc, config.patch);
  out.corner_sharpness = patch_means(sharp, config.inset, config.inset, config.patch);
  return out;
}

}  // namespace aberray
