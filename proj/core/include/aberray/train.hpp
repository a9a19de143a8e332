#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aberray/lens.hpp"
#include "aberray/mlp.hpp"
#include "aberray/parallel.hpp"
#include "aberray/psf.hpp"

namespace aberray {

struct TrainConfig {
  std::uint64_t iterations = 50000;
  std::size_t batch_points = 256;
  double learning_rate = 1e-3;
  double min_learning_rate = 0.0;
  double weight_decay = 1e-2;
  std::uint64_t seed = 0;
  std::size_t spp_groundtruth = 1024;
  double pixel_pitch_mm = 0.05;
  int k = kDefaultPsfSize;
  DepthNorm depth_norm = DepthNorm::kLinear;
  /// Share of depths drawn around the focus distance rather than uniformly.
  double near_focus_fraction = 0.5;
  double near_focus_log_sigma = 0.3;

  void validate() const;
  std::string echo() const;  // key=value lines
};

/// One iteration's draw: a shared focus distance and the object points.
struct TrainingBatch {
  double focus_m = 0.0;
  std::vector<ObjectQuery> queries;
};

/// Focus log-uniform over the frustum depth range; lateral positions uniform
/// in normalised coordinates; depths a mix of uniform and log-normal around
/// the focus, clipped to range. Depends only on (config.seed, iteration).
TrainingBatch sample_training_batch(const Frustum& frustum, const TrainConfig& config,
                                    std::uint64_t iteration);

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_history;
  double seconds = 0.0;
};

using TrainProgress = std::function<void(std::uint64_t iteration, double loss)>;

/// Fits the PSF network to ray-traced kernels. Ground truth for a batch is
/// generated in parallel with per-sample seed streams, so the result is
/// independent of the executor's thread count.
TrainResult train_mlp(const LensPrescription& lens, const TrainConfig& config,
                      const Executor& executor = Executor::serial(), const TrainProgress& progress = {});

}  // namespace aberray
