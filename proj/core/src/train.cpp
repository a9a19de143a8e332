#include "aberray/train.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "aberray/error.hpp"
#include "aberray/focus.hpp"
#include "aberray/rng.hpp"

namespace aberray {

void TrainConfig::validate() const {
  if (batch_points == 0) throw ValidationError("batch_points must be >= 1");
  if (spp_groundtruth == 0) throw ValidationError("spp_groundtruth must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(pixel_pitch_mm > 0.0)) throw ValidationError("pixel_pitch_mm must be positive");
  if (k < 1 || k % 2 == 0) throw ValidationError("k must be odd");
  if (!(near_focus_fraction >= 0.0 && near_focus_fraction <= 1.0))
    throw ValidationError("near_focus_fraction must lie in [0, 1]");
}

std::string TrainConfig::echo() const {
  std::ostringstream s;
  s.precision(17);
  s << "iterations=" << iterations << "\n"
    << "batch_points=" << batch_points << "\n"
    << "learning_rate=" << learning_rate << "\n"
    << "min_learning_rate=" << min_learning_rate << "\n"
    << "weight_decay=" << weight_decay << "\n"
    << "seed=" << seed << "\n"
    << "spp_groundtruth=" << spp_groundtruth << "\n"
    << "k=" << k << "\n"
    << "near_focus_fraction=" << near_focus_fraction << "\n"
    << "near_focus_log_sigma=" << near_focus_log_sigma << "\n";
  return s.str();
}

TrainingBatch sample_training_batch(const Frustum& frustum, const TrainConfig& config,
                                    std::uint64_t iteration) {
  Rng rng(derive_seed(config.seed, "batch", iteration));
  const double lo = frustum.min_depth_m;
  const double hi = frustum.max_depth_m;
  TrainingBatch batch;
  batch.focus_m = std::clamp(lo * std::exp(rng.uniform() * std::log(hi / lo)), lo, hi);
  batch.queries.reserve(config.batch_points);
  for (std::size_t j = 0; j < config.batch_points; ++j) {
    const double x = rng.uniform(-1.0, 1.0);
    const double y = rng.uniform(-1.0, 1.0);
    const double pick = rng.uniform();
    const double g = rng.normal();
    const double u = rng.uniform();
    double z = pick < config.near_focus_fraction
                   ? batch.focus_m * std::exp(config.near_focus_log_sigma * g)
                   : lo + (hi - lo) * u;
    z = std::clamp(z, lo, hi);
    batch.queries.push_back(query_from_normalized(x, y, z, batch.focus_m, frustum));
  }
  return batch;
}

TrainResult train_mlp(const LensPrescription& lens, const TrainConfig& config,
                      const Executor& executor, const TrainProgress& progress) {
  config.validate();
  lens.validate();
  const auto start = std::chrono::steady_clock::now();
  const Frustum frustum = Frustum::for_lens(lens, config.depth_norm);

  TrainResult result;
  result.model.net = Mlp<float>::initialized(psf_network_dims(config.k), config.seed);
  // Start from a flat unit-sum kernel. With a zero output bias every entry
  // starts at 0.5 and the first steps drive the sigmoids so deep into
  // saturation that their gradients fall below the optimiser's epsilon.
  const int kk0 = config.k * config.k;
  result.model.net.bias(result.model.net.layer_count() - 1)
      .setConstant(static_cast<float>(std::log(1.0 / (kk0 - 1))));
  result.model.pixel_pitch_mm = config.pixel_pitch_mm;
  result.model.depth_norm = config.depth_norm;
  result.model.lens_name = lens.name;
  result.model.config_echo = config.echo();
  result.loss_history.reserve(config.iterations);

  Mlp<float>& net = result.model.net;
  AdamW<float> optimizer(net, AdamWConfig{.weight_decay = config.weight_decay});
  Mlp<float>::Gradients grads = net.zero_gradients();
  const auto n = static_cast<Eigen::Index>(config.batch_points);
  const int kk = config.k * config.k;
  Mlp<float>::Matrix inputs(4, n);
  Mlp<float>::Matrix targets(kk, n);
  std::vector<PsfGrid> truth(config.batch_points);

  for (std::uint64_t it = 0; it < config.iterations; ++it) {
    const TrainingBatch batch = sample_training_batch(frustum, config, it);
    try {
      const Tracer tracer = focused_tracer(lens, batch.focus_m);
      executor.parallel_for(config.batch_points, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          const std::uint64_t seed = derive_seed(config.seed, "groundtruth", it * config.batch_points + j);
          truth[j] = raytraced_psf(tracer, batch.queries[j], config.spp_groundtruth, seed,
                                   config.pixel_pitch_mm, config.k);
        }
      });
    } catch (const Error& e) {
      throw NumericError("training iteration " + std::to_string(it) + ": " + e.what());
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const ObjectQuery& q = batch.queries[static_cast<std::size_t>(j)];
      inputs(0, j) = static_cast<float>(q.x_norm);
      inputs(1, j) = static_cast<float>(q.y_norm);
      inputs(2, j) = static_cast<float>(q.z_norm);
      inputs(3, j) = static_cast<float>(q.focus_norm);
      const auto& kernel = truth[static_cast<std::size_t>(j)].kernel;
      for (int e = 0; e < kk; ++e) targets(e, j) = static_cast<float>(kernel[static_cast<std::size_t>(e)]);
    }
    float loss = 0.0f;
    try {
      loss = net.backward(inputs, targets, grads);
    } catch (const NumericError& e) {
      throw NumericError("training iteration " + std::to_string(it) + ": " + e.what());
    }
    optimizer.step(net, grads,
                   cosine_learning_rate(config.learning_rate, it, config.iterations, config.min_learning_rate));
    result.loss_history.push_back(loss);
    if (progress) progress(it, loss);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spdlog::info("trained {} iterations in {:.1f} s", config.iterations, result.seconds);
  return result;
}

}  // namespace aberray
