#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "aberray/grid_model.hpp"
#include "aberray/lens.hpp"
#include "aberray/mlp.hpp"
#include "aberray/parallel.hpp"
#include "aberray/psf.hpp"

namespace aberray {

/// Anything that maps (object point, focus) to a kernel.
class Surrogate {
 public:
  virtual ~Surrogate() = default;
  virtual std::string name() const = 0;
  /// All queries share focus_m. Called concurrently on disjoint batches.
  virtual std::vector<PsfGrid> predict(double focus_m, const std::vector<ObjectQuery>& queries) const = 0;
};

/// Raw network outputs, as trained. Both wrappers keep their own copy of the model.
std::unique_ptr<Surrogate> mlp_surrogate(const MlpModel& model);
std::unique_ptr<Surrogate> grid_surrogate(const GridModel& model);
/// Re-traces each query with query_seed(seed, q): the exact reference.
std::unique_ptr<Surrogate> raytraced_surrogate(const LensPrescription& lens, std::size_t spp, std::uint64_t seed,
                                               double pixel_pitch_mm, int k = kDefaultPsfSize);

/// Sampler seed for a query, derived from its normalised coordinates.
std::uint64_t query_seed(std::uint64_t root, const ObjectQuery& q);

/// Test lattice: cell midpoints of an even split of normalised focus,
/// depth, y and x.
struct TestSpec {
  int focus_count = 20;
  int depth_count = 40;
  int ny = 8;
  int nx = 10;
  std::size_t spp = 2048;
  std::uint64_t seed = 0;
  double pixel_pitch_mm = 0.05;
  int k = kDefaultPsfSize;
  DepthNorm depth_norm = DepthNorm::kLinear;

  std::vector<double> focus_distances_m(const Frustum& frustum) const;
  std::vector<double> depths_m(const Frustum& frustum) const;
  std::vector<double> x_norms() const;
  std::vector<double> y_norms() const;
};

struct SurrogateErrors {
  double l1 = 0.0;  // mean |difference| per kernel entry
  double l2 = 0.0;  // mean squared difference per kernel entry
  double l1_per_kernel = 0.0;
  double l2_per_kernel = 0.0;
  std::size_t kernels = 0;
  double seconds = 0.0;
};

SurrogateErrors evaluate_surrogate(const Surrogate& model, const LensPrescription& lens, const TestSpec& spec,
                                   const Executor& executor = Executor::serial());

/// Evaluates several surrogates against one shared ground truth.
std::vector<SurrogateErrors> evaluate_surrogates(const std::vector<const Surrogate*>& models,
                                                 const LensPrescription& lens, const TestSpec& spec,
                                                 const Executor& executor = Executor::serial());

}  // namespace aberray
