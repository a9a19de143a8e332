#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aberray/psf.hpp"

namespace aberray {

/// Fully connected network: ReLU after every layer but the last, sigmoid on
/// the output. Samples are columns: inputs are dims.front() x batch.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
  };

  Mlp() = default;
  /// All-zero parameters.
  explicit Mlp(std::vector<int> dims);
  /// Uniform in +-sqrt(6 / fan_in) for weights, zero biases.
  static Mlp initialized(std::vector<int> dims, std::uint64_t seed);

  const std::vector<int>& dims() const { return dims_; }
  std::size_t layer_count() const { return weights_.size(); }
  std::size_t parameter_count() const;

  Matrix& weight(std::size_t layer) { return weights_[layer]; }
  const Matrix& weight(std::size_t layer) const { return weights_[layer]; }
  Vector& bias(std::size_t layer) { return biases_[layer]; }
  const Vector& bias(std::size_t layer) const { return biases_[layer]; }

  /// Flat view over all parameters, layer by layer, weights (column-major)
  /// before biases.
  Scalar& parameter(std::size_t index);
  static Scalar gradient(const Gradients& g, std::size_t index);

  Matrix forward(const Matrix& inputs) const;

  /// Mean over the batch of the squared l2 error, and its exact gradient.
  /// Throws NumericError naming the first sample whose loss is not finite.
  Scalar backward(const Matrix& inputs, const Matrix& targets, Gradients& grads) const;

  Gradients zero_gradients() const;

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(dims_);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.weight(l) = weights_[l].template cast<Other>();
      out.bias(l) = biases_[l].template cast<Other>();
    }
    return out;
  }

 private:
  std::vector<int> dims_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

extern template class Mlp<float>;
extern template class Mlp<double>;

/// [4, 256 x 5, k*k].
std::vector<int> psf_network_dims(int k = kDefaultPsfSize);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-2;
};

/// AdamW with decoupled weight decay; moments live alongside the model.
template <typename Scalar>
class AdamW {
 public:
  AdamW(const Mlp<Scalar>& model, AdamWConfig config = {});

  void step(Mlp<Scalar>& model, const typename Mlp<Scalar>::Gradients& grads, double learning_rate);
  std::uint64_t steps() const { return t_; }

 private:
  AdamWConfig config_;
  typename Mlp<Scalar>::Gradients m_;
  typename Mlp<Scalar>::Gradients v_;
  std::uint64_t t_ = 0;
};

extern template class AdamW<float>;
extern template class AdamW<double>;

/// Cosine annealing from base_lr at step 0 to min_lr at step total.
double cosine_learning_rate(double base_lr, std::uint64_t step, std::uint64_t total, double min_lr = 0.0);

/// A trained PSF network together with what it needs to be queried.
struct MlpModel {
  Mlp<float> net;
  double pixel_pitch_mm = 0.05;
  DepthNorm depth_norm = DepthNorm::kLinear;
  std::string lens_name;
  std::string config_echo;  // key=value lines

  int k() const;
};

/// Raw sigmoid outputs reshaped to k x k (no renormalisation).
PsfGrid mlp_forward(const MlpModel& model, const ObjectQuery& query);
/// Batched variant; one column per query.
std::vector<PsfGrid> mlp_forward(const MlpModel& model, const std::vector<ObjectQuery>& queries);

/// "MLPW" file: magic, u32 layer-dim count, u32 dims, float32 row-major
/// weights then biases per layer, u32 length + key=value config echo.
void save_mlp(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_mlp(const std::filesystem::path& path);

}  // namespace aberray
