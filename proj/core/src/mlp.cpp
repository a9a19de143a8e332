#include "aberray/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "aberray/error.hpp"
#include "aberray/rng.hpp"

namespace aberray {

template <typename Scalar>
Mlp<Scalar>::Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw ValidationError("an MLP needs at least an input and an output layer");
  for (int d : dims_)
    if (d < 1) throw ValidationError("MLP layer widths must be positive");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    weights_.push_back(Matrix::Zero(dims_[l + 1], dims_[l]));
    biases_.push_back(Vector::Zero(dims_[l + 1]));
  }
}

template <typename Scalar>
Mlp<Scalar> Mlp<Scalar>::initialized(std::vector<int> dims, std::uint64_t seed) {
  Mlp net(std::move(dims));
  Rng rng(derive_seed(seed, "init"));
  for (auto& w : net.weights_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    // Row-major draw order so the layout of Eigen storage never matters.
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
  }
  return net;
}

template <typename Scalar>
std::size_t Mlp<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

template <typename Scalar>
Scalar& Mlp<Scalar>::parameter(std::size_t index) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto nw = static_cast<std::size_t>(weights_[l].size());
    if (index < nw) return weights_[l].data()[index];
    index -= nw;
    const auto nb = static_cast<std::size_t>(biases_[l].size());
    if (index < nb) return biases_[l].data()[index];
    index -= nb;
  }
  throw std::out_of_range("MLP parameter index out of range");
}

template <typename Scalar>
Scalar Mlp<Scalar>::gradient(const Gradients& g, std::size_t index) {
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(g.weights[l].size());
    if (index < nw) return g.weights[l].data()[index];
    index -= nw;
    const auto nb = static_cast<std::size_t>(g.biases[l].size());
    if (index < nb) return g.biases[l].data()[index];
    index -= nb;
  }
  throw std::out_of_range("MLP gradient index out of range");
}

namespace {

template <typename M>
void sigmoid_inplace(M& z) {
  using S = typename M::Scalar;
  z = (S(1) + (-z.array()).exp()).inverse().matrix();
}

}  // namespace

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::forward(const Matrix& inputs) const {
  if (inputs.rows() != dims_.front())
    throw ValidationError("MLP input has " + std::to_string(inputs.rows()) + " rows, expected " +
                          std::to_string(dims_.front()));
  Matrix a = inputs;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = weights_[l] * a;
    z.colwise() += biases_[l];
    if (l + 1 < weights_.size()) {
      a = z.cwiseMax(Scalar(0));
    } else {
      sigmoid_inplace(z);
      a = std::move(z);
    }
  }
  return a;
}

template <typename Scalar>
typename Mlp<Scalar>::Gradients Mlp<Scalar>::zero_gradients() const {
  Gradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Vector::Zero(biases_[l].size()));
  }
  return g;
}

template <typename Scalar>
Scalar Mlp<Scalar>::backward(const Matrix& inputs, const Matrix& targets, Gradients& grads) const {
  const Eigen::Index batch = inputs.cols();
  if (batch == 0) throw ValidationError("empty training batch");
  if (inputs.rows() != dims_.front() || targets.rows() != dims_.back() || targets.cols() != batch)
    throw ValidationError("MLP batch shape mismatch");

  const std::size_t layers = weights_.size();
  std::vector<Matrix> acts(layers + 1);
  acts[0] = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = weights_[l] * acts[l];
    z.colwise() += biases_[l];
    if (l + 1 < layers) {
      acts[l + 1] = z.cwiseMax(Scalar(0));
    } else {
      sigmoid_inplace(z);
      acts[l + 1] = std::move(z);
    }
  }

  Matrix delta = acts[layers] - targets;
  const auto per_sample = delta.colwise().squaredNorm().eval();
  for (Eigen::Index b = 0; b < batch; ++b)
    if (!std::isfinite(static_cast<double>(per_sample(b))))
      throw NumericError("non-finite loss at batch index " + std::to_string(b));
  const Scalar loss = per_sample.sum() / static_cast<Scalar>(batch);

  if (grads.weights.size() != layers) grads = zero_gradients();
  // d loss / d output, then through the sigmoid.
  delta *= Scalar(2) / static_cast<Scalar>(batch);
  delta.array() *= acts[layers].array() * (Scalar(1) - acts[layers].array());
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l].noalias() = delta * acts[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = weights_[l].transpose() * delta;
    // ReLU subgradient: zero at and below the kink.
    back.array() *= (acts[l].array() > Scalar(0)).template cast<Scalar>();
    delta = std::move(back);
  }
  return loss;
}

template class Mlp<float>;
template class Mlp<double>;

std::vector<int> psf_network_dims(int k) { return {4, 256, 256, 256, 256, 256, k * k}; }

template <typename Scalar>
AdamW<Scalar>::AdamW(const Mlp<Scalar>& model, AdamWConfig config)
    : config_(config), m_(model.zero_gradients()), v_(model.zero_gradients()) {}

template <typename Scalar>
void AdamW<Scalar>::step(Mlp<Scalar>& model, const typename Mlp<Scalar>::Gradients& grads,
                         double learning_rate) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const auto b1 = static_cast<Scalar>(config_.beta1);
  const auto b2 = static_cast<Scalar>(config_.beta2);
  const auto decay = static_cast<Scalar>(1.0 - learning_rate * config_.weight_decay);
  const auto step_size = static_cast<Scalar>(learning_rate / bc1);
  const auto inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
  const auto eps = static_cast<Scalar>(config_.epsilon);

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    param *= decay;
    m = b1 * m + (Scalar(1) - b1) * grad;
    v = b2 * v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
    param.array() -= step_size * m.array() / (v.array().sqrt() * inv_sqrt_bc2 + eps);
  };
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    update(model.weight(l), grads.weights[l], m_.weights[l], v_.weights[l]);
    update(model.bias(l), grads.biases[l], m_.biases[l], v_.biases[l]);
  }
}

template class AdamW<float>;
template class AdamW<double>;

double cosine_learning_rate(double base_lr, std::uint64_t step, std::uint64_t total, double min_lr) {
  if (total == 0 || step >= total) return min_lr;
  const double phase = static_cast<double>(step) / static_cast<double>(total);
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * phase));
}

int MlpModel::k() const {
  const int out = net.dims().back();
  const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(out))));
  if (k * k != out) throw ValidationError("MLP output width " + std::to_string(out) + " is not square");
  return k;
}

namespace {

Mlp<float>::Matrix query_matrix(const std::vector<ObjectQuery>& queries) {
  Mlp<float>::Matrix x(4, static_cast<Eigen::Index>(queries.size()));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    x(0, c) = static_cast<float>(queries[i].x_norm);
    x(1, c) = static_cast<float>(queries[i].y_norm);
    x(2, c) = static_cast<float>(queries[i].z_norm);
    x(3, c) = static_cast<float>(queries[i].focus_norm);
  }
  return x;
}

}  // namespace

std::vector<PsfGrid> mlp_forward(const MlpModel& model, const std::vector<ObjectQuery>& queries) {
  const int k = model.k();
  const auto out = model.net.forward(query_matrix(queries));
  std::vector<PsfGrid> psfs;
  psfs.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    PsfGrid psf(k, model.pixel_pitch_mm, Provenance::kSurrogateMlp);
    for (int e = 0; e < k * k; ++e) psf.kernel[static_cast<std::size_t>(e)] = out(e, static_cast<Eigen::Index>(i));
    psfs.push_back(std::move(psf));
  }
  return psfs;
}

PsfGrid mlp_forward(const MlpModel& model, const ObjectQuery& query) {
  return std::move(mlp_forward(model, std::vector<ObjectQuery>{query}).front());
}

namespace {

static_assert(std::endian::native == std::endian::little, "MLPW I/O assumes a little-endian host");
constexpr char kMlpMagic[4] = {'M', 'L', 'P', 'W'};

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw Error("truncated MLPW file");
  return v;
}

std::string echo_with_metadata(const MlpModel& model) {
  std::ostringstream s;
  s.precision(17);
  s << "pixel_pitch_mm=" << model.pixel_pitch_mm << "\n";
  s << "depth_norm=" << (model.depth_norm == DepthNorm::kInverse ? "inverse" : "linear") << "\n";
  s << "lens=" << model.lens_name << "\n";
  s << model.config_echo;
  return s.str();
}

}  // namespace

void save_mlp(const std::filesystem::path& path, const MlpModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMlpMagic, 4);
  const auto& dims = model.net.dims();
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < model.net.layer_count(); ++l) {
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = model.net.weight(l);
    out.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size() * 4));
    const auto& b = model.net.bias(l);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size() * 4));
  }
  const std::string echo = echo_with_metadata(model);
  put_u32(out, static_cast<std::uint32_t>(echo.size()));
  out.write(echo.data(), static_cast<std::streamsize>(echo.size()));
  if (!out) throw Error("failed writing " + path.string());
}

MlpModel load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMlpMagic, 4) != 0)
    throw Error(path.string() + " is not an MLPW file");
  const std::uint32_t n = get_u32(in);
  if (n < 2 || n > 64) throw Error("implausible layer count in " + path.string());
  std::vector<int> dims(n);
  for (auto& d : dims) {
    d = static_cast<int>(get_u32(in));
    if (d < 1 || d > (1 << 16)) throw Error("implausible layer width in " + path.string());
  }
  MlpModel model;
  model.net = Mlp<float>(dims);
  for (std::size_t l = 0; l < model.net.layer_count(); ++l) {
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(dims[l + 1], dims[l]);
    if (!in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * 4)))
      throw Error("truncated MLPW file " + path.string());
    model.net.weight(l) = w;
    auto& b = model.net.bias(l);
    if (!in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(b.size() * 4)))
      throw Error("truncated MLPW file " + path.string());
  }
  const std::uint32_t len = get_u32(in);
  std::string echo(len, '\0');
  if (!in.read(echo.data(), len)) throw Error("truncated MLPW file " + path.string());

  std::istringstream lines(echo);
  std::string line;
  std::ostringstream rest;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    const std::string key = line.substr(0, eq);
    const std::string value = eq == std::string::npos ? "" : line.substr(eq + 1);
    if (key == "pixel_pitch_mm") {
      model.pixel_pitch_mm = std::stod(value);
    } else if (key == "depth_norm") {
      model.depth_norm = value == "inverse" ? DepthNorm::kInverse : DepthNorm::kLinear;
    } else if (key == "lens") {
      model.lens_name = value;
    } else {
      rest << line << "\n";
    }
  }
  model.config_echo = rest.str();
  model.k();
  return model;
}

}  // namespace aberray
