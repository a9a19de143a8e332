#include "aberray/provider.hpp"

#include <algorithm>

#include "aberray/error.hpp"
#include "aberray/focus.hpp"
#include "aberray/paraxial.hpp"

namespace aberray {
namespace {

void copy_kernel(const PsfGrid& psf, double* out) { std::copy(psf.kernel.begin(), psf.kernel.end(), out); }

class GaussianFocused final : public FocusedPsf {
 public:
  GaussianFocused(double f_mm, double n, double focus_m, double pitch, int k)
      : f_mm_(f_mm), n_(n), focus_m_(focus_m), pitch_(pitch), k_(k) {}

  void evaluate(std::span<const ObjectQuery> queries, double* out) const override {
    const auto kk = static_cast<std::size_t>(k_ * k_);
    for (std::size_t i = 0; i < queries.size(); ++i)
      copy_kernel(gaussian_coc_psf(f_mm_, n_, queries[i].z_m, focus_m_, pitch_, k_), out + i * kk);
  }

 private:
  double f_mm_, n_, focus_m_, pitch_;
  int k_;
};

class GaussianProvider final : public PsfProvider {
 public:
  GaussianProvider(const LensPrescription& lens, double pitch, int k)
      : pitch_(pitch), k_(k), frustum_(Frustum::for_lens(lens)) {
    const ParaxialSummary p = paraxial_analyze(lens, lens.design_wavelength_nm);
    f_mm_ = p.effective_focal_length_mm;
    n_ = p.working_f_number;
  }
  Provenance provenance() const override { return Provenance::kGaussian; }
  int k() const override { return k_; }
  double pixel_pitch_mm() const override { return pitch_; }
  const Frustum& frustum() const override { return frustum_; }
  std::unique_ptr<FocusedPsf> at_focus(double focus_m) const override {
    return std::make_unique<GaussianFocused>(f_mm_, n_, focus_m, pitch_, k_);
  }

 private:
  double pitch_;
  int k_;
  Frustum frustum_;
  double f_mm_ = 0.0;
  double n_ = 0.0;
};

class RaytracedFocused final : public FocusedPsf {
 public:
  RaytracedFocused(Tracer tracer, std::size_t spp, std::uint64_t seed, double pitch, int k)
      : tracer_(std::move(tracer)), spp_(spp), seed_(seed), pitch_(pitch), k_(k) {}

  void evaluate(std::span<const ObjectQuery> queries, double* out) const override {
    const auto kk = static_cast<std::size_t>(k_ * k_);
    for (std::size_t i = 0; i < queries.size(); ++i)
      copy_kernel(raytraced_psf(tracer_, queries[i], spp_, seed_, pitch_, k_), out + i * kk);
  }

 private:
  Tracer tracer_;
  std::size_t spp_;
  std::uint64_t seed_;
  double pitch_;
  int k_;
};

class RaytracedProvider final : public PsfProvider {
 public:
  RaytracedProvider(const LensPrescription& lens, double pitch, std::size_t spp, std::uint64_t seed, int k)
      : lens_(lens), pitch_(pitch), spp_(spp), seed_(seed), k_(k), frustum_(Frustum::for_lens(lens)) {}
  Provenance provenance() const override { return Provenance::kRaytraced; }
  int k() const override { return k_; }
  double pixel_pitch_mm() const override { return pitch_; }
  const Frustum& frustum() const override { return frustum_; }
  std::unique_ptr<FocusedPsf> at_focus(double focus_m) const override {
    return std::make_unique<RaytracedFocused>(focused_tracer(lens_, focus_m), spp_, seed_, pitch_, k_);
  }

 private:
  LensPrescription lens_;
  double pitch_;
  std::size_t spp_;
  std::uint64_t seed_;
  int k_;
  Frustum frustum_;
};

class MlpFocused final : public FocusedPsf {
 public:
  explicit MlpFocused(const MlpModel& model) : model_(model) {}

  void evaluate(std::span<const ObjectQuery> queries, double* out) const override {
    constexpr std::size_t kChunk = 1024;
    const int k = model_.k();
    const auto kk = static_cast<std::size_t>(k * k);
    for (std::size_t begin = 0; begin < queries.size(); begin += kChunk) {
      const std::size_t end = std::min(queries.size(), begin + kChunk);
      const std::vector<ObjectQuery> chunk(queries.begin() + static_cast<std::ptrdiff_t>(begin),
                                           queries.begin() + static_cast<std::ptrdiff_t>(end));
      auto psfs = mlp_forward(model_, chunk);
      for (std::size_t i = 0; i < psfs.size(); ++i) {
        psfs[i].normalize();
        copy_kernel(psfs[i], out + (begin + i) * kk);
      }
    }
  }

 private:
  const MlpModel& model_;
};

class MlpProvider final : public PsfProvider {
 public:
  MlpProvider(const LensPrescription& lens, MlpModel model)
      : model_(std::move(model)), frustum_(Frustum::for_lens(lens, model_.depth_norm)) {}
  Provenance provenance() const override { return Provenance::kSurrogateMlp; }
  int k() const override { return model_.k(); }
  double pixel_pitch_mm() const override { return model_.pixel_pitch_mm; }
  const Frustum& frustum() const override { return frustum_; }
  std::unique_ptr<FocusedPsf> at_focus(double) const override { return std::make_unique<MlpFocused>(model_); }

 private:
  MlpModel model_;
  Frustum frustum_;
};

class GridFocused final : public FocusedPsf {
 public:
  explicit GridFocused(const GridModel& model) : model_(model) {}
  void evaluate(std::span<const ObjectQuery> queries, double* out) const override {
    const auto kk = static_cast<std::size_t>(model_.k * model_.k);
    for (std::size_t i = 0; i < queries.size(); ++i) copy_kernel(grid_query(model_, queries[i]), out + i * kk);
  }

 private:
  const GridModel& model_;
};

class GridProvider final : public PsfProvider {
 public:
  explicit GridProvider(GridModel model) : model_(std::move(model)) {}
  Provenance provenance() const override { return Provenance::kSurrogateGrid; }
  int k() const override { return model_.k; }
  double pixel_pitch_mm() const override { return model_.pixel_pitch_mm; }
  const Frustum& frustum() const override { return model_.frustum; }
  std::unique_ptr<FocusedPsf> at_focus(double) const override { return std::make_unique<GridFocused>(model_); }

 private:
  GridModel model_;
};

}  // namespace

std::unique_ptr<PsfProvider> make_gaussian_provider(const LensPrescription& lens, double pixel_pitch_mm, int k) {
  return std::make_unique<GaussianProvider>(lens, pixel_pitch_mm, k);
}

std::unique_ptr<PsfProvider> make_raytraced_provider(const LensPrescription& lens, double pixel_pitch_mm,
                                                     std::size_t spp, std::uint64_t seed, int k) {
  if (spp == 0) throw ValidationError("spp must be >= 1");
  return std::make_unique<RaytracedProvider>(lens, pixel_pitch_mm, spp, seed, k);
}

std::unique_ptr<PsfProvider> make_mlp_provider(const LensPrescription& lens, MlpModel model) {
  return std::make_unique<MlpProvider>(lens, std::move(model));
}

std::unique_ptr<PsfProvider> make_grid_provider(GridModel model) {
  return std::make_unique<GridProvider>(std::move(model));
}

}  // namespace aberray
