#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "aberray/grid_model.hpp"
#include "aberray/lens.hpp"
#include "aberray/mlp.hpp"
#include "aberray/psf.hpp"
#include "aberray/raytrace.hpp"

namespace aberray {

/// Kernels for one focus setting. evaluate() writes k*k unit-sum values per
/// query into `out`; it is called concurrently on disjoint ranges.
class FocusedPsf {
 public:
  virtual ~FocusedPsf() = default;
  virtual void evaluate(std::span<const ObjectQuery> queries, double* out) const = 0;
};

/// Source of per-pixel PSFs for rendering.
class PsfProvider {
 public:
  virtual ~PsfProvider() = default;
  virtual Provenance provenance() const = 0;
  virtual int k() const = 0;
  virtual double pixel_pitch_mm() const = 0;
  virtual const Frustum& frustum() const = 0;
  virtual std::unique_ptr<FocusedPsf> at_focus(double focus_m) const = 0;
};

/// Thin-lens CoC model with the lens's paraxial focal length and working
/// f-number.
std::unique_ptr<PsfProvider> make_gaussian_provider(const LensPrescription& lens, double pixel_pitch_mm,
                                                    int k = kDefaultPsfSize);

/// Traces every query. The same sampler seed is reused for every pixel so
/// neighbouring kernels share their Monte-Carlo noise and do not add pixel
/// grain to the rendered image.
std::unique_ptr<PsfProvider> make_raytraced_provider(const LensPrescription& lens, double pixel_pitch_mm,
                                                     std::size_t spp, std::uint64_t seed,
                                                     int k = kDefaultPsfSize);

/// The PSF network; outputs are renormalised to unit sum for rendering.
std::unique_ptr<PsfProvider> make_mlp_provider(const LensPrescription& lens, MlpModel model);

std::unique_ptr<PsfProvider> make_grid_provider(GridModel model);

}  // namespace aberray
