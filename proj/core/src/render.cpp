#include "aberray/render.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "aberray/error.hpp"
#include "aberray/rng.hpp"

namespace aberray {

RgbdImage make_rgbd(Image rgb, Image depth, double min_m, double max_m) {
  if (rgb.width() != depth.width() || rgb.height() != depth.height())
    throw ValidationError("RGB and depth dimensions differ");
  if (depth.channels() != 1) throw ValidationError("depth map must be single-channel");
  for (double v : rgb.values())
    if (!std::isfinite(v)) throw ValidationError("RGB image contains non-finite values");
  RgbdImage out;
  out.clamped.assign(depth.pixel_count(), 0);
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    double& z = depth.values()[i];
    const double c = std::isfinite(z) ? std::clamp(z, min_m, max_m) : max_m;
    if (c != z) {
      z = c;
      out.clamped[i] = 1;
      ++out.clamped_count;
    }
  }
  if (out.clamped_count > 0) spdlog::info("clamped {} depth values into [{}, {}] m", out.clamped_count, min_m, max_m);
  out.rgb = std::move(rgb);
  out.depth = std::move(depth);
  return out;
}

PsfField::PsfField(int w, int h, int kernel_size)
    : width(w), height(h), k(kernel_size),
      kernels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                  static_cast<std::size_t>(kernel_size * kernel_size),
              0.0) {}

std::array<double, 2> pixel_to_sensor_mm(int row, int col, int width, int height, double pitch_mm) {
  return {(col + 0.5 - width / 2.0) * pitch_mm, (row + 0.5 - height / 2.0) * pitch_mm};
}

ObjectQuery pixel_query(int row, int col, int width, int height, double depth_m, double focus_m,
                        const LensPrescription& lens, const Frustum& frustum, double pitch_mm,
                        std::size_t* clamped) {
  const auto [sx, sy] = pixel_to_sensor_mm(row, col, width, height, pitch_mm);
  double xn = -sx / (lens.sensor_width_mm / 2.0);
  double yn = -sy / (lens.sensor_height_mm / 2.0);
  if (std::abs(xn) > 1.0 || std::abs(yn) > 1.0) {
    xn = std::clamp(xn, -1.0, 1.0);
    yn = std::clamp(yn, -1.0, 1.0);
    if (clamped) ++*clamped;
  }
  return query_from_normalized(xn, yn, depth_m, focus_m, frustum);
}

PsfField pixel_psf_field(const LensPrescription& lens, const Image& depth, double focus_m,
                         const PsfProvider& provider, const Executor& executor) {
  if (depth.channels() != 1) throw ValidationError("depth map must be single-channel");
  const int w = depth.width();
  const int h = depth.height();
  const double pitch = provider.pixel_pitch_mm();
  const int k = provider.k();
  std::vector<ObjectQuery> queries(depth.pixel_count());
  std::size_t clamped = 0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      queries[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)] =
          pixel_query(r, c, w, h, depth.at(r, c), focus_m, lens, provider.frustum(), pitch, &clamped);
  if (clamped > 0) spdlog::info("{} pixels fell outside the frustum and were clamped to its edge", clamped);

  PsfField field(w, h, k);
  const auto focused = provider.at_focus(focus_m);
  const auto kk = static_cast<std::size_t>(k * k);
  // Fixed blocks rather than the executor's ranges, so batched providers see
  // the same batches whatever the thread count.
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (queries.size() + kBlock - 1) / kBlock;
  executor.parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t begin = b * kBlock;
      const std::size_t end = std::min(queries.size(), begin + kBlock);
      focused->evaluate(std::span<const ObjectQuery>(queries.data() + begin, end - begin),
                        field.kernels.data() + begin * kk);
    }
  });
  return field;
}

namespace {

void check_shapes(const Image& image, const PsfField& field) {
  if (image.width() != field.width || image.height() != field.height)
    throw ValidationError("PSF field is " + std::to_string(field.width) + "x" + std::to_string(field.height) +
                          " but the image is " + std::to_string(image.width()) + "x" +
                          std::to_string(image.height()));
  if (field.k < 1 || field.k % 2 == 0) throw ValidationError("PSF field kernel size must be odd");
}

// Convolves output rows [r0, r1) x cols [c0, c1). Source indices are clamped
// to the box [pr0, pr1) x [pc0, pc1), which is how padding is realised.
void convolve_region(const Image& in, const PsfField& field, Image& out, int r0, int r1, int c0, int c1,
                     int pr0, int pr1, int pc0, int pc1) {
  const int k = field.k;
  const int half = k / 2;
  const int ch = in.channels();
  const auto stride = static_cast<std::size_t>(in.width()) * static_cast<std::size_t>(ch);
  std::vector<int> cols(static_cast<std::size_t>(k));
  double acc[4];
  for (int i = r0; i < r1; ++i) {
    for (int j = c0; j < c1; ++j) {
      const double* kern = field.kernel(i, j);
      for (int b = 0; b < k; ++b) cols[static_cast<std::size_t>(b)] = std::clamp(j + b - half, pc0, pc1 - 1);
      if (ch <= 4) {
        std::fill(acc, acc + ch, 0.0);
        for (int a = 0; a < k; ++a) {
          const int r = std::clamp(i + a - half, pr0, pr1 - 1);
          const double* src = in.data() + static_cast<std::size_t>(r) * stride;
          const double* krow = kern + a * k;
          for (int b = 0; b < k; ++b) {
            const double* px = src + static_cast<std::size_t>(cols[static_cast<std::size_t>(b)] * ch);
            for (int c = 0; c < ch; ++c) acc[c] += px[c] * krow[b];
          }
        }
        for (int c = 0; c < ch; ++c) out.at(i, j, c) = acc[c];
      } else {
        for (int c = 0; c < ch; ++c) {
          double s = 0.0;
          for (int a = 0; a < k; ++a) {
            const int r = std::clamp(i + a - half, pr0, pr1 - 1);
            const double* src = in.data() + static_cast<std::size_t>(r) * stride;
            for (int b = 0; b < k; ++b)
              s += src[static_cast<std::size_t>(cols[static_cast<std::size_t>(b)] * ch + c)] * kern[a * k + b];
          }
          out.at(i, j, c) = s;
        }
      }
    }
  }
}

}  // namespace

Image local_convolve(const Image& image, const PsfField& field, const Executor& executor) {
  check_shapes(image, field);
  Image out(image.width(), image.height(), image.channels());
  const int w = image.width();
  const int h = image.height();
  executor.parallel_for(static_cast<std::size_t>(h), [&](std::size_t begin, std::size_t end) {
    convolve_region(image, field, out, static_cast<int>(begin), static_cast<int>(end), 0, w, 0, h, 0, w);
  });
  return out;
}

Image local_convolve_patched(const Image& image, const PsfField& field, std::array<int, 2> patch,
                             PatchPadding padding, const Executor& executor) {
  check_shapes(image, field);
  if (patch[0] < 1 || patch[1] < 1) throw ValidationError("patch size must be positive");
  Image out(image.width(), image.height(), image.channels());
  const int w = image.width();
  const int h = image.height();
  const int pi_count = (h + patch[0] - 1) / patch[0];
  const int pj_count = (w + patch[1] - 1) / patch[1];
  const auto patches = static_cast<std::size_t>(pi_count * pj_count);
  executor.parallel_for(patches, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const int pi = static_cast<int>(p) / pj_count;
      const int pj = static_cast<int>(p) % pj_count;
      const int r0 = pi * patch[0];
      const int r1 = std::min(r0 + patch[0], h);
      const int c0 = pj * patch[1];
      const int c1 = std::min(c0 + patch[1], w);
      if (padding == PatchPadding::kHalo) {
        convolve_region(image, field, out, r0, r1, c0, c1, 0, h, 0, w);
      } else {
        convolve_region(image, field, out, r0, r1, c0, c1, r0, r1, c0, c1);
      }
    }
  });
  return out;
}

std::vector<double> stack_focus_distances(double min_depth_m, double max_depth_m, int stack_size,
                                          double perturb_frac, std::uint64_t seed) {
  if (stack_size < 1) throw ValidationError("stack size must be >= 1");
  if (!(max_depth_m >= min_depth_m)) throw ValidationError("depth range is empty");
  if (!(perturb_frac >= 0.0 && perturb_frac < 0.5))
    throw ValidationError("perturbation must lie in [0, 0.5) of the frame spacing");
  const auto n = static_cast<std::size_t>(stack_size);
  std::vector<double> out(n);
  if (max_depth_m - min_depth_m < 1e-9) {
    spdlog::warn("constant-depth image: all {} focus distances collapse to {} m", stack_size, min_depth_m);
    std::fill(out.begin(), out.end(), min_depth_m);
    return out;
  }
  Rng rng(derive_seed(seed, "focus_jitter"));
  const double span = max_depth_m - min_depth_m;
  const double spacing = stack_size > 1 ? span / (stack_size - 1) : span;
  for (std::size_t s = 0; s < n; ++s) {
    const double base = stack_size > 1 ? min_depth_m + spacing * static_cast<double>(s)
                                       : 0.5 * (min_depth_m + max_depth_m);
    const double jitter = perturb_frac > 0.0 ? rng.uniform(-perturb_frac, perturb_frac) * spacing : 0.0;
    out[s] = std::clamp(base + jitter, 0.2, 20.0);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Image render_frame(const LensPrescription& lens, const RgbdImage& image, double focus_m,
                   const PsfProvider& provider, const Executor& executor) {
  const PsfField field = pixel_psf_field(lens, image.depth, focus_m, provider, executor);
  return local_convolve(image.rgb, field, executor);
}

FocalStack simulate_stack(const LensPrescription& lens, const RgbdImage& image, int stack_size,
                          double perturb_frac, std::uint64_t seed, const PsfProvider& provider,
                          const Executor& executor) {
  FocalStack stack;
  stack.lens_name = lens.name;
  stack.psf_source = provider.provenance();
  stack.focus_distances_m =
      stack_focus_distances(image.depth.min(), image.depth.max(), stack_size, perturb_frac, seed);
  for (double f : stack.focus_distances_m) {
    spdlog::debug("rendering frame focused at {:.4f} m", f);
    stack.frames.push_back(render_frame(lens, image, f, provider, executor));
  }
  return stack;
}

}  // namespace aberray
