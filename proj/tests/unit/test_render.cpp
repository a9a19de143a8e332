#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "aberray/error.hpp"
#include "aberray/grid_model.hpp"
#include "aberray/parallel.hpp"
#include "aberray/provider.hpp"
#include "aberray/render.hpp"
#include "aberray/rng.hpp"
#include "aberray/scene.hpp"
#include "test_support.hpp"

namespace aberray {
namespace {

using testing::lensnet;

Image random_image(int w, int h, int c, std::uint64_t seed) {
  Image im(w, h, c);
  Rng rng(seed);
  for (double& v : im.values()) v = rng.uniform();
  return im;
}

// Positive kernels with unit sum, different at every pixel.
PsfField random_field(int w, int h, int k, std::uint64_t seed) {
  PsfField f(w, h, k);
  Rng rng(seed);
  const auto kk = static_cast<std::size_t>(k * k);
  for (std::size_t p = 0; p < f.kernels.size() / kk; ++p) {
    double* kern = f.kernels.data() + p * kk;
    double s = 0.0;
    for (std::size_t e = 0; e < kk; ++e) s += kern[e] = rng.uniform();
    for (std::size_t e = 0; e < kk; ++e) kern[e] /= s;
  }
  return f;
}

PsfField constant_field(int w, int h, int k, const std::vector<double>& kernel) {
  PsfField f(w, h, k);
  for (std::size_t p = 0; p < f.kernels.size(); p += kernel.size())
    std::copy(kernel.begin(), kernel.end(), f.kernels.begin() + static_cast<std::ptrdiff_t>(p));
  return f;
}

double mean_abs_diff(const Image& a, const Image& b, int r0, int r1, int c0, int c1) {
  double s = 0.0;
  int n = 0;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c)
      for (int ch = 0; ch < a.channels(); ++ch, ++n) s += std::abs(a.at(r, c, ch) - b.at(r, c, ch));
  return s / n;
}

TEST(Rgbd, DepthsAreClampedIntoRangeAndCounted) {
  Image depth(3, 1, 1);
  depth.at(0, 0) = 0.1;
  depth.at(0, 1) = 1.0;
  depth.at(0, 2) = 30.0;
  const RgbdImage im = make_rgbd(Image(3, 1, 3, 0.5), depth);
  EXPECT_EQ(im.clamped_count, 2u);
  EXPECT_EQ(im.depth.at(0, 0), 0.2);
  EXPECT_EQ(im.depth.at(0, 1), 1.0);
  EXPECT_EQ(im.depth.at(0, 2), 20.0);
  EXPECT_EQ(im.clamped, (std::vector<unsigned char>{1, 0, 1}));
  Image bad(3, 1, 3, 0.5);
  bad.at(0, 1, 2) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(make_rgbd(bad, depth), ValidationError);
  EXPECT_THROW(make_rgbd(Image(2, 1, 3), depth), ValidationError);
}

TEST(PixelQuery, ImageIsInvertedAndSpansTheSensor) {
  const LensPrescription& lens = lensnet();
  const Frustum f = Frustum::for_lens(lens);
  const int w = 640, h = 480;
  const double pitch = lens.sensor_width_mm / w;
  const ObjectQuery tl = pixel_query(0, 0, w, h, 2.0, 1.5, lens, f, pitch);
  EXPECT_NEAR(tl.x_norm, 1.0 - 1.0 / w, 1e-12);
  EXPECT_NEAR(tl.y_norm, 1.0 - 1.0 / h, 1e-12);
  const ObjectQuery br = pixel_query(h - 1, w - 1, w, h, 2.0, 1.5, lens, f, pitch);
  EXPECT_NEAR(br.x_norm, -tl.x_norm, 1e-12);
  EXPECT_NEAR(br.y_norm, -tl.y_norm, 1e-12);
  EXPECT_EQ(tl.z_m, 2.0);
  EXPECT_EQ(tl.focus_m, 1.5);
  std::size_t clamped = 0;
  const ObjectQuery out = pixel_query(0, 0, w, h, 2.0, 1.5, lens, f, 2.0 * pitch, &clamped);
  EXPECT_EQ(clamped, 1u);
  EXPECT_EQ(out.x_norm, 1.0);
}

TEST(PsfFieldTest, SinglePixelImageHasOneKernel) {
  const auto provider = make_gaussian_provider(lensnet(), 0.05);
  const PsfField field = pixel_psf_field(lensnet(), Image(1, 1, 1, 1.0), 1.5, *provider);
  EXPECT_EQ(field.width, 1);
  EXPECT_EQ(field.height, 1);
  EXPECT_EQ(field.kernels.size(), 121u);
}

TEST(PsfFieldTest, GaussianKernelsDependOnlyOnDepth) {
  const auto provider = make_gaussian_provider(lensnet(), 0.05);
  Image depth(40, 30, 1, 0.9);
  for (int c = 20; c < 40; ++c)
    for (int r = 0; r < 30; ++r) depth.at(r, c) = 3.0;
  const PsfField field = pixel_psf_field(lensnet(), depth, 1.5, *provider);
  for (int r = 0; r < 30; ++r)
    for (int c = 0; c < 40; ++c) {
      const int ref_c = c < 20 ? 0 : 20;
      EXPECT_TRUE(std::equal(field.kernel(r, c), field.kernel(r, c) + 121, field.kernel(0, ref_c)));
    }
  EXPECT_FALSE(std::equal(field.kernel(0, 0), field.kernel(0, 0) + 121, field.kernel(0, 20)));
}

TEST(PsfFieldTest, SurrogateCentreIsSharperThanCorner) {
  const LensPrescription& lens = lensnet();
  const GridModel grid = build_grid_model(lens, {1.5}, GridLayout{}, 1024, 3, 0.05);
  const auto provider = make_grid_provider(grid);
  const int w = 640, h = 480;
  const PsfField field = pixel_psf_field(lens, Image(w, h, 1, 1.5), 1.5, *provider);
  auto moment = [&](int r, int c) {
    PsfGrid g(11, 0.05, Provenance::kSurrogateGrid);
    std::copy(field.kernel(r, c), field.kernel(r, c) + 121, g.kernel.begin());
    return g.second_moment();
  };
  const double centre = moment(h / 2, w / 2);
  for (auto [r, c] : {std::pair{0, 0}, {0, w - 1}, {h - 1, 0}, {h - 1, w - 1}}) EXPECT_LT(centre, moment(r, c));

  // Same comparison straight from the ray tracer.
  const auto rt = make_raytraced_provider(lens, 0.05, 2048, 1)->at_focus(1.5);
  const Frustum f = Frustum::for_lens(lens);
  const std::vector<ObjectQuery> qs = {pixel_query(h / 2, w / 2, w, h, 1.5, 1.5, lens, f, 0.05),
                                       pixel_query(0, 0, w, h, 1.5, 1.5, lens, f, 0.05)};
  std::vector<double> out(2 * 121);
  rt->evaluate(qs, out.data());
  PsfGrid a(11, 0.05, Provenance::kRaytraced), b(11, 0.05, Provenance::kRaytraced);
  std::copy(out.begin(), out.begin() + 121, a.kernel.begin());
  std::copy(out.begin() + 121, out.end(), b.kernel.begin());
  EXPECT_LT(a.second_moment(), b.second_moment());
}

TEST(PsfFieldTest, ThreadCountDoesNotChangeTheField) {
  const auto provider = make_raytraced_provider(lensnet(), 0.2, 64, 5);
  const RgbdImage scene = textured_tile_scene(SceneOptions{160, 120, 6, 0.6, 3.0}, 4);
  const PsfField a = pixel_psf_field(lensnet(), scene.depth, 1.2, *provider, Executor(1));
  const PsfField b = pixel_psf_field(lensnet(), scene.depth, 1.2, *provider, Executor(3));
  EXPECT_EQ(a.kernels, b.kernels);
}

TEST(LocalConvolve, DeltaKernelsAreTheIdentity) {
  const Image im = random_image(37, 23, 3, 1);
  std::vector<double> delta(121, 0.0);
  delta[60] = 1.0;
  const Image out = local_convolve(im, constant_field(37, 23, 11, delta));
  EXPECT_EQ(out, im);
}

TEST(LocalConvolve, UniformKernelsMatchABoxFilter) {
  const int w = 29, h = 17, k = 5;
  const Image im = random_image(w, h, 2, 2);
  const Image out = local_convolve(im, constant_field(w, h, k, std::vector<double>(k * k, 1.0 / (k * k))));
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < 2; ++ch) {
        double s = 0.0;
        for (int dr = -2; dr <= 2; ++dr)
          for (int dc = -2; dc <= 2; ++dc)
            s += im.at(std::clamp(r + dr, 0, h - 1), std::clamp(c + dc, 0, w - 1), ch);
        EXPECT_NEAR(out.at(r, c, ch), s / (k * k), 1e-12);
      }
}

TEST(LocalConvolve, ImpulseResponseIsTheUnrotatedGather) {
  // A 5x5 image with one lit pixel at (2, 2) and 3x3 kernels that differ per
  // pixel: out(i, j) = K_ij[2 - i + 1][2 - j + 1] inside the neighbourhood.
  Image im(5, 5, 1, 0.0);
  im.at(2, 2) = 1.0;
  const PsfField field = random_field(5, 5, 3, 9);
  const Image out = local_convolve(im, field);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const int a = 2 - i + 1, b = 2 - j + 1;
      const double expected = (a >= 0 && a < 3 && b >= 0 && b < 3) ? field.kernel(i, j)[a * 3 + b] : 0.0;
      EXPECT_EQ(out.at(i, j), expected) << i << "," << j;
    }
}

TEST(LocalConvolve, PreservesMeanBrightnessAndRange) {
  const Image im = random_image(120, 90, 3, 3);
  const Image out = local_convolve(im, random_field(120, 90, 11, 4));
  EXPECT_NEAR(out.mean(), im.mean(), 0.005 * im.mean());
  EXPECT_GE(out.min(), im.min());
  EXPECT_LE(out.max(), im.max());
}

TEST(LocalConvolve, ShapeMismatchIsAnError) {
  EXPECT_THROW(local_convolve(random_image(10, 10, 1, 1), random_field(10, 9, 3, 1)), ValidationError);
  EXPECT_THROW(local_convolve(random_image(10, 10, 1, 1), PsfField(10, 10, 4)), ValidationError);
}

TEST(LocalConvolve, ThreadCountDoesNotChangeTheOutput) {
  const Image im = random_image(64, 48, 3, 5);
  const PsfField field = random_field(64, 48, 11, 6);
  EXPECT_EQ(local_convolve(im, field, Executor(1)), local_convolve(im, field, Executor(4)));
}

TEST(Patched, ImageSmallerThanAPatchIsUnchanged) {
  const Image im = random_image(50, 40, 3, 7);
  const PsfField field = random_field(50, 40, 11, 8);
  const Image full = local_convolve(im, field);
  EXPECT_EQ(local_convolve_patched(im, field), full);
  EXPECT_EQ(local_convolve_patched(im, field, {320, 480}, PatchPadding::kReplicate), full);
}

TEST(Patched, HaloMatchesAndReplicateDiffersOnlyAtSeams) {
  const int w = 100, h = 70, k = 11;
  const std::array<int, 2> patch = {32, 48};
  const Image im = random_image(w, h, 3, 9);
  const PsfField field = random_field(w, h, k, 10);
  const Image full = local_convolve(im, field);
  EXPECT_EQ(local_convolve_patched(im, field, patch, PatchPadding::kHalo), full);
  const Image rep = local_convolve_patched(im, field, patch, PatchPadding::kReplicate);
  double off_seam = 0.0, on_seam = 0.0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      // Within k/2 of a patch edge that is not also an image edge.
      const int r0 = r / patch[0] * patch[0], r1 = std::min(r0 + patch[0], h);
      const int c0 = c / patch[1] * patch[1], c1 = std::min(c0 + patch[1], w);
      const bool seam = (r - r0 < k / 2 && r0 > 0) || (r1 - 1 - r < k / 2 && r1 < h) ||
                        (c - c0 < k / 2 && c0 > 0) || (c1 - 1 - c < k / 2 && c1 < w);
      for (int ch = 0; ch < 3; ++ch) {
        const double d = std::abs(rep.at(r, c, ch) - full.at(r, c, ch));
        (seam ? on_seam : off_seam) = std::max(seam ? on_seam : off_seam, d);
      }
    }
  EXPECT_LT(off_seam, 1e-9);
  EXPECT_GT(on_seam, 1e-6);
}

TEST(StackDistances, SingleFrameSitsAtMidDepth) {
  EXPECT_EQ(stack_focus_distances(1.0, 3.0, 1, 0.0, 1), std::vector<double>{2.0});
}

TEST(StackDistances, JitteredAscendingAndBounded) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = stack_focus_distances(0.5, 5.0, 10, 0.25, seed);
    ASSERT_EQ(d.size(), 10u);
    const double spacing = 4.5 / 9.0;
    for (std::size_t s = 0; s < d.size(); ++s) {
      if (s > 0) EXPECT_GT(d[s], d[s - 1]);
      EXPECT_LE(std::abs(d[s] - (0.5 + spacing * static_cast<double>(s))), 0.25 * spacing + 1e-12);
    }
  }
  EXPECT_EQ(stack_focus_distances(0.5, 5.0, 10, 0.25, 3), stack_focus_distances(0.5, 5.0, 10, 0.25, 3));
  EXPECT_NE(stack_focus_distances(0.5, 5.0, 10, 0.25, 3), stack_focus_distances(0.5, 5.0, 10, 0.25, 4));
}

TEST(StackDistances, ConstantDepthCollapses) {
  const auto d = stack_focus_distances(1.7, 1.7, 4, 0.25, 1);
  EXPECT_EQ(d, std::vector<double>(4, 1.7));
  EXPECT_THROW(stack_focus_distances(1.0, 2.0, 0, 0.0, 1), ValidationError);
  EXPECT_THROW(stack_focus_distances(1.0, 2.0, 3, 0.5, 1), ValidationError);
}

TEST(SimulateStack, FramesFollowTheFocusList) {
  const LensPrescription& lens = lensnet();
  const RgbdImage scene = textured_tile_scene(SceneOptions{80, 60, 8, 0.6, 3.0}, 2);
  const auto provider = make_gaussian_provider(lens, lens.sensor_width_mm / 80);
  const FocalStack stack = simulate_stack(lens, scene, 4, 0.25, 7, *provider);
  ASSERT_EQ(stack.frames.size(), 4u);
  EXPECT_EQ(stack.focus_distances_m, stack_focus_distances(scene.depth.min(), scene.depth.max(), 4, 0.25, 7));
  EXPECT_EQ(stack.psf_source, Provenance::kGaussian);
  for (std::size_t s = 0; s < 4; ++s)
    EXPECT_EQ(stack.frames[s], render_frame(lens, scene, stack.focus_distances_m[s], *provider));
}

TEST(SimulateStack, GaussianAndRaytracedAgreeAtTheCentreAndDivergeAtTheCorner) {
  const LensPrescription& lens = lensnet();
  const int w = 640, h = 480;
  const double pitch = lens.sensor_width_mm / w;
  const RgbdImage plane = textured_plane(w, h, 1.5, 11);
  const auto gauss = make_gaussian_provider(lens, pitch);
  const auto traced = make_raytraced_provider(lens, pitch, 256, 12);
  const int p = 32;
  for (double focus : {1.3, 1.5, 1.8}) {
    const Image a = render_frame(lens, plane, focus, *gauss);
    const Image b = render_frame(lens, plane, focus, *traced);
    const double centre = mean_abs_diff(a, b, h / 2 - p / 2, h / 2 + p / 2, w / 2 - p / 2, w / 2 + p / 2);
    const double corner = mean_abs_diff(a, b, 12, 12 + p, 12, 12 + p);
    EXPECT_LT(centre, 2e-2) << "focus " << focus;
    // In focus the gap is field-dependent aberration alone; defocused, the
    // two blur shapes also differ at the centre, so only the ordering holds.
    EXPECT_GT(corner, (focus == 1.5 ? 2.0 : 1.0) * centre) << "focus " << focus << " centre " << centre
                                                           << " corner " << corner;
  }
}

}  // namespace
}  // namespace aberray
