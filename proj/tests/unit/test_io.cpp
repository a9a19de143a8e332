#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "aberray/error.hpp"
#include "aberray/grid_model.hpp"
#include "aberray/image_io.hpp"
#include "aberray/mlp.hpp"
#include "aberray/psf_io.hpp"
#include "aberray/rng.hpp"
#include "test_support.hpp"

namespace aberray {
namespace {

using testing::lensnet;
using testing::TempDir;

Image random_image(int w, int h, int c, std::uint64_t seed) {
  Image im(w, h, c);
  Rng rng(seed);
  for (double& v : im.values()) v = rng.uniform();
  return im;
}

TEST(Pfm, RoundTripKeepsFloatPrecision) {
  TempDir dir("pfm");
  for (int channels : {1, 3}) {
    const Image im = random_image(13, 7, channels, 1);
    write_pfm(dir / "x.pfm", im);
    const Image back = read_pfm(dir / "x.pfm");
    ASSERT_TRUE(back.same_shape(im));
    for (std::size_t i = 0; i < im.values().size(); ++i)
      EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(im.values()[i])));
  }
  // Row 0 stays at the top even though PFM stores bottom-up.
  Image ramp(2, 3, 1);
  for (int r = 0; r < 3; ++r) ramp.at(r, 0) = ramp.at(r, 1) = r;
  write_pfm(dir / "ramp.pfm", ramp);
  EXPECT_EQ(read_pfm(dir / "ramp.pfm"), ramp);
  EXPECT_EQ(read_depth(dir / "ramp.pfm", 0.001), ramp);
}

TEST(Pfm, GarbageIsRejected) {
  TempDir dir("pfm_bad");
  std::ofstream(dir / "bad.pfm") << "P6\n1 1\n255\n";
  EXPECT_THROW(read_pfm(dir / "bad.pfm"), Error);
  EXPECT_THROW(read_pfm(dir / "missing.pfm"), Error);
}

TEST(Png, SixteenBitLinearRoundTrip) {
  TempDir dir("png16");
  const Image im = random_image(17, 9, 3, 2);
  write_png_rgb(dir / "x.png", im, true);
  const Image back = read_png_rgb(dir / "x.png");
  ASSERT_TRUE(back.same_shape(im));
  for (std::size_t i = 0; i < im.values().size(); ++i) EXPECT_NEAR(back.values()[i], im.values()[i], 0.5 / 65535 + 1e-12);
}

TEST(Png, EightBitSrgbRoundTrip) {
  TempDir dir("png8");
  const Image im = random_image(17, 9, 3, 3);
  write_png_rgb(dir / "x.png", im, false);
  const Image back = read_png_rgb(dir / "x.png");
  for (std::size_t i = 0; i < im.values().size(); ++i) EXPECT_NEAR(back.values()[i], im.values()[i], 0.01);
  // Out-of-range values are clamped on write.
  Image hot(1, 1, 3, 1.7);
  hot.at(0, 0, 1) = -0.3;
  write_png_rgb(dir / "hot.png", hot, true);
  const Image h = read_png_rgb(dir / "hot.png");
  EXPECT_EQ(h.at(0, 0, 0), 1.0);
  EXPECT_EQ(h.at(0, 0, 1), 0.0);
}

TEST(Png, ColormapWritesRgb) {
  TempDir dir("cmap");
  Image scalar(20, 10, 1);
  for (int c = 0; c < 20; ++c)
    for (int r = 0; r < 10; ++r) scalar.at(r, c) = c;
  write_colormap_png(dir / "c.png", scalar, 0.0, 19.0);
  const Image rgb = read_png_rgb(dir / "c.png");
  EXPECT_EQ(rgb.channels(), 3);
  EXPECT_NE(rgb.at(0, 0, 0), rgb.at(0, 19, 0));
}

TEST(PsfDatasetIo, RoundTrip) {
  TempDir dir("psfg");
  PsfDataset data;
  Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    PsfGrid g(11, 0.05, Provenance::kRaytraced);
    for (double& v : g.kernel) v = rng.uniform();
    ObjectQuery q;
    q.x_norm = rng.uniform(-1, 1);
    q.y_norm = rng.uniform(-1, 1);
    q.z_norm = rng.uniform();
    q.focus_norm = rng.uniform();
    data.add(g, q);
  }
  write_psf_dataset(dir / "d.psfg", data);
  const PsfDataset back = read_psf_dataset(dir / "d.psfg");
  EXPECT_EQ(back.k, 11);
  EXPECT_EQ(back.kernels, data.kernels);
  EXPECT_EQ(back.queries, data.queries);
  std::ofstream(dir / "junk.psfg") << "NOPE";
  EXPECT_THROW(read_psf_dataset(dir / "junk.psfg"), Error);
}

TEST(MlpIo, RoundTripIsExact) {
  TempDir dir("mlpw");
  MlpModel m;
  m.net = Mlp<float>::initialized({4, 16, 16, 121}, 3);
  m.pixel_pitch_mm = 0.04;
  m.depth_norm = DepthNorm::kInverse;
  m.lens_name = "lensnet_50mm_f2.8";
  m.config_echo = "iterations=10\nseed=3\n";
  save_mlp(dir / "m.mlpw", m);
  const MlpModel back = load_mlp(dir / "m.mlpw");
  EXPECT_EQ(back.net.dims(), m.net.dims());
  for (std::size_t l = 0; l < m.net.layer_count(); ++l) {
    EXPECT_EQ(back.net.weight(l), m.net.weight(l));
    EXPECT_EQ(back.net.bias(l), m.net.bias(l));
  }
  EXPECT_EQ(back.pixel_pitch_mm, 0.04);
  EXPECT_EQ(back.depth_norm, DepthNorm::kInverse);
  EXPECT_EQ(back.lens_name, m.lens_name);
  EXPECT_EQ(back.k(), 11);
}

TEST(GridIo, RoundTripRebuildsTheLattice) {
  TempDir dir("grid");
  const GridModel g = build_grid_model(lensnet(), {1.0, 2.5}, GridLayout{3, 3, 2}, 128, 2, 0.05);
  save_grid_model(dir / "g.psfg", g);
  const GridModel back = load_grid_model(dir / "g.psfg", lensnet(), 0.05);
  EXPECT_EQ(back.z_norm, g.z_norm);
  EXPECT_EQ(back.x_norm, g.x_norm);
  EXPECT_EQ(back.y_norm, g.y_norm);
  ASSERT_EQ(back.focus_m.size(), 2u);
  for (std::size_t f = 0; f < 2; ++f) EXPECT_NEAR(back.focus_m[f], g.focus_m[f], 1e-5);
  ASSERT_EQ(back.kernels.size(), g.kernels.size());
  for (std::size_t i = 0; i < g.kernels.size(); ++i)
    EXPECT_EQ(back.kernels[i], static_cast<double>(static_cast<float>(g.kernels[i])));

  // A dataset that is not a full lattice is refused.
  PsfDataset partial = read_psf_dataset(dir / "g.psfg");
  partial.kernels.pop_back();
  partial.queries.pop_back();
  write_psf_dataset(dir / "partial.psfg", partial);
  EXPECT_THROW(load_grid_model(dir / "partial.psfg", lensnet(), 0.05), ValidationError);
}

}  // namespace
}  // namespace aberray
