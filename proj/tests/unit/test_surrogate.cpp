#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aberray/error.hpp"
#include "aberray/focus.hpp"
#include "aberray/grid_model.hpp"
#include "aberray/mlp.hpp"
#include "aberray/parallel.hpp"
#include "aberray/rng.hpp"
#include "aberray/surrogate_eval.hpp"
#include "aberray/train.hpp"
#include "test_support.hpp"

namespace aberray {
namespace {

using testing::lensnet;

using MlpD = Mlp<double>;

MlpD::Matrix random_matrix(Rng& rng, int rows, int cols, double lo, double hi) {
  MlpD::Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(lo, hi);
  return m;
}

double loss_of(const MlpD& net, const MlpD::Matrix& x, const MlpD::Matrix& y) {
  MlpD::Gradients g = net.zero_gradients();
  return net.backward(x, y, g);
}

MlpModel zero_model() {
  MlpModel m;
  m.net = Mlp<float>(psf_network_dims());
  return m;
}

TEST(Mlp, ArchitectureMatchesTheDesign) {
  const auto dims = psf_network_dims();
  ASSERT_EQ(dims.size(), 7u);
  EXPECT_EQ(dims.front(), 4);
  EXPECT_EQ(dims.back(), 121);
  for (std::size_t i = 1; i + 1 < dims.size(); ++i) EXPECT_EQ(dims[i], 256);
  const auto count = static_cast<double>(Mlp<float>(dims).parameter_count());
  EXPECT_NEAR(count, 0.28e6, 0.028e6);
}

TEST(Mlp, ZeroNetworkOutputsOneHalf) {
  const MlpModel m = zero_model();
  const Frustum f = Frustum::for_lens(lensnet());
  const PsfGrid psf = mlp_forward(m, query_from_normalized(0.3, -0.2, 2.0, 1.5, f));
  ASSERT_EQ(psf.kernel.size(), 121u);
  EXPECT_EQ(psf.k, 11);
  EXPECT_EQ(psf.provenance, Provenance::kSurrogateMlp);
  for (double v : psf.kernel) EXPECT_EQ(v, 0.5);
}

TEST(Mlp, ForwardIsDeterministicAndInsideTheUnitInterval) {
  MlpModel m;
  m.net = Mlp<float>::initialized(psf_network_dims(), 17);
  const Frustum f = Frustum::for_lens(lensnet());
  const ObjectQuery q = query_from_normalized(-0.7, 0.1, 4.0, 0.9, f);
  const PsfGrid a = mlp_forward(m, q);
  const PsfGrid b = mlp_forward(m, q);
  const auto batch = mlp_forward(m, std::vector<ObjectQuery>{q, q});
  for (std::size_t i = 0; i < a.kernel.size(); ++i) {
    EXPECT_EQ(a.kernel[i], b.kernel[i]);
    // Columns of a batch can take different GEMM kernel paths in float.
    EXPECT_NEAR(a.kernel[i], batch[1].kernel[i], 1e-6);
    EXPECT_NEAR(batch[0].kernel[i], batch[1].kernel[i], 1e-6);
    EXPECT_GT(a.kernel[i], 0.0);
    EXPECT_LT(a.kernel[i], 1.0);
  }
}

TEST(Mlp, GradientsMatchCentralDifferences) {
  Rng rng(derive_seed(1, "gradcheck"));
  for (int trial = 0; trial < 3; ++trial) {
    MlpD net = MlpD::initialized({4, 8, 121}, 100 + trial);
    for (std::size_t l = 0; l < net.layer_count(); ++l)
      for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) net.bias(l)(i) = rng.uniform(-0.5, 0.5);
    const MlpD::Matrix x = random_matrix(rng, 4, 6, -1, 1);
    const MlpD::Matrix y = random_matrix(rng, 121, 6, 0, 0.2);
    MlpD::Gradients g = net.zero_gradients();
    net.backward(x, y, g);
    const double h = 1e-5;
    int checked = 0;
    for (int s = 0; s < 100; ++s) {
      const auto idx = static_cast<std::size_t>(rng.next() % net.parameter_count());
      const double p0 = net.parameter(idx);
      net.parameter(idx) = p0 + h;
      const double up = loss_of(net, x, y);
      net.parameter(idx) = p0 - h;
      const double down = loss_of(net, x, y);
      net.parameter(idx) = p0;
      const double numeric = (up - down) / (2 * h);
      const double analytic = MlpD::gradient(g, idx);
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      if (scale < 1e-10) continue;  // dead ReLU path
      EXPECT_LT(std::abs(numeric - analytic) / scale, 1e-4) << "parameter " << idx;
      ++checked;
    }
    EXPECT_GT(checked, 50);
  }
}

TEST(Mlp, PerfectTargetsGiveZeroLossAndGradient) {
  const MlpD net = MlpD::initialized({4, 8, 121}, 3);
  Rng rng(3);
  const MlpD::Matrix x = random_matrix(rng, 4, 5, -1, 1);
  MlpD::Gradients g = net.zero_gradients();
  EXPECT_EQ(net.backward(x, net.forward(x), g), 0.0);
  for (std::size_t i = 0; i < net.parameter_count(); ++i) EXPECT_EQ(MlpD::gradient(g, i), 0.0);
}

TEST(Mlp, DoublingTheResidualQuadruplesTheLoss) {
  const MlpD net = MlpD::initialized({4, 8, 121}, 5);
  Rng rng(5);
  const MlpD::Matrix x = random_matrix(rng, 4, 7, -1, 1);
  const MlpD::Matrix out = net.forward(x);
  const MlpD::Matrix y = random_matrix(rng, 121, 7, 0, 1);
  const MlpD::Matrix y2 = out + 2.0 * (y - out);
  EXPECT_NEAR(loss_of(net, x, y2), 4.0 * loss_of(net, x, y), 1e-12);
}

TEST(Mlp, NonFiniteLossNamesTheSample) {
  const MlpD net = MlpD::initialized({4, 8, 121}, 5);
  Rng rng(5);
  const MlpD::Matrix x = random_matrix(rng, 4, 4, -1, 1);
  MlpD::Matrix y = random_matrix(rng, 121, 4, 0, 1);
  y(7, 2) = std::numeric_limits<double>::quiet_NaN();
  MlpD::Gradients g = net.zero_gradients();
  try {
    net.backward(x, y, g);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("index 2"), std::string::npos) << e.what();
  }
}

TEST(AdamW, ZeroGradientIsANoOpWithoutDecay) {
  MlpD net = MlpD::initialized({4, 8, 121}, 9);
  const MlpD before = net;
  AdamW<double> opt(net, AdamWConfig{.weight_decay = 0.0});
  const MlpD::Gradients zero = net.zero_gradients();
  for (int i = 0; i < 5; ++i) opt.step(net, zero, 1e-3);
  for (std::size_t i = 0; i < net.parameter_count(); ++i) {
    MlpD copy = before;
    EXPECT_EQ(net.parameter(i), copy.parameter(i));
  }
}

TEST(AdamW, ZeroGradientOnlyAppliesDecoupledDecay) {
  MlpD net = MlpD::initialized({4, 8, 121}, 9);
  MlpD before = net;
  AdamW<double> opt(net, AdamWConfig{.weight_decay = 0.1});
  opt.step(net, net.zero_gradients(), 1e-2);
  for (std::size_t i = 0; i < net.parameter_count(); ++i)
    EXPECT_DOUBLE_EQ(net.parameter(i), before.parameter(i) * (1.0 - 1e-2 * 0.1));
}

TEST(AdamW, StepMovesAgainstTheGradient) {
  MlpD net = MlpD::initialized({4, 8, 121}, 2);
  Rng rng(2);
  const MlpD::Matrix x = random_matrix(rng, 4, 8, -1, 1);
  const MlpD::Matrix y = random_matrix(rng, 121, 8, 0, 0.1);
  AdamW<double> opt(net, AdamWConfig{.weight_decay = 0.0});
  MlpD::Gradients g = net.zero_gradients();
  const double first = net.backward(x, y, g);
  for (int i = 0; i < 20; ++i) {
    net.backward(x, y, g);
    opt.step(net, g, 1e-3);
  }
  EXPECT_LT(loss_of(net, x, y), first);
  EXPECT_EQ(opt.steps(), 20u);
}

TEST(Schedule, CosineEndpointsAndMonotonicity) {
  const std::uint64_t total = 50000;
  EXPECT_EQ(cosine_learning_rate(1e-3, 0, total), 1e-3);
  EXPECT_LE(cosine_learning_rate(1e-3, total, total), 1e-9);
  EXPECT_LE(cosine_learning_rate(1e-3, total - 1, total), 1e-9);
  double previous = 1.0;
  for (std::uint64_t s = 0; s <= total; s += 97) {
    const double r = cosine_learning_rate(1e-3, s, total);
    EXPECT_LE(r, previous);
    previous = r;
  }
  EXPECT_NEAR(cosine_learning_rate(1e-3, total / 2, total), 0.5e-3, 1e-15);
}

TEST(Training, BatchesShareOneFocusAndStayInTheFrustum) {
  const Frustum f = Frustum::for_lens(lensnet());
  TrainConfig cfg;
  cfg.seed = 4;
  for (std::uint64_t it = 0; it < 50; ++it) {
    const TrainingBatch b = sample_training_batch(f, cfg, it);
    ASSERT_EQ(b.queries.size(), 256u);
    EXPECT_GE(b.focus_m, 0.2);
    EXPECT_LE(b.focus_m, 20.0);
    for (const ObjectQuery& q : b.queries) {
      EXPECT_EQ(q.focus_m, b.focus_m);
      EXPECT_GE(q.z_m, 0.2);
      EXPECT_LE(q.z_m, 20.0);
      EXPECT_LE(std::abs(q.x_norm), 1.0);
      EXPECT_LE(std::abs(q.y_norm), 1.0);
    }
    const TrainingBatch again = sample_training_batch(f, cfg, it);
    EXPECT_EQ(again.focus_m, b.focus_m);
    EXPECT_EQ(again.queries.back().z_m, b.queries.back().z_m);
  }
}

TEST(Training, ZeroIterationsReturnsTheInitialModel) {
  TrainConfig cfg;
  cfg.iterations = 0;
  cfg.seed = 12;
  const TrainResult r = train_mlp(lensnet(), cfg);
  EXPECT_TRUE(r.loss_history.empty());
  const Mlp<float> init = Mlp<float>::initialized(psf_network_dims(), 12);
  for (std::size_t l = 0; l < init.layer_count(); ++l) EXPECT_EQ(r.model.net.weight(l), init.weight(l));
  // The output bias starts at the logit of 1/k^2 so the first kernel is flat.
  const PsfGrid first = mlp_forward(r.model, query_from_normalized(0, 0, 1.0, 1.0, Frustum::for_lens(lensnet())));
  EXPECT_NEAR(first.sum(), 1.0, 0.2);
}

TEST(Training, ThreadCountDoesNotChangeTheResult) {
  TrainConfig cfg;
  cfg.iterations = 3;
  cfg.batch_points = 32;
  cfg.spp_groundtruth = 256;
  cfg.seed = 5;
  const TrainResult a = train_mlp(lensnet(), cfg, Executor(1));
  const TrainResult b = train_mlp(lensnet(), cfg, Executor(3));
  EXPECT_EQ(a.loss_history, b.loss_history);
  for (std::size_t l = 0; l < a.model.net.layer_count(); ++l) {
    EXPECT_EQ(a.model.net.weight(l), b.model.net.weight(l));
    EXPECT_EQ(a.model.net.bias(l), b.model.net.bias(l));
  }
}

TEST(Training, LossDescendsOverAShortRun) {
  TrainConfig cfg;
  cfg.iterations = 600;
  cfg.batch_points = 64;
  cfg.spp_groundtruth = 256;
  cfg.seed = 1;
  const TrainResult r = train_mlp(lensnet(), cfg);
  ASSERT_EQ(r.loss_history.size(), 600u);
  const auto tenth = static_cast<std::ptrdiff_t>(r.loss_history.size() / 10);
  const double head = std::accumulate(r.loss_history.begin(), r.loss_history.begin() + tenth, 0.0) / tenth;
  const double tail = std::accumulate(r.loss_history.end() - tenth, r.loss_history.end(), 0.0) / tenth;
  EXPECT_LT(tail, head);
}

class GridModelTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    grid_ = new GridModel(build_grid_model(lensnet(), {1.0, 3.0}, GridLayout{4, 3, 3}, 512, 7, 0.05));
  }
  static void TearDownTestSuite() {
    delete grid_;
    grid_ = nullptr;
  }
  static ObjectQuery at(double x, double y, double z_norm, double focus_m) {
    ObjectQuery q;
    q.x_norm = x;
    q.y_norm = y;
    q.z_norm = z_norm;
    q.focus_m = focus_m;
    q.z_m = grid_->frustum.denormalize_depth(z_norm);
    q.focus_norm = grid_->frustum.normalize_depth(focus_m);
    return q;
  }
  static GridModel* grid_;
};
GridModel* GridModelTest::grid_ = nullptr;

TEST_F(GridModelTest, AxesAreStrictlyIncreasingAndKernelsNormalised) {
  for (const auto* axis : {&grid_->z_norm, &grid_->x_norm, &grid_->y_norm, &grid_->focus_m})
    EXPECT_TRUE(std::is_sorted(axis->begin(), axis->end()) &&
                std::adjacent_find(axis->begin(), axis->end()) == axis->end());
  EXPECT_EQ(grid_->x_norm.front(), -1.0);
  EXPECT_EQ(grid_->x_norm.back(), 1.0);
  EXPECT_EQ(grid_->z_norm.front(), 0.0);
  EXPECT_EQ(grid_->z_norm.back(), 1.0);
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t z = 0; z < 4; ++z)
      for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) EXPECT_NEAR(grid_->stored(f, z, y, x).sum(), 1.0, 1e-12);
}

TEST_F(GridModelTest, LatticeQueriesReturnStoredKernels) {
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t z = 0; z < 4; ++z)
      for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) {
          const PsfGrid got =
              grid_query(*grid_, at(grid_->x_norm[x], grid_->y_norm[y], grid_->z_norm[z], grid_->focus_m[f]));
          EXPECT_EQ(got.kernel, grid_->stored(f, z, y, x).kernel);
        }
}

TEST_F(GridModelTest, DepthMidpointAveragesNeighbours) {
  const double zm = 0.5 * (grid_->z_norm[1] + grid_->z_norm[2]);
  const PsfGrid got = grid_query(*grid_, at(grid_->x_norm[2], grid_->y_norm[0], zm, 1.0));
  const PsfGrid a = grid_->stored(0, 1, 0, 2);
  const PsfGrid b = grid_->stored(0, 2, 0, 2);
  for (std::size_t e = 0; e < got.kernel.size(); ++e) EXPECT_NEAR(got.kernel[e], 0.5 * (a.kernel[e] + b.kernel[e]), 1e-15);
}

TEST_F(GridModelTest, CellCentreWeightsAreEqual) {
  const TrilinearStencil s = grid_stencil(*grid_, at(0.5, -0.5, 0.5 * grid_->z_norm[1], 2.9));
  EXPECT_EQ(s.focus, 1u);
  double total = 0.0;
  for (int c = 0; c < 8; ++c) {
    EXPECT_DOUBLE_EQ(s.weight(c), 0.125);
    total += s.weight(c);
  }
  EXPECT_DOUBLE_EQ(total, 1.0);
}

TEST_F(GridModelTest, BlendsStayConvex) {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const PsfGrid psf =
        grid_query(*grid_, at(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 1), rng.uniform(0.2, 20)));
    EXPECT_NEAR(psf.sum(), 1.0, 1e-12);
    for (double v : psf.kernel) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST_F(GridModelTest, OutsideTheHullIsAnError) {
  EXPECT_THROW(grid_query(*grid_, at(1.0001, 0, 0.5, 1.0)), ValidationError);
  EXPECT_THROW(grid_query(*grid_, at(0, 0, -0.01, 1.0)), ValidationError);
}

TEST(GridModel, DenseLatticeBeatsSparseLattice) {
  const LensPrescription& lens = lensnet();
  const double focus = 1.5;
  const GridModel sparse = build_grid_model(lens, {focus}, GridLayout{4, 3, 3}, 2048, 1, 0.05);
  const GridModel dense = build_grid_model(lens, {focus}, GridLayout{13, 9, 9}, 2048, 2, 0.05);
  const Tracer tracer = focused_tracer(lens, focus);
  const Frustum& f = sparse.frustum;
  Rng rng(derive_seed(3, "refinement"));
  int dense_wins = 0;
  double total_sparse = 0.0, total_dense = 0.0;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const double zn = rng.uniform(0, 1);
    const ObjectQuery q = query_from_normalized(rng.uniform(-1, 1), rng.uniform(-1, 1), f.denormalize_depth(zn), focus, f);
    const PsfGrid truth = raytraced_psf(tracer, q, 4096, derive_seed(3, "truth", static_cast<std::uint64_t>(i)), 0.05);
    double ls = 0.0, ld = 0.0;
    const PsfGrid ps = grid_query(sparse, q);
    const PsfGrid pd = grid_query(dense, q);
    for (std::size_t e = 0; e < truth.kernel.size(); ++e) {
      ls += std::abs(ps.kernel[e] - truth.kernel[e]);
      ld += std::abs(pd.kernel[e] - truth.kernel[e]);
    }
    dense_wins += ld < ls;
    total_sparse += ls;
    total_dense += ld;
  }
  EXPECT_GE(dense_wins, 3 * n / 4);
  EXPECT_LT(total_dense, total_sparse);
}

TEST(SurrogateEval, RayTracerAgainstItselfIsExact) {
  TestSpec spec;
  spec.focus_count = 2;
  spec.depth_count = 3;
  spec.nx = 2;
  spec.ny = 2;
  spec.spp = 256;
  spec.seed = 8;
  const auto self = raytraced_surrogate(lensnet(), spec.spp, spec.seed, spec.pixel_pitch_mm);
  const SurrogateErrors e = evaluate_surrogate(*self, lensnet(), spec);
  EXPECT_EQ(e.l1, 0.0);
  EXPECT_EQ(e.l2, 0.0);
  EXPECT_EQ(e.kernels, 24u);
}

TEST(SurrogateEval, TestLatticeUsesCellMidpoints) {
  TestSpec spec;
  const Frustum f = Frustum::for_lens(lensnet());
  const auto focus = spec.focus_distances_m(f);
  ASSERT_EQ(focus.size(), 20u);
  EXPECT_NEAR(f.normalize_depth(focus.front()), 0.025, 1e-12);
  EXPECT_EQ(spec.depths_m(f).size(), 40u);
  const auto xs = spec.x_norms();
  ASSERT_EQ(xs.size(), 10u);
  EXPECT_NEAR(xs.front(), -0.9, 1e-12);
  EXPECT_NEAR(xs.back(), 0.9, 1e-12);
  EXPECT_EQ(spec.y_norms().size(), 8u);
}

TEST(SurrogateEval, GridBeatsAnUntrainedNetwork) {
  TestSpec spec;
  spec.focus_count = 2;
  spec.depth_count = 4;
  spec.nx = 3;
  spec.ny = 2;
  spec.spp = 512;
  const Frustum f = Frustum::for_lens(lensnet());
  const GridModel grid = build_grid_model(lensnet(), spec.focus_distances_m(f), GridLayout{5, 3, 3}, 512, 1, 0.05);
  const auto g = grid_surrogate(grid);
  const auto m = mlp_surrogate(zero_model());
  const auto errs = evaluate_surrogates({g.get(), m.get()}, lensnet(), spec);
  EXPECT_LT(errs[0].l1, errs[1].l1);
  // An untrained network sits near 0.5 everywhere.
  EXPECT_GT(errs[1].l1, 0.4);
}

}  // namespace
}  // namespace aberray
