#include "aberray/surrogate_eval.hpp"

#include <bit>
#include <chrono>
#include <cmath>

#include "aberray/error.hpp"
#include "aberray/focus.hpp"
#include "aberray/rng.hpp"

namespace aberray {
namespace {

class MlpSurrogate final : public Surrogate {
 public:
  explicit MlpSurrogate(const MlpModel& m) : model_(m) {}
  std::string name() const override { return "mlp"; }
  std::vector<PsfGrid> predict(double, const std::vector<ObjectQuery>& q) const override {
    return mlp_forward(model_, q);
  }

 private:
  MlpModel model_;
};

class GridSurrogate final : public Surrogate {
 public:
  explicit GridSurrogate(const GridModel& m) : model_(m) {}
  std::string name() const override { return "grid"; }
  std::vector<PsfGrid> predict(double, const std::vector<ObjectQuery>& q) const override {
    std::vector<PsfGrid> out;
    out.reserve(q.size());
    for (const auto& query : q) out.push_back(grid_query(model_, query));
    return out;
  }

 private:
  GridModel model_;
};

class RaytracedSurrogate final : public Surrogate {
 public:
  RaytracedSurrogate(const LensPrescription& lens, std::size_t spp, std::uint64_t seed, double pitch, int k)
      : lens_(lens), spp_(spp), seed_(seed), pitch_(pitch), k_(k) {}
  std::string name() const override { return "raytraced"; }
  std::vector<PsfGrid> predict(double focus_m, const std::vector<ObjectQuery>& q) const override {
    const Tracer tracer = focused_tracer(lens_, focus_m);
    std::vector<PsfGrid> out;
    out.reserve(q.size());
    for (const auto& query : q) out.push_back(raytraced_psf(tracer, query, spp_, query_seed(seed_, query), pitch_, k_));
    return out;
  }

 private:
  LensPrescription lens_;
  std::size_t spp_;
  std::uint64_t seed_;
  double pitch_;
  int k_;
};

std::vector<double> midpoints(int n, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * (i + 0.5) / n;
  return v;
}

}  // namespace

std::unique_ptr<Surrogate> mlp_surrogate(const MlpModel& model) { return std::make_unique<MlpSurrogate>(model); }
std::unique_ptr<Surrogate> grid_surrogate(const GridModel& model) { return std::make_unique<GridSurrogate>(model); }
std::unique_ptr<Surrogate> raytraced_surrogate(const LensPrescription& lens, std::size_t spp, std::uint64_t seed,
                                               double pixel_pitch_mm, int k) {
  return std::make_unique<RaytracedSurrogate>(lens, spp, seed, pixel_pitch_mm, k);
}

std::uint64_t query_seed(std::uint64_t root, const ObjectQuery& q) {
  std::uint64_t h = derive_seed(root, "query");
  for (double v : {q.x_norm, q.y_norm, q.z_norm, q.focus_norm}) h = derive_seed(h, "coord", std::bit_cast<std::uint64_t>(v));
  return h;
}

std::vector<double> TestSpec::focus_distances_m(const Frustum& frustum) const {
  auto v = midpoints(focus_count, 0.0, 1.0);
  for (double& f : v) f = frustum.denormalize_depth(f);
  return v;
}

std::vector<double> TestSpec::depths_m(const Frustum& frustum) const {
  auto v = midpoints(depth_count, 0.0, 1.0);
  for (double& z : v) z = frustum.denormalize_depth(z);
  return v;
}

std::vector<double> TestSpec::x_norms() const { return midpoints(nx, -1.0, 1.0); }
std::vector<double> TestSpec::y_norms() const { return midpoints(ny, -1.0, 1.0); }

std::vector<SurrogateErrors> evaluate_surrogates(const std::vector<const Surrogate*>& models,
                                                 const LensPrescription& lens, const TestSpec& spec,
                                                 const Executor& executor) {
  if (spec.focus_count < 1 || spec.depth_count < 1 || spec.nx < 1 || spec.ny < 1)
    throw ValidationError("test lattice must have at least one sample per axis");
  const auto start = std::chrono::steady_clock::now();
  const Frustum frustum = Frustum::for_lens(lens, spec.depth_norm);
  const auto focus = spec.focus_distances_m(frustum);
  const auto depths = spec.depths_m(frustum);
  const auto xs = spec.x_norms();
  const auto ys = spec.y_norms();
  const std::size_t per_focus = depths.size() * ys.size() * xs.size();
  const auto kk = static_cast<std::size_t>(spec.k * spec.k);

  std::vector<SurrogateErrors> errors(models.size());
  // Per-chunk partial sums keep the reduction order fixed for any thread count.
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (per_focus + kChunk - 1) / kChunk;
  std::vector<double> l1(chunks * models.size()), l2(chunks * models.size());

  for (double f : focus) {
    const Tracer tracer = focused_tracer(lens, f);
    std::vector<ObjectQuery> queries(per_focus);
    for (std::size_t p = 0; p < per_focus; ++p) {
      const std::size_t x = p % xs.size();
      const std::size_t y = (p / xs.size()) % ys.size();
      const std::size_t z = p / (xs.size() * ys.size());
      queries[p] = query_from_normalized(xs[x], ys[y], depths[z], f, frustum);
    }
    std::fill(l1.begin(), l1.end(), 0.0);
    std::fill(l2.begin(), l2.end(), 0.0);
    executor.parallel_for(chunks, [&](std::size_t begin, std::size_t end) {
      for (std::size_t c = begin; c < end; ++c) {
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(per_focus, lo + kChunk);
        const std::vector<ObjectQuery> batch(queries.begin() + static_cast<std::ptrdiff_t>(lo),
                                             queries.begin() + static_cast<std::ptrdiff_t>(hi));
        std::vector<PsfGrid> truth;
        truth.reserve(batch.size());
        for (const auto& q : batch)
          truth.push_back(raytraced_psf(tracer, q, spec.spp, query_seed(spec.seed, q), spec.pixel_pitch_mm, spec.k));
        for (std::size_t m = 0; m < models.size(); ++m) {
          const auto pred = models[m]->predict(f, batch);
          double s1 = 0.0, s2 = 0.0;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            if (pred[i].kernel.size() != kk) throw ValidationError(models[m]->name() + " returned a wrong-size kernel");
            for (std::size_t e = 0; e < kk; ++e) {
              const double d = pred[i].kernel[e] - truth[i].kernel[e];
              s1 += std::abs(d);
              s2 += d * d;
            }
          }
          l1[m * chunks + c] = s1;
          l2[m * chunks + c] = s2;
        }
      }
    });
    for (std::size_t m = 0; m < models.size(); ++m)
      for (std::size_t c = 0; c < chunks; ++c) {
        errors[m].l1 += l1[m * chunks + c];
        errors[m].l2 += l2[m * chunks + c];
      }
  }
  const std::size_t kernels = focus.size() * per_focus;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (auto& e : errors) {
    e.kernels = kernels;
    e.l1_per_kernel = e.l1 / static_cast<double>(kernels);
    e.l2_per_kernel = e.l2 / static_cast<double>(kernels);
    e.l1 /= static_cast<double>(kernels * kk);
    e.l2 /= static_cast<double>(kernels * kk);
    e.seconds = seconds;
  }
  return errors;
}

SurrogateErrors evaluate_surrogate(const Surrogate& model, const LensPrescription& lens, const TestSpec& spec,
                                   const Executor& executor) {
  return evaluate_surrogates({&model}, lens, spec, executor).front();
}

}  // namespace aberray
