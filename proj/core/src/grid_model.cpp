#include "aberray/grid_model.hpp"

#include <algorithm>
#include <cmath>

#include "aberray/error.hpp"
#include "aberray/focus.hpp"
#include "aberray/psf_io.hpp"
#include "aberray/rng.hpp"

namespace aberray {
namespace {

std::vector<double> even(int n, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  v.back() = hi;
  return v;
}

// Lower lattice index and fractional offset of `value`, with a little slack
// at the hull boundary for rounding.
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double value, const char* name) {
  constexpr double kSlack = 1e-12;
  if (!(value >= axis.front() - kSlack && value <= axis.back() + kSlack))
    throw ValidationError(std::string("grid query outside the lattice hull in ") + name);
  value = std::clamp(value, axis.front(), axis.back());
  auto it = std::upper_bound(axis.begin(), axis.end(), value);
  std::size_t i = static_cast<std::size_t>(it - axis.begin());
  i = std::clamp<std::size_t>(i, 1, axis.size() - 1) - 1;
  const double t = (value - axis[i]) / (axis[i + 1] - axis[i]);
  return {i, t};
}

}  // namespace

PsfGrid GridModel::stored(std::size_t f, std::size_t z, std::size_t y, std::size_t x) const {
  PsfGrid psf(k, pixel_pitch_mm, Provenance::kSurrogateGrid);
  const auto kk = static_cast<std::size_t>(k * k);
  const auto first = kernels.begin() + static_cast<std::ptrdiff_t>(index(f, z, y, x) * kk);
  std::copy(first, first + static_cast<std::ptrdiff_t>(kk), psf.kernel.begin());
  return psf;
}

std::size_t GridModel::nearest_focus(double f) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < focus_m.size(); ++i)
    if (std::abs(focus_m[i] - f) < std::abs(focus_m[best] - f)) best = i;
  return best;
}

GridModel build_grid_model(const LensPrescription& lens, const std::vector<double>& focus_samples_m,
                           const GridLayout& layout, std::size_t spp, std::uint64_t seed,
                           double pixel_pitch_mm, int k, DepthNorm depth_norm,
                           const Executor& executor) {
  if (layout.depths < 2 || layout.nx < 2 || layout.ny < 2)
    throw ValidationError("grid model needs at least two samples per axis");
  if (focus_samples_m.empty()) throw ValidationError("grid model needs at least one focus distance");
  GridModel model;
  model.focus_m = focus_samples_m;
  std::sort(model.focus_m.begin(), model.focus_m.end());
  model.z_norm = even(layout.depths, 0.0, 1.0);
  model.x_norm = even(layout.nx, -1.0, 1.0);
  model.y_norm = even(layout.ny, -1.0, 1.0);
  model.k = k;
  model.pixel_pitch_mm = pixel_pitch_mm;
  model.frustum = Frustum::for_lens(lens, depth_norm);

  const std::size_t per_focus = model.z_norm.size() * model.y_norm.size() * model.x_norm.size();
  const auto kk = static_cast<std::size_t>(k * k);
  model.kernels.assign(model.focus_m.size() * per_focus * kk, 0.0);
  for (std::size_t f = 0; f < model.focus_m.size(); ++f) {
    const Tracer tracer = focused_tracer(lens, model.focus_m[f]);
    executor.parallel_for(per_focus, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        const std::size_t x = p % model.x_norm.size();
        const std::size_t y = (p / model.x_norm.size()) % model.y_norm.size();
        const std::size_t z = p / (model.x_norm.size() * model.y_norm.size());
        const ObjectQuery q =
            query_from_normalized(model.x_norm[x], model.y_norm[y],
                                  model.frustum.denormalize_depth(model.z_norm[z]), model.focus_m[f],
                                  model.frustum);
        const std::size_t flat = model.index(f, z, y, x);
        const PsfGrid psf =
            raytraced_psf(tracer, q, spp, derive_seed(seed, "grid", flat), pixel_pitch_mm, k);
        std::copy(psf.kernel.begin(), psf.kernel.end(),
                  model.kernels.begin() + static_cast<std::ptrdiff_t>(flat * kk));
      }
    });
  }
  return model;
}

void save_grid_model(const std::filesystem::path& path, const GridModel& model) {
  PsfDataset data;
  data.k = model.k;
  const auto kk = static_cast<std::size_t>(model.k * model.k);
  for (std::size_t f = 0; f < model.focus_m.size(); ++f)
    for (std::size_t z = 0; z < model.z_norm.size(); ++z)
      for (std::size_t y = 0; y < model.y_norm.size(); ++y)
        for (std::size_t x = 0; x < model.x_norm.size(); ++x) {
          const double* src = model.kernels.data() + model.index(f, z, y, x) * kk;
          data.kernels.emplace_back(src, src + kk);
          data.queries.push_back({static_cast<float>(model.x_norm[x]), static_cast<float>(model.y_norm[y]),
                                  static_cast<float>(model.z_norm[z]),
                                  static_cast<float>(model.frustum.normalize_depth(model.focus_m[f]))});
        }
  write_psf_dataset(path, data);
}

GridModel load_grid_model(const std::filesystem::path& path, const LensPrescription& lens, double pixel_pitch_mm,
                          DepthNorm depth_norm) {
  const PsfDataset data = read_psf_dataset(path);
  std::vector<float> xs, ys, zs, fs;
  for (const auto& q : data.queries) {
    xs.push_back(q[0]);
    ys.push_back(q[1]);
    zs.push_back(q[2]);
    fs.push_back(q[3]);
  }
  auto distinct = [](std::vector<float>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v.size();
  };
  const std::size_t nx = distinct(xs), ny = distinct(ys), nz = distinct(zs), nf = distinct(fs);
  if (nx < 2 || ny < 2 || nz < 2 || nf < 1 || nx * ny * nz * nf != data.size())
    throw ValidationError("grid file " + path.string() + " does not hold a complete lattice");

  GridModel model;
  model.k = data.k;
  model.pixel_pitch_mm = pixel_pitch_mm;
  model.frustum = Frustum::for_lens(lens, depth_norm);
  model.z_norm = even(static_cast<int>(nz), 0.0, 1.0);
  model.x_norm = even(static_cast<int>(nx), -1.0, 1.0);
  model.y_norm = even(static_cast<int>(ny), -1.0, 1.0);
  for (float f : fs) model.focus_m.push_back(model.frustum.denormalize_depth(f));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& q = data.queries[i];
    const std::size_t x = i % nx, y = (i / nx) % ny, z = (i / (nx * ny)) % nz, f = i / (nx * ny * nz);
    if (q[0] != xs[x] || q[1] != ys[y] || q[2] != zs[z] || q[3] != fs[f])
      throw ValidationError("grid file " + path.string() + " is not in lattice order at record " + std::to_string(i));
  }
  const auto kk = static_cast<std::size_t>(model.k * model.k);
  model.kernels.reserve(data.size() * kk);
  for (const auto& kernel : data.kernels) model.kernels.insert(model.kernels.end(), kernel.begin(), kernel.end());
  return model;
}

double TrilinearStencil::weight(int corner) const {
  const double wz = (corner & 4) ? t[0] : 1.0 - t[0];
  const double wy = (corner & 2) ? t[1] : 1.0 - t[1];
  const double wx = (corner & 1) ? t[2] : 1.0 - t[2];
  return wz * wy * wx;
}

TrilinearStencil grid_stencil(const GridModel& model, const ObjectQuery& query) {
  TrilinearStencil s;
  s.focus = model.nearest_focus(query.focus_m);
  const auto [z, tz] = locate(model.z_norm, query.z_norm, "depth");
  const auto [y, ty] = locate(model.y_norm, query.y_norm, "y");
  const auto [x, tx] = locate(model.x_norm, query.x_norm, "x");
  s.lower = {z, y, x};
  s.t = {tz, ty, tx};
  return s;
}

PsfGrid grid_query(const GridModel& model, const ObjectQuery& query) {
  const TrilinearStencil s = grid_stencil(model, query);
  PsfGrid psf(model.k, model.pixel_pitch_mm, Provenance::kSurrogateGrid);
  const auto kk = static_cast<std::size_t>(model.k * model.k);
  for (int corner = 0; corner < 8; ++corner) {
    const double w = s.weight(corner);
    if (w == 0.0) continue;
    const std::size_t flat = model.index(s.focus, s.lower[0] + ((corner >> 2) & 1),
                                         s.lower[1] + ((corner >> 1) & 1), s.lower[2] + (corner & 1));
    const double* src = model.kernels.data() + flat * kk;
    for (std::size_t e = 0; e < kk; ++e) psf.kernel[e] += w * src[e];
  }
  // A convex blend of unit-sum kernels; only rescale if rounding drifted.
  if (std::abs(psf.sum() - 1.0) > 1e-12) psf.normalize();
  return psf;
}

}  // namespace aberray
