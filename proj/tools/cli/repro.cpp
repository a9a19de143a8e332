#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>

#include "aberray/focus.hpp"
#include "aberray/image_io.hpp"
#include "aberray/mlp.hpp"
#include "aberray/paraxial.hpp"
#include "aberray/psf_io.hpp"
#include "aberray/rng.hpp"
#include "aberray/study.hpp"
#include "aberray/train.hpp"
#include "cli/commands.hpp"
#include "cli/support.hpp"

namespace fs = std::filesystem;

namespace aberray::cli {
namespace {

constexpr double kFocusM = 1.5;
constexpr double kDepthsM[] = {1.2, 1.5, 2.0};
constexpr double kAnglesDeg[] = {0.0, 11.75, 23.5};

// The network used by fig3 and table1: loaded if given, otherwise a short
// training run so the reproductions stay self-contained.
struct NetworkCache {
  std::optional<MlpModel> net;
};

const MlpModel& obtain_network(const Common& c, const ReproOptions& o, const LensPrescription& lens, RunManifest& m,
                               NetworkCache& cache) {
  if (cache.net) return *cache.net;
  if (!o.model.empty()) {
    m.add_input(o.model);
    cache.net = load_mlp(o.model);
  } else {
    spdlog::warn("no --model given; training a {}-iteration network", o.iterations);
    TrainConfig cfg;
    cfg.iterations = o.iterations;
    cfg.seed = c.seed;
    cache.net = train_mlp(lens, cfg, Executor(c.threads)).model;
  }
  return *cache.net;
}

double l1_distance(const PsfGrid& a, const PsfGrid& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.kernel.size(); ++i) s += std::abs(a.kernel[i] - b.kernel[i]);
  return s / static_cast<double>(a.kernel.size());
}

void repro_fig3(const Common& c, const ReproOptions& o, const LensPrescription& lens, RunManifest& m,
                NetworkCache& cache) {
  const fs::path dir = output_dir(c);
  const double pitch = 0.05;
  const Frustum frustum = Frustum::for_lens(lens);
  const ParaxialSummary para = paraxial_analyze(lens, lens.design_wavelength_nm);
  const Tracer tracer = focused_tracer(lens, kFocusM);
  const MlpModel& net = obtain_network(c, o, lens, m, cache);
  const GridModel grid = build_grid_model(lens, {kFocusM}, GridLayout{}, 1024, c.seed, pitch, kDefaultPsfSize,
                                          DepthNorm::kLinear, Executor(c.threads));

  PsfDataset data;
  const fs::path csv = dir / "fig3.csv";
  std::ofstream out(csv);
  out << "method,angle_deg,depth_m,x_norm,clamped,second_moment_px2,rms_spot_mm,l1_vs_raytraced\n"
      << std::setprecision(9);
  std::printf("%-15s %7s %6s %12s %12s\n", "method", "angle", "depth", "moment_px2", "l1_vs_rt");
  for (double angle : kAnglesDeg) {
    for (double z : kDepthsM) {
      // Field angles are placed along +x. Points beyond the sensor's field of
      // view are traced as-is but clamped to the frustum edge for surrogates.
      ObjectQuery q;
      q.x_m = z * std::tan(angle * std::numbers::pi / 180.0);
      q.z_m = z;
      q.focus_m = kFocusM;
      q.x_norm = q.x_m / (z * frustum.tan_half_x);
      q.z_norm = frustum.normalize_depth(z);
      q.focus_norm = frustum.normalize_depth(kFocusM);
      const bool clamped = q.x_norm > 1.0;
      ObjectQuery qs = q;
      if (clamped) {
        qs.x_norm = 1.0;
        qs.x_m = z * frustum.tan_half_x;
      }
      const std::uint64_t seed = derive_seed(c.seed, "fig3", static_cast<std::uint64_t>(data.size()));
      const SpotDiagram spot = tracer.trace_point(q.source_m(), o.spp, seed);
      const PsfGrid truth = raytraced_psf(tracer, q, o.spp, seed, pitch);
      PsfGrid mlp = mlp_forward(net, qs);
      mlp.normalize();
      const PsfGrid rows[] = {truth,
                              gaussian_coc_psf(para.effective_focal_length_mm, para.working_f_number, z, kFocusM,
                                               pitch),
                              mlp, grid_query(grid, qs)};
      const char* names[] = {"raytraced", "gaussian", "surrogate_mlp", "surrogate_grid"};
      for (int i = 0; i < 4; ++i) {
        const bool surrogate = i >= 2;
        data.add(rows[i], surrogate ? qs : q);
        const double l1 = l1_distance(rows[i], truth);
        out << names[i] << ',' << angle << ',' << z << ',' << (surrogate ? qs.x_norm : q.x_norm) << ','
            << (surrogate && clamped) << ',' << rows[i].second_moment() << ','
            << (i == 0 ? spot.rms_radius() : 0.0) << ',' << l1 << '\n';
        std::printf("%-15s %7.2f %6.2f %12.4f %12.4e\n", names[i], angle, z, rows[i].second_moment(), l1);
      }
    }
  }
  out.close();
  write_psf_dataset(dir / "fig3.psfg", data);
  m.add_output(csv);
  m.add_output(dir / "fig3.psfg");
}

void repro_table1(const Common& c, const ReproOptions& o, const LensPrescription& lens, RunManifest& m,
                  NetworkCache& cache) {
  const fs::path dir = output_dir(c);
  TestSpec spec;
  spec.seed = c.seed;
  spec.spp = o.spp;
  if (o.quick) {
    spec.focus_count = 4;
    spec.depth_count = 8;
    spec.nx = 5;
    spec.ny = 4;
  }
  const Executor exec(c.threads);
  const MlpModel& net = obtain_network(c, o, lens, m, cache);
  const Frustum frustum = Frustum::for_lens(lens, spec.depth_norm);
  const GridModel grid = build_grid_model(lens, spec.focus_distances_m(frustum), GridLayout{}, 1024, c.seed,
                                          spec.pixel_pitch_mm, spec.k, spec.depth_norm, exec);
  const auto mlp = mlp_surrogate(net);
  const auto grd = grid_surrogate(grid);
  const auto errs = evaluate_surrogates({mlp.get(), grd.get()}, lens, spec, exec);

  const fs::path csv = dir / "table1.csv";
  std::ofstream out(csv);
  out << "method,l1,l2,l1_per_kernel,l2_per_kernel,kernels\n" << std::setprecision(9);
  std::printf("%-16s %12s %12s\n", "method", "l1", "l2");
  const char* names[] = {"surrogate_mlp", "surrogate_grid"};
  for (int i = 0; i < 2; ++i) {
    const auto& e = errs[static_cast<std::size_t>(i)];
    std::printf("%-16s %12.4e %12.4e\n", names[i], e.l1, e.l2);
    out << names[i] << ',' << e.l1 << ',' << e.l2 << ',' << e.l1_per_kernel << ',' << e.l2_per_kernel << ','
        << e.kernels << '\n';
  }
  out.close();
  m.add_output(csv);
}

void repro_fig9(const Common& c, const ReproOptions& o, const LensPrescription& lens, RunManifest& m) {
  const fs::path dir = output_dir(c);
  DomainGapConfig cfg;
  cfg.seed = c.seed;
  cfg.scenes = o.scenes;
  if (o.quick) {
    cfg.scenes = std::min(cfg.scenes, 2);
    cfg.scene.width = 160;
    cfg.scene.height = 120;
    cfg.scene.tile_px = 6;
  }
  const double pitch = lens.sensor_width_mm / cfg.scene.width;
  const Executor exec(c.threads);
  const fs::path csv = dir / "fig9.csv";
  std::ofstream out(csv);
  out << "provider,scenes,center_error_m,annulus_error_m,ratio,mean_mae_m\n" << std::setprecision(9);
  std::printf("%-10s %12s %12s %8s\n", "provider", "center_m", "annulus_m", "ratio");
  for (const std::string kind : {"raytraced", "gaussian"}) {
    const auto provider = make_provider(kind, lens, pitch, kDefaultPsfSize, o.render_spp, c.seed, "");
    const DomainGapResult r = domain_gap_study(lens, *provider, cfg, exec);
    double mae = 0.0;
    for (const auto& mt : r.metrics) mae += mt.mae / static_cast<double>(r.metrics.size());
    std::printf("%-10s %12.5f %12.5f %8.3f\n", kind.c_str(), r.center_error_m, r.annulus_error_m,
                r.annulus_center_ratio);
    out << kind << ',' << cfg.scenes << ',' << r.center_error_m << ',' << r.annulus_error_m << ','
        << r.annulus_center_ratio << ',' << mae << '\n';
    const fs::path pfm = dir / ("fig9_error_" + kind + ".pfm");
    const fs::path png = dir / ("fig9_error_" + kind + ".png");
    write_pfm(pfm, r.mean_abs_error);
    write_colormap_png(png, r.mean_abs_error, 0.0, std::max(r.mean_abs_error.max(), 1e-12));
    m.add_output(pfm);
    m.add_output(png);
  }
  out.close();
  m.add_output(csv);
}

}  // namespace

void run_repro(const Common& common, const ReproOptions& o) {
  Common c = common;
  if (c.lens.empty()) c.lens = "lensnet_50mm_f2.8.lens";
  const LensPrescription lens = load_lens(c);
  const fs::path dir = output_dir(c);
  RunManifest m = start_manifest(c, "repro",
                                 {{"figure", o.figure}, {"model", o.model}, {"iterations", o.iterations},
                                  {"spp", o.spp}, {"render_spp", o.render_spp}, {"scenes", o.scenes},
                                  {"quick", o.quick}});
  m.add_input(load_lens_path(c));
  const bool all = o.figure == "all";
  if (!all && o.figure != "fig3" && o.figure != "table1" && o.figure != "fig9")
    throw UsageError("unknown reproduction '" + o.figure + "' (fig3|table1|fig9|all)");
  NetworkCache cache;
  if (all || o.figure == "fig3") repro_fig3(c, o, lens, m, cache);
  if (all || o.figure == "table1") repro_table1(c, o, lens, m, cache);
  if (all || o.figure == "fig9") repro_fig9(c, o, lens, m);
  write_manifest(dir / ("repro-" + o.figure + ".manifest.json"), m);
}

}  // namespace aberray::cli
