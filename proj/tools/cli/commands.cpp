#include "cli/commands.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "aberray/dff.hpp"
#include "aberray/error.hpp"
#include "aberray/focus.hpp"
#include "aberray/grid_model.hpp"
#include "aberray/image_io.hpp"
#include "aberray/lens_io.hpp"
#include "aberray/mlp.hpp"
#include "aberray/provider.hpp"
#include "aberray/psf_io.hpp"
#include "aberray/render.hpp"
#include "aberray/rng.hpp"
#include "aberray/scene.hpp"
#include "aberray/surrogate_eval.hpp"
#include "aberray/train.hpp"
#include "cli/manifest.hpp"
#include "cli/support.hpp"

namespace fs = std::filesystem;

namespace aberray::cli {

fs::path load_lens_path(const Common& c) {
  if (c.lens.empty()) throw UsageError("--lens is required");
  const fs::path path = c.lens;
  if (!fs::exists(path)) {
    const fs::path bundled = fs::path(ABERRAY_DATA_DIR) / "lenses" / path;
    if (fs::exists(bundled)) return bundled;
  }
  return path;
}

LensPrescription load_lens(const Common& c) { return load_prescription(load_lens_path(c)); }

fs::path output_dir(const Common& c) {
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  return dir;
}

DepthNorm parse_depth_norm(const std::string& s) {
  if (s == "linear") return DepthNorm::kLinear;
  if (s == "inverse") return DepthNorm::kInverse;
  throw UsageError("unknown depth normalisation '" + s + "' (linear|inverse)");
}

const char* to_string(DepthNorm n) { return n == DepthNorm::kInverse ? "inverse" : "linear"; }

RunManifest start_manifest(const Common& c, const std::string& subcommand, nlohmann::json config) {
  RunManifest m;
  m.subcommand = subcommand;
  m.seed = c.seed;
  m.tool_version = tool_version();
  config["lens"] = c.lens;
  config["seed"] = c.seed;
  config["threads"] = c.threads;
  config["out"] = c.out;
  config["command_line"] = c.argv;
  m.config = std::move(config);
  return m;
}

void write_csv_spot(const fs::path& path, const SpotDiagram& spot) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "x_mm,y_mm\n" << std::setprecision(17);
  for (const SpotHit& h : spot.hits) out << h.x << ',' << h.y << '\n';
}

void write_csv_kernel(const fs::path& path, const PsfGrid& psf) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(9);
  for (int r = 0; r < psf.k; ++r) {
    for (int col = 0; col < psf.k; ++col) out << (col ? "," : "") << psf.at(r, col);
    out << '\n';
  }
}

std::string file_magic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  return std::string(magic, static_cast<std::size_t>(in.gcount()));
}

namespace {

Vec3 to_vec(const std::array<double, 3>& p) { return {p[0], p[1], p[2]}; }

}  // namespace

void run_trace(const Common& c, const TraceOptions& o) {
  const LensPrescription lens = load_lens(c);
  const fs::path dir = output_dir(c);
  const Tracer tracer = focused_tracer(lens, o.focus_m);
  const SpotDiagram spot = tracer.trace_point(to_vec(o.point_m), o.spp, derive_seed(c.seed, "pupil"));
  const fs::path csv = dir / "spot.csv";
  write_csv_spot(csv, spot);
  std::printf("hits %zu of %zu, rms radius %.6f mm, sensor at %.6f mm\n", spot.hits.size(), spot.emitted_count,
              spot.hits.empty() ? 0.0 : spot.rms_radius(), tracer.lens().sensor_distance_mm);

  RunManifest m = start_manifest(c, "trace",
                                 {{"focus_m", o.focus_m}, {"point_m", o.point_m}, {"spp", o.spp}});
  m.add_input(load_lens_path(c));
  m.add_output(csv);
  write_manifest(dir / "trace.manifest.json", m);
}

void run_psf(const Common& c, const PsfOptions& o) {
  const LensPrescription lens = load_lens(c);
  const fs::path dir = output_dir(c);
  const Frustum frustum = Frustum::for_lens(lens);
  const ObjectQuery q = normalize_query(o.point_m[0], o.point_m[1], o.point_m[2], o.focus_m, frustum);
  const Tracer tracer = focused_tracer(lens, o.focus_m);
  const std::uint64_t seed = derive_seed(c.seed, "pupil");
  const PsfGrid psf = raytraced_psf(tracer, q, o.spp, seed, o.pitch_mm, o.k);
  const SpotDiagram spot = tracer.trace_point(q.source_m(), o.spp, seed);

  PsfDataset data;
  data.k = o.k;
  data.add(psf, q);
  const fs::path grid_path = dir / "psf.psfg";
  const fs::path kernel_csv = dir / "psf.csv";
  const fs::path spot_csv = dir / "psf_spot.csv";
  write_psf_dataset(grid_path, data);
  write_csv_kernel(kernel_csv, psf);
  write_csv_spot(spot_csv, spot);
  std::printf("%s: second moment %.4f px^2, %zu hits\n", describe(q).c_str(), psf.second_moment(), spot.hits.size());

  RunManifest m = start_manifest(c, "psf",
                                 {{"focus_m", o.focus_m}, {"point_m", o.point_m}, {"spp", o.spp}, {"k", o.k},
                                  {"pixel_pitch_mm", o.pitch_mm}});
  m.add_input(load_lens_path(c));
  for (const auto& p : {grid_path, kernel_csv, spot_csv}) m.add_output(p);
  write_manifest(dir / "psf.manifest.json", m);
}

namespace {

// fit-surrogate accepts --out as either a directory or the model file itself.
fs::path model_output(const Common& c, const char* default_name) {
  const fs::path out = c.out;
  const std::string ext = out.extension().string();
  if (ext == ".mlpw" || ext == ".psfg") {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    return out;
  }
  return output_dir(c) / default_name;
}

}  // namespace

void run_fit_surrogate(const Common& c, const FitOptions& o) {
  const LensPrescription lens = load_lens(c);
  const Executor exec(c.threads);
  const DepthNorm norm = parse_depth_norm(o.depth_norm);
  nlohmann::json config = {{"kind", o.kind}, {"spp", o.spp}, {"k", o.k}, {"pixel_pitch_mm", o.pitch_mm},
                           {"depth_norm", o.depth_norm}};
  std::vector<fs::path> outputs;
  fs::path model_path;

  if (o.kind == "mlp") {
    TrainConfig cfg;
    cfg.iterations = o.iterations;
    cfg.batch_points = o.batch;
    cfg.learning_rate = o.learning_rate;
    cfg.seed = c.seed;
    cfg.spp_groundtruth = o.spp;
    cfg.pixel_pitch_mm = o.pitch_mm;
    cfg.k = o.k;
    cfg.depth_norm = norm;
    cfg.validate();
    model_path = model_output(c, "model.mlpw");
    const std::uint64_t report = std::max<std::uint64_t>(1, o.iterations / 20);
    const TrainResult r = train_mlp(lens, cfg, exec, [&](std::uint64_t it, double loss) {
      if (it % report == 0 || it + 1 == o.iterations) spdlog::info("iteration {} loss {:.6g}", it, loss);
    });
    save_mlp(model_path, r.model);
    fs::path loss_csv = model_path;
    loss_csv += ".loss.csv";
    std::ofstream out(loss_csv);
    out << "iteration,loss\n" << std::setprecision(9);
    for (std::size_t i = 0; i < r.loss_history.size(); ++i) out << i << ',' << r.loss_history[i] << '\n';
    out.close();
    outputs = {model_path, loss_csv};
    const double last = r.loss_history.empty() ? 0.0 : r.loss_history.back();
    std::printf("trained %llu iterations in %.1f s, final batch loss %.6g\n",
                static_cast<unsigned long long>(o.iterations), r.seconds, last);
    config.update({{"iterations", o.iterations}, {"batch_points", o.batch}, {"learning_rate", o.learning_rate},
                   {"train_config", cfg.echo()}});
  } else if (o.kind == "grid") {
    const Frustum frustum = Frustum::for_lens(lens, norm);
    TestSpec lattice;
    lattice.focus_count = o.grid_focus_count;
    const std::vector<double> focus = lattice.focus_distances_m(frustum);
    const GridModel grid = build_grid_model(lens, focus, GridLayout{o.grid_depths, o.grid_nx, o.grid_ny}, o.spp,
                                            c.seed, o.pitch_mm, o.k, norm, exec);
    model_path = model_output(c, "grid.psfg");
    save_grid_model(model_path, grid);
    outputs = {model_path};
    std::printf("grid model: %zu focus x %d depths x %d x %d positions\n", focus.size(), o.grid_depths, o.grid_ny,
                o.grid_nx);
    config.update({{"grid_depths", o.grid_depths}, {"grid_nx", o.grid_nx}, {"grid_ny", o.grid_ny},
                   {"grid_focus_count", o.grid_focus_count}});
  } else {
    throw UsageError("unknown surrogate kind '" + o.kind + "' (mlp|grid)");
  }

  RunManifest m = start_manifest(c, "fit-surrogate", config);
  m.add_input(load_lens_path(c));
  for (const auto& p : outputs) m.add_output(p);
  fs::path manifest_path = model_path;
  manifest_path += ".manifest.json";
  write_manifest(manifest_path, m);
}

std::unique_ptr<Surrogate> load_surrogate(const fs::path& path, const LensPrescription& lens, double pitch_mm,
                                          DepthNorm norm, std::vector<std::unique_ptr<GridModel>>& grids) {
  const std::string magic = file_magic(path);
  if (magic == "MLPW") return mlp_surrogate(load_mlp(path));
  if (magic == "PSFG") {
    grids.push_back(std::make_unique<GridModel>(load_grid_model(path, lens, pitch_mm, norm)));
    return grid_surrogate(*grids.back());
  }
  throw Error(path.string() + " is neither an MLPW nor a PSFG file");
}

void run_eval_surrogate(const Common& c, const EvalSurrogateOptions& o) {
  const LensPrescription lens = load_lens(c);
  const fs::path dir = output_dir(c);
  if (o.models.empty()) throw UsageError("--model is required");
  TestSpec spec;
  spec.focus_count = o.focus_count;
  spec.depth_count = o.depth_count;
  spec.nx = o.nx;
  spec.ny = o.ny;
  spec.spp = o.spp;
  spec.seed = c.seed;
  spec.pixel_pitch_mm = o.pitch_mm;
  spec.depth_norm = parse_depth_norm(o.depth_norm);

  std::vector<std::unique_ptr<GridModel>> grids;
  std::vector<std::unique_ptr<Surrogate>> owned;
  std::vector<const Surrogate*> models;
  for (const auto& path : o.models) {
    owned.push_back(load_surrogate(path, lens, o.pitch_mm, spec.depth_norm, grids));
    models.push_back(owned.back().get());
  }
  const std::vector<SurrogateErrors> errs = evaluate_surrogates(models, lens, spec, Executor(c.threads));

  const fs::path csv = dir / "eval_surrogate.csv";
  std::ofstream out(csv);
  out << "method,model,l1,l2,l1_per_kernel,l2_per_kernel,kernels,seconds\n" << std::setprecision(9);
  std::printf("%-16s %12s %12s\n", "method", "l1", "l2");
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& e = errs[i];
    std::printf("%-16s %12.4e %12.4e\n", models[i]->name().c_str(), e.l1, e.l2);
    out << models[i]->name() << ',' << o.models[i] << ',' << e.l1 << ',' << e.l2 << ',' << e.l1_per_kernel << ','
        << e.l2_per_kernel << ',' << e.kernels << ',' << e.seconds << '\n';
  }
  out.close();

  RunManifest m = start_manifest(c, "eval-surrogate",
                                 {{"models", o.models}, {"spp", o.spp}, {"focus_count", o.focus_count},
                                  {"depth_count", o.depth_count}, {"nx", o.nx}, {"ny", o.ny},
                                  {"pixel_pitch_mm", o.pitch_mm}, {"depth_norm", o.depth_norm}});
  m.add_input(load_lens_path(c));
  for (const auto& p : o.models) m.add_input(p);
  m.add_output(csv);
  write_manifest(dir / "eval-surrogate.manifest.json", m);
}

std::unique_ptr<PsfProvider> make_provider(const std::string& kind, const LensPrescription& lens, double pitch_mm,
                                           int k, std::size_t spp, std::uint64_t seed, const std::string& model) {
  if (kind == "gaussian") return make_gaussian_provider(lens, pitch_mm, k);
  if (kind == "raytraced") return make_raytraced_provider(lens, pitch_mm, spp, derive_seed(seed, "render_psf"), k);
  if (kind == "mlp" || kind == "grid") {
    if (model.empty()) throw UsageError("--model is required for the " + kind + " provider");
    if (kind == "mlp") {
      MlpModel net = load_mlp(model);
      if (std::abs(net.pixel_pitch_mm - pitch_mm) > 1e-9)
        spdlog::warn("network was trained at {} mm pitch, rendering at {} mm", net.pixel_pitch_mm, pitch_mm);
      return make_mlp_provider(lens, std::move(net));
    }
    return make_grid_provider(load_grid_model(model, lens, pitch_mm));
  }
  throw UsageError("unknown provider '" + kind + "' (mlp|grid|gaussian|raytraced)");
}

void run_render_stack(const Common& c, const RenderOptions& o) {
  const LensPrescription lens = load_lens(c);
  const fs::path dir = output_dir(c);
  RgbdImage scene;
  if (o.synthetic) {
    SceneOptions so;
    so.width = o.width;
    so.height = o.height;
    scene = textured_tile_scene(so, derive_seed(c.seed, "scene"));
  } else {
    if (o.rgb.empty() || o.depth.empty()) throw UsageError("render-stack needs --rgb and --depth, or --synthetic");
    scene = make_rgbd(read_png_rgb(o.rgb), read_depth(o.depth, o.depth_scale));
  }
  if (!scene.rgb.same_shape(Image(scene.depth.width(), scene.depth.height(), 3)))
    throw ValidationError("RGB and depth images differ in size");
  const double pitch = o.pitch_mm > 0.0 ? o.pitch_mm : lens.sensor_width_mm / scene.rgb.width();
  const auto provider = make_provider(o.provider, lens, pitch, o.k, o.spp, c.seed, o.model);
  const FocalStack stack = simulate_stack(lens, scene, o.stack_size, o.perturb, c.seed, *provider, Executor(c.threads));

  std::vector<fs::path> outputs;
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t s = 0; s < stack.frames.size(); ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%02zu.png", s);
    write_png_rgb(dir / name, stack.frames[s], !o.png8);
    outputs.push_back(dir / name);
    frames.push_back({{"file", name}, {"focus_distance_m", stack.focus_distances_m[s]}});
  }
  write_pfm(dir / "depth_gt.pfm", scene.depth);
  write_png_rgb(dir / "aif_gt.png", scene.rgb, !o.png8);
  outputs.push_back(dir / "depth_gt.pfm");
  outputs.push_back(dir / "aif_gt.png");

  nlohmann::json stack_doc = {{"lens", lens.name},
                              {"psf_source", to_string(stack.psf_source)},
                              {"pixel_pitch_mm", pitch},
                              {"frames", frames},
                              {"focus_distances_m", stack.focus_distances_m},
                              {"depth_gt", "depth_gt.pfm"},
                              {"clamped_depth_pixels", scene.clamped_count}};
  write_text_atomic(dir / "stack.json", stack_doc.dump(2) + "\n");
  outputs.push_back(dir / "stack.json");
  std::printf("rendered %zu frames with the %s provider at %.4f mm pitch\n", stack.frames.size(),
              to_string(stack.psf_source), pitch);

  RunManifest m = start_manifest(c, "render-stack",
                                 {{"rgb", o.rgb}, {"depth", o.depth}, {"depth_scale", o.depth_scale},
                                  {"synthetic", o.synthetic}, {"width", o.width}, {"height", o.height},
                                  {"provider", o.provider}, {"model", o.model}, {"spp", o.spp},
                                  {"stack_size", o.stack_size}, {"perturb", o.perturb}, {"pixel_pitch_mm", pitch},
                                  {"k", o.k}, {"png8", o.png8}});
  m.add_input(load_lens_path(c));
  for (const auto& p : {o.rgb, o.depth, o.model})
    if (!p.empty()) m.add_input(p);
  for (const auto& p : outputs) m.add_output(p);
  write_manifest(dir / "render-stack.manifest.json", m);
}

FocalStack read_stack(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stack manifest " + path.string());
  const nlohmann::json doc = nlohmann::json::parse(in);
  FocalStack stack;
  stack.lens_name = doc.value("lens", "");
  for (const auto& f : doc.at("frames")) {
    stack.frames.push_back(read_png_rgb(path.parent_path() / f.at("file").get<std::string>()));
    stack.focus_distances_m.push_back(f.at("focus_distance_m").get<double>());
  }
  if (stack.frames.empty()) throw ValidationError("stack manifest " + path.string() + " lists no frames");
  return stack;
}

void run_estimate_depth(const Common& c, const EstimateOptions& o) {
  if (o.stack.empty()) throw UsageError("--stack is required");
  const fs::path dir = output_dir(c);
  FocusMeasure measure;
  if (o.measure == "sml") measure = FocusMeasure::kModifiedLaplacian;
  else if (o.measure == "gradient") measure = FocusMeasure::kGradientMagnitude;
  else throw UsageError("unknown focus measure '" + o.measure + "' (sml|gradient)");

  const FocalStack stack = read_stack(o.stack);
  const DepthEstimate est = estimate_depth(stack, o.temperature, measure, o.window);
  const fs::path depth_path = dir / "depth.pfm";
  const fs::path aif_path = dir / "aif.png";
  write_pfm(depth_path, est.depth);
  write_png_rgb(aif_path, synthesize_aif(stack, est.probability), true);
  std::printf("depth in [%.4f, %.4f] m from %zu frames (%s, window %d)\n", est.depth.min(), est.depth.max(),
              stack.frames.size(), to_string(measure), o.window);

  RunManifest m = start_manifest(c, "estimate-depth",
                                 {{"stack", o.stack}, {"temperature", o.temperature}, {"measure", to_string(measure)},
                                  {"window", o.window}});
  m.add_input(o.stack);
  m.add_output(depth_path);
  m.add_output(aif_path);
  write_manifest(dir / "estimate-depth.manifest.json", m);
}

namespace {

std::vector<unsigned char> depth_mask(const Image& gt, double lo, double hi) {
  std::vector<unsigned char> mask(gt.pixel_count());
  for (std::size_t p = 0; p < mask.size(); ++p) {
    const double v = gt.values()[p];
    mask[p] = std::isfinite(v) && v >= lo && v <= hi;
  }
  return mask;
}

Image normalized_depth(const Image& d, double lo, double hi) {
  Image out = d;
  for (double& v : out.values()) v = (v - lo) / (hi - lo);
  return out;
}

void print_metrics_row(const char* units, const DepthMetrics& m) {
  std::printf("%-10s %10.4f %10.4f %10.4f %10.4f %10.4f %8.4f %8.4f %8.4f\n", units, m.mae, m.mse, m.rmse, m.abs_rel,
              m.sqr_rel, m.delta1, m.delta2, m.delta3);
}

}  // namespace

void run_eval(const Common& c, const EvalOptions& o) {
  if (o.pred.empty() || o.gt.empty()) throw UsageError("--pred and --gt are required");
  const fs::path dir = output_dir(c);
  const Image pred = read_depth(o.pred, o.depth_scale);
  const Image gt = read_depth(o.gt, o.depth_scale);
  if (!pred.same_shape(gt)) throw ValidationError("prediction and ground truth differ in size");
  std::vector<unsigned char> mask = depth_mask(gt, o.min_depth_m, o.max_depth_m);
  const DepthMetrics metres = compute_metrics(pred, gt, mask);
  // The normalised convention maps [min, max] onto [0, 1]; relative errors
  // are undefined at 0, so those pixels drop out of that row.
  const Image pred_n = normalized_depth(pred, o.min_depth_m, o.max_depth_m);
  const Image gt_n = normalized_depth(gt, o.min_depth_m, o.max_depth_m);
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (!(gt_n.values()[p] > 0.0)) mask[p] = 0;
  const DepthMetrics unit = compute_metrics(pred_n, gt_n, mask);

  std::printf("%-10s %10s %10s %10s %10s %10s %8s %8s %8s\n", "units", "MAE", "MSE", "RMSE", "AbsRel", "SqRel", "d1",
              "d2", "d3");
  print_metrics_row("metres", metres);
  print_metrics_row("normalised", unit);

  const fs::path csv = dir / "eval.csv";
  std::ofstream out(csv);
  out << "units,mae,mse,rmse,abs_rel,sqr_rel,delta1,delta2,delta3,pixels\n" << std::setprecision(9);
  for (const auto& [name, m] : {std::pair{"metres", metres}, std::pair{"normalised", unit}})
    out << name << ',' << m.mae << ',' << m.mse << ',' << m.rmse << ',' << m.abs_rel << ',' << m.sqr_rel << ','
        << m.delta1 << ',' << m.delta2 << ',' << m.delta3 << ',' << m.count << '\n';
  out.close();

  RunManifest m = start_manifest(c, "eval",
                                 {{"pred", o.pred}, {"gt", o.gt}, {"depth_scale", o.depth_scale},
                                  {"min_depth_m", o.min_depth_m}, {"max_depth_m", o.max_depth_m}});
  m.add_input(o.pred);
  m.add_input(o.gt);
  m.add_output(csv);
  write_manifest(dir / "eval.manifest.json", m);
}

void run_error_map(const Common& c, const ErrorMapOptions& o) {
  if (o.preds.empty() || o.preds.size() != o.gts.size())
    throw UsageError("error-map needs matching numbers of --pred and --gt files");
  const fs::path dir = output_dir(c);
  std::vector<Image> errors;
  for (std::size_t i = 0; i < o.preds.size(); ++i) {
    const Image pred = read_depth(o.preds[i], o.depth_scale);
    const Image gt = read_depth(o.gts[i], o.depth_scale);
    if (!pred.same_shape(gt)) throw ValidationError(o.preds[i] + " and " + o.gts[i] + " differ in size");
    Image err(gt.width(), gt.height(), 1);
    for (std::size_t p = 0; p < err.pixel_count(); ++p) {
      const double d = std::abs(pred.values()[p] - gt.values()[p]);
      err.values()[p] = std::isfinite(d) ? d : 0.0;
    }
    errors.push_back(std::move(err));
  }
  const Image map = radial_error_map(errors);
  const fs::path pfm = dir / "error_map.pfm";
  const fs::path png = dir / "error_map.png";
  write_pfm(pfm, map);
  write_colormap_png(png, map, 0.0, o.max_error_m > 0.0 ? o.max_error_m : std::max(map.max(), 1e-12));
  std::printf("center %.6f m, outer annulus %.6f m, ratio %.4f over %zu maps\n", radial_mean(map, 0.0, 0.1),
              radial_mean(map, 0.9, 1.0), annulus_center_ratio(map), errors.size());

  RunManifest m = start_manifest(c, "error-map",
                                 {{"pred", o.preds}, {"gt", o.gts}, {"depth_scale", o.depth_scale},
                                  {"max_error_m", o.max_error_m}});
  for (const auto& p : o.preds) m.add_input(p);
  for (const auto& p : o.gts) m.add_input(p);
  m.add_output(pfm);
  m.add_output(png);
  write_manifest(dir / "error-map.manifest.json", m);
}

}  // namespace aberray::cli
