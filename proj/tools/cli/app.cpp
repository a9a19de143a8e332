#include "cli/app.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <iostream>

#include "aberray/log.hpp"
#include "cli/commands.hpp"
#include "cli/support.hpp"

namespace aberray::cli {
namespace {

void add_common(CLI::App& sub, Common& c) {
  sub.add_option("--lens", c.lens, "Lens prescription file (or a bundled lens file name)");
  sub.add_option("--seed", c.seed, "Root seed for every random stream");
  sub.add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub.add_option("--out", c.out, "Output directory");
}

// One line, tab separated, so scripts can split it.
int fail(const char* kind, const std::string& what) {
  std::string msg = what;
  for (char& ch : msg)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::fprintf(stderr, "error\t%s\t%s\n", kind, msg.c_str());
  return 1;
}

}  // namespace

int run(int argc, const char* const* argv) {
  if (!spdlog::get("aberray")) {
    auto logger = spdlog::stderr_color_mt("aberray");
    spdlog::set_default_logger(logger);
  }
  init_logging_from_env();

  CLI::App app{"Lens aberration simulation: ray-traced PSFs, PSF surrogates, focal stacks and depth from focus"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  Common common;
  for (int i = 0; i < argc; ++i) common.argv.emplace_back(argv[i]);

  TraceOptions trace;
  auto* s_trace = app.add_subcommand("trace", "Trace a point source and write its spot diagram as CSV");
  add_common(*s_trace, common);
  s_trace->add_option("--focus", trace.focus_m, "Focus distance (m)");
  s_trace->add_option("--point", trace.point_m, "Source point x,y,z (m)")->delimiter(',');
  s_trace->add_option("--spp", trace.spp, "Rays per point");

  PsfOptions psf;
  auto* s_psf = app.add_subcommand("psf", "Ray-traced PSF of one point: PSFG kernel file plus CSV spot diagram");
  add_common(*s_psf, common);
  s_psf->add_option("--focus", psf.focus_m, "Focus distance (m)");
  s_psf->add_option("--point", psf.point_m, "Source point x,y,z (m)")->delimiter(',');
  s_psf->add_option("--spp", psf.spp, "Rays per point");
  s_psf->add_option("--k", psf.k, "Kernel size (odd)");
  s_psf->add_option("--pitch", psf.pitch_mm, "Pixel pitch (mm)");

  FitOptions fit;
  auto* s_fit = app.add_subcommand("fit-surrogate", "Train the PSF network or build the PSF grid model");
  add_common(*s_fit, common);
  s_fit->add_option("--kind", fit.kind, "mlp or grid")->check(CLI::IsMember({"mlp", "grid"}));
  s_fit->add_option("--iters", fit.iterations, "Training iterations");
  s_fit->add_option("--batch", fit.batch, "Points per iteration");
  s_fit->add_option("--lr", fit.learning_rate, "Base learning rate");
  s_fit->add_option("--spp", fit.spp, "Rays per ground-truth PSF");
  s_fit->add_option("--k", fit.k, "Kernel size (odd)");
  s_fit->add_option("--pitch", fit.pitch_mm, "Pixel pitch (mm)");
  s_fit->add_option("--depth-norm", fit.depth_norm, "linear or inverse");
  s_fit->add_option("--grid-depths", fit.grid_depths, "Grid depth planes");
  s_fit->add_option("--grid-nx", fit.grid_nx, "Grid columns");
  s_fit->add_option("--grid-ny", fit.grid_ny, "Grid rows");
  s_fit->add_option("--grid-focus-count", fit.grid_focus_count, "Stored focus distances");

  EvalSurrogateOptions evs;
  auto* s_evs = app.add_subcommand("eval-surrogate", "Score surrogate models against ray-traced test PSFs");
  add_common(*s_evs, common);
  s_evs->add_option("--model", evs.models, "MLPW or PSFG model file (repeatable)")->required();
  s_evs->add_option("--spp", evs.spp, "Rays per ground-truth PSF");
  s_evs->add_option("--focus-count", evs.focus_count, "Test focus distances");
  s_evs->add_option("--depth-count", evs.depth_count, "Test depths");
  s_evs->add_option("--nx", evs.nx, "Test columns");
  s_evs->add_option("--ny", evs.ny, "Test rows");
  s_evs->add_option("--pitch", evs.pitch_mm, "Pixel pitch (mm)");
  s_evs->add_option("--depth-norm", evs.depth_norm, "linear or inverse");

  RenderOptions render;
  auto* s_render = app.add_subcommand("render-stack", "Render a focal stack from an RGBD image");
  add_common(*s_render, common);
  s_render->add_option("--rgb", render.rgb, "RGB PNG (8 or 16 bit)");
  s_render->add_option("--depth", render.depth, "Depth map: PFM, or 16-bit PNG with --depth-scale");
  s_render->add_option("--depth-scale", render.depth_scale, "Metres per unit of a PNG depth map");
  s_render->add_flag("--synthetic", render.synthetic, "Use a seeded synthetic tile scene instead of files");
  s_render->add_option("--width", render.width, "Synthetic scene width");
  s_render->add_option("--height", render.height, "Synthetic scene height");
  s_render->add_option("--provider", render.provider, "mlp, grid, gaussian or raytraced")
      ->check(CLI::IsMember({"mlp", "grid", "gaussian", "raytraced"}));
  s_render->add_option("--model", render.model, "Model file for the mlp and grid providers");
  s_render->add_option("--spp", render.spp, "Rays per pixel PSF for the raytraced provider");
  s_render->add_option("--stack-size", render.stack_size, "Frames");
  s_render->add_option("--perturb", render.perturb, "Focus jitter as a fraction of the spacing, in [0, 0.5)");
  s_render->add_option("--pitch", render.pitch_mm, "Pixel pitch (mm); default sensor width over image width");
  s_render->add_option("--k", render.k, "Kernel size (odd)");
  s_render->add_flag("--png8", render.png8, "Write 8-bit sRGB frames instead of 16-bit linear");

  EstimateOptions est;
  auto* s_est = app.add_subcommand("estimate-depth", "Classical depth from focus over a rendered stack");
  add_common(*s_est, common);
  s_est->add_option("--stack", est.stack, "stack.json written by render-stack")->required();
  s_est->add_option("--temperature", est.temperature, "Softmax temperature relative to the sharpness range; 0 = argmax");
  s_est->add_option("--measure", est.measure, "sml or gradient");
  s_est->add_option("--window", est.window, "Focus measure window");

  EvalOptions ev;
  auto* s_ev = app.add_subcommand("eval", "Depth metrics of a prediction against ground truth");
  add_common(*s_ev, common);
  s_ev->add_option("--pred", ev.pred, "Predicted depth (PFM or 16-bit PNG)")->required();
  s_ev->add_option("--gt", ev.gt, "Ground-truth depth (PFM or 16-bit PNG)")->required();
  s_ev->add_option("--depth-scale", ev.depth_scale, "Metres per unit of PNG depth maps");
  s_ev->add_option("--min-depth", ev.min_depth_m, "Valid depth lower bound (m)");
  s_ev->add_option("--max-depth", ev.max_depth_m, "Valid depth upper bound (m)");

  ErrorMapOptions em;
  auto* s_em = app.add_subcommand("error-map", "Pixelwise mean absolute depth error over several scenes");
  add_common(*s_em, common);
  s_em->add_option("--pred", em.preds, "Predicted depth (repeatable)")->required();
  s_em->add_option("--gt", em.gts, "Ground-truth depth, in the same order (repeatable)")->required();
  s_em->add_option("--depth-scale", em.depth_scale, "Metres per unit of PNG depth maps");
  s_em->add_option("--max-error", em.max_error_m, "Colormap ceiling (m); default the map maximum");

  ReproOptions repro;
  auto* s_repro = app.add_subcommand("repro", "Desk-scale reproductions: fig3, table1, fig9 or all");
  add_common(*s_repro, common);
  s_repro->add_option("figure", repro.figure, "fig3, table1, fig9 or all")
      ->required()
      ->check(CLI::IsMember({"fig3", "table1", "fig9", "all"}));
  s_repro->add_option("--model", repro.model, "Trained network (otherwise a short training run)");
  s_repro->add_option("--iters", repro.iterations, "Iterations of the fallback training run");
  s_repro->add_option("--spp", repro.spp, "Rays per PSF");
  s_repro->add_option("--render-spp", repro.render_spp, "Rays per pixel PSF when rendering");
  s_repro->add_option("--scenes", repro.scenes, "Synthetic scenes for fig9");
  s_repro->add_flag("--quick", repro.quick, "Smaller lattices and images");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    std::fputs(app.help().c_str(), stderr);
    return 2;
  }

  try {
    if (*s_trace) run_trace(common, trace);
    else if (*s_psf) run_psf(common, psf);
    else if (*s_fit) run_fit_surrogate(common, fit);
    else if (*s_evs) run_eval_surrogate(common, evs);
    else if (*s_render) run_render_stack(common, render);
    else if (*s_est) run_estimate_depth(common, est);
    else if (*s_ev) run_eval(common, ev);
    else if (*s_em) run_error_map(common, em);
    else if (*s_repro) run_repro(common, repro);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    return fail("parse", e.what());
  } catch (const ValidationError& e) {
    return fail("validation", e.what());
  } catch (const NumericError& e) {
    return fail("numeric", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}

}  // namespace aberray::cli
