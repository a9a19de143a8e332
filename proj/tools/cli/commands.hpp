#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace aberray::cli {

struct Common {
  std::string lens;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out = ".";
  std::vector<std::string> argv;  // echoed into manifests
};

struct TraceOptions {
  double focus_m = 1.5;
  std::array<double, 3> point_m{0.0, 0.0, 1.5};
  std::size_t spp = 2048;
};

struct PsfOptions {
  double focus_m = 1.5;
  std::array<double, 3> point_m{0.0, 0.0, 1.5};
  std::size_t spp = 2048;
  int k = 11;
  double pitch_mm = 0.05;
};

struct FitOptions {
  std::string kind = "mlp";
  std::uint64_t iterations = 50000;
  std::size_t batch = 256;
  double learning_rate = 1e-3;
  std::size_t spp = 1024;
  int k = 11;
  double pitch_mm = 0.05;
  std::string depth_norm = "linear";
  int grid_depths = 20;
  int grid_nx = 8;
  int grid_ny = 8;
  int grid_focus_count = 20;
};

struct EvalSurrogateOptions {
  std::vector<std::string> models;
  std::size_t spp = 2048;
  int focus_count = 20;
  int depth_count = 40;
  int nx = 10;
  int ny = 8;
  double pitch_mm = 0.05;
  std::string depth_norm = "linear";
};

struct RenderOptions {
  std::string rgb;
  std::string depth;
  double depth_scale = 0.001;
  bool synthetic = false;
  int width = 640;
  int height = 480;
  std::string provider = "raytraced";
  std::string model;
  std::size_t spp = 256;
  int stack_size = 10;
  double perturb = 0.25;
  double pitch_mm = 0.0;  // 0: sensor width over image width
  int k = 11;
  bool png8 = false;
};

struct EstimateOptions {
  std::string stack;
  double temperature = 0.1;
  std::string measure = "sml";
  int window = 9;
};

struct EvalOptions {
  std::string pred;
  std::string gt;
  double depth_scale = 0.001;
  double min_depth_m = 0.2;
  double max_depth_m = 20.0;
};

struct ErrorMapOptions {
  std::vector<std::string> preds;
  std::vector<std::string> gts;
  double depth_scale = 0.001;
  double max_error_m = 0.0;  // colormap ceiling; 0 means the map's maximum
};

struct ReproOptions {
  std::string figure;
  std::string model;
  std::uint64_t iterations = 2000;
  std::size_t spp = 2048;
  std::size_t render_spp = 128;
  int scenes = 5;
  bool quick = false;
};

void run_trace(const Common& c, const TraceOptions& o);
void run_psf(const Common& c, const PsfOptions& o);
void run_fit_surrogate(const Common& c, const FitOptions& o);
void run_eval_surrogate(const Common& c, const EvalSurrogateOptions& o);
void run_render_stack(const Common& c, const RenderOptions& o);
void run_estimate_depth(const Common& c, const EstimateOptions& o);
void run_eval(const Common& c, const EvalOptions& o);
void run_error_map(const Common& c, const ErrorMapOptions& o);
void run_repro(const Common& c, const ReproOptions& o);

}  // namespace aberray::cli
