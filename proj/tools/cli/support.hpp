#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "aberray/error.hpp"
#include "aberray/grid_model.hpp"
#include "aberray/provider.hpp"
#include "aberray/render.hpp"
#include "aberray/surrogate_eval.hpp"
#include "cli/commands.hpp"
#include "cli/manifest.hpp"

namespace aberray::cli {

/// Bad flags or flag combinations; exits with status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// --lens as given, or the bundled lens of that file name.
std::filesystem::path load_lens_path(const Common& c);
LensPrescription load_lens(const Common& c);
std::filesystem::path output_dir(const Common& c);

DepthNorm parse_depth_norm(const std::string& s);
const char* to_string(DepthNorm n);

RunManifest start_manifest(const Common& c, const std::string& subcommand, nlohmann::json config);

void write_csv_spot(const std::filesystem::path& path, const SpotDiagram& spot);
void write_csv_kernel(const std::filesystem::path& path, const PsfGrid& psf);
std::string file_magic(const std::filesystem::path& path);

std::unique_ptr<Surrogate> load_surrogate(const std::filesystem::path& path, const LensPrescription& lens,
                                          double pitch_mm, DepthNorm norm,
                                          std::vector<std::unique_ptr<GridModel>>& grids);
std::unique_ptr<PsfProvider> make_provider(const std::string& kind, const LensPrescription& lens, double pitch_mm,
                                           int k, std::size_t spp, std::uint64_t seed, const std::string& model);
FocalStack read_stack(const std::filesystem::path& path);

}  // namespace aberray::cli
