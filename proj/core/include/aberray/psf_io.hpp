#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "aberray/psf.hpp"

namespace aberray {

/// A bag of kernels with their normalised query coordinates, as stored in a
/// "PSFG" file: magic, u32 k, u32 count, count*k*k float32 kernels, then
/// count (x, y, z, f_d) float32 records. Little-endian throughout.
struct PsfDataset {
  int k = kDefaultPsfSize;
  std::vector<std::vector<float>> kernels;
  std::vector<std::array<float, 4>> queries;

  std::size_t size() const { return kernels.size(); }
  void add(const PsfGrid& psf, const ObjectQuery& q);
};

void write_psf_dataset(const std::filesystem::path& path, const PsfDataset& data);
PsfDataset read_psf_dataset(const std::filesystem::path& path);

}  // namespace aberray
