#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "aberray/lens.hpp"
#include "aberray/lens_io.hpp"

namespace aberray::testing {

inline std::filesystem::path lens_path(const std::string& file) {
  return std::filesystem::path(ABERRAY_TEST_DATA_DIR) / "lenses" / file;
}

inline const LensPrescription& canon() {
  static const LensPrescription lens = load_prescription(lens_path("canon_rf50_f1.8.lens"));
  return lens;
}

inline const LensPrescription& lensnet() {
  static const LensPrescription lens = load_prescription(lens_path("lensnet_50mm_f2.8.lens"));
  return lens;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("aberray_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace aberray::testing
