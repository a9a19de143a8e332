#include "aberray/psf_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "aberray/error.hpp"

namespace aberray {
namespace {

static_assert(std::endian::native == std::endian::little, "PSFG I/O assumes a little-endian host");

constexpr char kMagic[4] = {'P', 'S', 'F', 'G'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw Error("truncated PSF dataset " + path.string());
  return v;
}

}  // namespace

void PsfDataset::add(const PsfGrid& psf, const ObjectQuery& q) {
  if (psf.k != k) throw ValidationError("kernel size mismatch in PSF dataset");
  kernels.emplace_back(psf.kernel.begin(), psf.kernel.end());
  queries.push_back({static_cast<float>(q.x_norm), static_cast<float>(q.y_norm),
                     static_cast<float>(q.z_norm), static_cast<float>(q.focus_norm)});
}

void write_psf_dataset(const std::filesystem::path& path, const PsfDataset& data) {
  if (data.kernels.size() != data.queries.size())
    throw ValidationError("PSF dataset has mismatched kernel and query counts");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.k));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t kk = static_cast<std::size_t>(data.k * data.k);
  for (const auto& kernel : data.kernels) {
    if (kernel.size() != kk) throw ValidationError("kernel size mismatch in PSF dataset");
    out.write(reinterpret_cast<const char*>(kernel.data()), static_cast<std::streamsize>(kk * sizeof(float)));
  }
  for (const auto& q : data.queries)
    out.write(reinterpret_cast<const char*>(q.data()), static_cast<std::streamsize>(4 * sizeof(float)));
  if (!out) throw Error("failed writing " + path.string());
}

PsfDataset read_psf_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(path.string() + " is not a PSFG file");
  PsfDataset data;
  data.k = static_cast<int>(get<std::uint32_t>(in, path));
  const auto count = get<std::uint32_t>(in, path);
  if (data.k < 1 || data.k % 2 == 0 || data.k > 255) throw Error("bad kernel size in " + path.string());
  const std::size_t kk = static_cast<std::size_t>(data.k * data.k);
  data.kernels.assign(count, std::vector<float>(kk));
  for (auto& kernel : data.kernels)
    if (!in.read(reinterpret_cast<char*>(kernel.data()), static_cast<std::streamsize>(kk * sizeof(float))))
      throw Error("truncated PSF dataset " + path.string());
  data.queries.resize(count);
  for (auto& q : data.queries)
    if (!in.read(reinterpret_cast<char*>(q.data()), static_cast<std::streamsize>(4 * sizeof(float))))
      throw Error("truncated PSF dataset " + path.string());
  return data;
}

}  // namespace aberray
