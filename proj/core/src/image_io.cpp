#include "aberray/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "aberray/error.hpp"

namespace aberray {
namespace {

double srgb_encode(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double s) { return s <= 0.04045 ? s / 12.92 : std::pow((s + 0.055) / 1.055, 2.4); }

struct PngReader {
  png_image image{};
  explicit PngReader(const std::filesystem::path& path) {
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
      throw Error("cannot read PNG " + path.string() + ": " + image.message);
  }
  ~PngReader() { png_image_free(&image); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
};

void write_png(const std::filesystem::path& path, png_uint_32 format, int width, int height,
               const void* buffer) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer, 0, nullptr))
    throw Error("cannot write PNG " + path.string() + ": " + image.message);
}

}  // namespace

Image read_png_rgb(const std::filesystem::path& path) {
  PngReader reader(path);
  const int w = static_cast<int>(reader.image.width);
  const int h = static_cast<int>(reader.image.height);
  Image out(w, h, 3);
  // 8-bit files are decoded with the exact sRGB curve here; libpng's own
  // conversion uses a plain 2.2 power law.
  if (!(reader.image.format & PNG_FORMAT_FLAG_LINEAR)) {
    reader.image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(reader.image));
    if (!png_image_finish_read(&reader.image, nullptr, buffer.data(), 0, nullptr))
      throw Error("cannot decode PNG " + path.string() + ": " + reader.image.message);
    std::array<double, 256> table;
    for (int i = 0; i < 256; ++i) table[static_cast<std::size_t>(i)] = srgb_decode(i / 255.0);
    for (std::size_t i = 0; i < buffer.size(); ++i) out.values()[i] = table[buffer[i]];
    return out;
  }
  reader.image.format = PNG_FORMAT_LINEAR_RGB;
  std::vector<std::uint16_t> buffer(PNG_IMAGE_SIZE(reader.image) / 2);
  if (!png_image_finish_read(&reader.image, nullptr, buffer.data(), 0, nullptr))
    throw Error("cannot decode PNG " + path.string() + ": " + reader.image.message);
  for (std::size_t i = 0; i < buffer.size(); ++i) out.values()[i] = buffer[i] / 65535.0;
  return out;
}

void write_png_rgb(const std::filesystem::path& path, const Image& rgb, bool sixteen_bit) {
  if (rgb.channels() != 3) throw ValidationError("write_png_rgb expects 3 channels");
  const auto& v = rgb.values();
  if (sixteen_bit) {
    std::vector<std::uint16_t> buffer(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      buffer[i] = static_cast<std::uint16_t>(std::lround(std::clamp(v[i], 0.0, 1.0) * 65535.0));
    write_png(path, PNG_FORMAT_LINEAR_RGB, rgb.width(), rgb.height(), buffer.data());
  } else {
    std::vector<std::uint8_t> buffer(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      buffer[i] = static_cast<std::uint8_t>(std::lround(srgb_encode(v[i]) * 255.0));
    write_png(path, PNG_FORMAT_RGB, rgb.width(), rgb.height(), buffer.data());
  }
}

Image read_png_depth16(const std::filesystem::path& path, double scale) {
  PngReader reader(path);
  if (!(reader.image.format & PNG_FORMAT_FLAG_LINEAR) || (reader.image.format & PNG_FORMAT_FLAG_COLOR))
    throw Error(path.string() + " is not a 16-bit single-channel PNG");
  reader.image.format = PNG_FORMAT_LINEAR_Y;
  const int w = static_cast<int>(reader.image.width);
  const int h = static_cast<int>(reader.image.height);
  std::vector<std::uint16_t> buffer(PNG_IMAGE_SIZE(reader.image) / 2);
  if (!png_image_finish_read(&reader.image, nullptr, buffer.data(), 0, nullptr))
    throw Error("cannot decode PNG " + path.string() + ": " + reader.image.message);
  Image out(w, h, 1);
  for (std::size_t i = 0; i < buffer.size(); ++i) out.values()[i] = buffer[i] * scale;
  return out;
}

Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();  // single whitespace before the raster
  int channels = 0;
  if (magic == "Pf") channels = 1;
  else if (magic == "PF") channels = 3;
  else throw Error(path.string() + " is not a PFM file");
  if (!in || w <= 0 || h <= 0 || scale == 0.0) throw Error("bad PFM header in " + path.string());
  const bool little = scale < 0.0;
  Image out(w, h, channels);
  std::vector<std::uint32_t> row(static_cast<std::size_t>(w * channels));
  // PFM rows run bottom to top.
  for (int r = h - 1; r >= 0; --r) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4)))
      throw Error("truncated PFM " + path.string());
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::uint32_t bits = row[i];
      if (little != (std::endian::native == std::endian::little)) bits = __builtin_bswap32(bits);
      out.values()[static_cast<std::size_t>(r) * row.size() + i] = std::bit_cast<float>(bits);
    }
  }
  return out;
}

void write_pfm(const std::filesystem::path& path, const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) throw ValidationError("PFM holds 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << (image.channels() == 1 ? "Pf" : "PF") << "\n" << image.width() << " " << image.height() << "\n-1.0\n";
  const std::size_t stride = static_cast<std::size_t>(image.width() * image.channels());
  std::vector<float> row(stride);
  for (int r = image.height() - 1; r >= 0; --r) {
    for (std::size_t i = 0; i < stride; ++i)
      row[i] = static_cast<float>(image.values()[static_cast<std::size_t>(r) * stride + i]);
    if constexpr (std::endian::native != std::endian::little)
      for (auto& f : row) f = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(f)));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(stride * 4));
  }
  if (!out) throw Error("failed writing " + path.string());
}

void write_colormap_png(const std::filesystem::path& path, const Image& scalar, double lo, double hi) {
  if (scalar.channels() != 1) throw ValidationError("colormap input must be single-channel");
  // Viridis control points.
  static constexpr std::array<std::array<double, 3>, 9> kStops = {{
      {0.267, 0.005, 0.329}, {0.278, 0.175, 0.483}, {0.231, 0.322, 0.546},
      {0.173, 0.449, 0.558}, {0.128, 0.567, 0.551}, {0.153, 0.683, 0.502},
      {0.361, 0.787, 0.386}, {0.659, 0.866, 0.204}, {0.993, 0.906, 0.144},
  }};
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<std::uint8_t> buffer(scalar.pixel_count() * 3);
  for (std::size_t i = 0; i < scalar.pixel_count(); ++i) {
    double t = std::clamp((scalar.values()[i] - lo) / span, 0.0, 1.0);
    if (!std::isfinite(t)) t = 0.0;
    const double pos = t * (kStops.size() - 1);
    const std::size_t a = std::min<std::size_t>(static_cast<std::size_t>(pos), kStops.size() - 2);
    const double f = pos - static_cast<double>(a);
    for (int c = 0; c < 3; ++c) {
      const double v = kStops[a][static_cast<std::size_t>(c)] * (1.0 - f) + kStops[a + 1][static_cast<std::size_t>(c)] * f;
      buffer[i * 3 + static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  write_png(path, PNG_FORMAT_RGB, scalar.width(), scalar.height(), buffer.data());
}

Image read_depth(const std::filesystem::path& path, double png_scale) {
  const std::string ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM") {
    Image d = read_pfm(path);
    if (d.channels() != 1) throw Error("depth PFM must be single-channel: " + path.string());
    return d;
  }
  return read_png_depth16(path, png_scale);
}

}  // namespace aberray
