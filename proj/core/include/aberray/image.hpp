#pragma once

#include <cstddef>
#include <vector>

namespace aberray {

/// Interleaved H x W x C image of doubles, row-major, row 0 at the top.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }
  bool empty() const { return data_.empty(); }

  double& at(int row, int col, int channel = 0) { return data_[offset(row, col, channel)]; }
  double at(int row, int col, int channel = 0) const { return data_[offset(row, col, channel)]; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }
  double min() const;
  double max() const;
  double mean() const;

  bool operator==(const Image&) const = default;

 private:
  std::size_t offset(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(channel);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

}  // namespace aberray
