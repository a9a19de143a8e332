#include "aberray/image.hpp"

#include <algorithm>
#include <numeric>

#include "aberray/error.hpp"

namespace aberray {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 1) throw ValidationError("invalid image shape");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                   static_cast<std::size_t>(channels),
               fill);
}

double Image::min() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }
double Image::max() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }

double Image::mean() const {
  if (data_.empty()) return 0.0;
  return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

}  // namespace aberray
