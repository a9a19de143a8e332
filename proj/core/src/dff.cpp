#include "aberray/dff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aberray/error.hpp"

namespace aberray {

const char* to_string(FocusMeasure m) {
  return m == FocusMeasure::kModifiedLaplacian ? "sum_modified_laplacian" : "gradient_magnitude";
}

namespace {

Image channel_mean(const Image& frame) {
  Image g(frame.width(), frame.height(), 1);
  const int ch = frame.channels();
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    double s = 0.0;
    for (int c = 0; c < ch; ++c) s += frame.values()[i * static_cast<std::size_t>(ch) + static_cast<std::size_t>(c)];
    g.values()[i] = s / ch;
  }
  return g;
}

// Box sum over a window with replicate borders, separable.
Image box_sum(const Image& in, int window) {
  const int w = in.width();
  const int h = in.height();
  const int half = window / 2;
  Image tmp(w, h, 1);
  Image out(w, h, 1);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int d = -half; d <= half; ++d) s += in.at(r, std::clamp(c + d, 0, w - 1));
      tmp.at(r, c) = s;
    }
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int d = -half; d <= half; ++d) s += tmp.at(std::clamp(r + d, 0, h - 1), c);
      out.at(r, c) = s;
    }
  return out;
}

}  // namespace

Image sharpness(const Image& frame, FocusMeasure measure, int window) {
  if (window < 1 || window % 2 == 0) throw ValidationError("focus-measure window must be odd");
  const Image g = channel_mean(frame);
  const int w = g.width();
  const int h = g.height();
  auto px = [&](int r, int c) { return g.at(std::clamp(r, 0, h - 1), std::clamp(c, 0, w - 1)); };
  Image m(w, h, 1);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (measure == FocusMeasure::kModifiedLaplacian) {
        const double centre = 2.0 * px(r, c);
        m.at(r, c) = std::abs(centre - px(r, c - 1) - px(r, c + 1)) + std::abs(centre - px(r - 1, c) - px(r + 1, c));
      } else {
        const double gx = 0.5 * (px(r, c + 1) - px(r, c - 1));
        const double gy = 0.5 * (px(r + 1, c) - px(r - 1, c));
        m.at(r, c) = std::sqrt(gx * gx + gy * gy);
      }
    }
  }
  return box_sum(m, window);
}

std::vector<Image> sharpness_volume(const FocalStack& stack, FocusMeasure measure, int window) {
  std::vector<Image> out;
  out.reserve(stack.frames.size());
  for (const Image& f : stack.frames) out.push_back(sharpness(f, measure, window));
  return out;
}

std::vector<int> argmax_frames(const std::vector<Image>& s) {
  if (s.empty()) throw ValidationError("empty sharpness volume");
  std::vector<int> best(s.front().pixel_count(), 0);
  for (std::size_t i = 0; i < best.size(); ++i) {
    double top = s[0].values()[i];
    for (std::size_t f = 1; f < s.size(); ++f)
      if (s[f].values()[i] > top) {
        top = s[f].values()[i];
        best[i] = static_cast<int>(f);
      }
  }
  return best;
}

DepthEstimate estimate_depth(const std::vector<double>& focus, const std::vector<Image>& s,
                             double relative_temperature) {
  if (s.empty() || s.size() != focus.size())
    throw ValidationError("sharpness volume and focus list disagree in length");
  const std::size_t n = s.front().pixel_count();
  for (const Image& im : s)
    if (!im.same_shape(s.front())) throw ValidationError("sharpness frames differ in shape");

  DepthEstimate est;
  est.depth = Image(s.front().width(), s.front().height(), 1);
  est.probability.assign(s.size(), Image(s.front().width(), s.front().height(), 1));
  std::vector<double> w(s.size());
  for (std::size_t i = 0; i < n; ++i) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t arg = 0;
    for (std::size_t f = 0; f < s.size(); ++f) {
      const double v = s[f].values()[i];
      lo = std::min(lo, v);
      if (v > hi) {
        hi = v;
        arg = f;
      }
    }
    const double range = hi - lo;
    if (relative_temperature <= 0.0) {
      std::fill(w.begin(), w.end(), 0.0);
      w[arg] = 1.0;
    } else if (!(range > 0.0)) {
      std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(s.size()));
    } else {
      const double t = relative_temperature * range;
      double total = 0.0;
      for (std::size_t f = 0; f < s.size(); ++f) {
        w[f] = std::exp((s[f].values()[i] - hi) / t);
        total += w[f];
      }
      for (double& x : w) x /= total;
    }
    double d = 0.0;
    for (std::size_t f = 0; f < s.size(); ++f) {
      est.probability[f].values()[i] = w[f];
      d += w[f] * focus[f];
    }
    est.depth.values()[i] = std::clamp(d, *std::min_element(focus.begin(), focus.end()),
                                       *std::max_element(focus.begin(), focus.end()));
  }
  return est;
}

DepthEstimate estimate_depth(const FocalStack& stack, double relative_temperature, FocusMeasure measure,
                             int window) {
  return estimate_depth(stack.focus_distances_m, sharpness_volume(stack, measure, window), relative_temperature);
}

Image synthesize_aif(const FocalStack& stack, const std::vector<Image>& prob) {
  if (stack.frames.empty() || prob.size() != stack.frames.size())
    throw ValidationError("probability volume and stack disagree in length");
  const Image& first = stack.frames.front();
  Image out(first.width(), first.height(), first.channels());
  const auto ch = static_cast<std::size_t>(first.channels());
  for (std::size_t f = 0; f < prob.size(); ++f) {
    const Image& frame = stack.frames[f];
    if (!frame.same_shape(first) || prob[f].pixel_count() != first.pixel_count())
      throw ValidationError("frame shapes differ");
    for (std::size_t i = 0; i < first.pixel_count(); ++i) {
      const double p = prob[f].values()[i];
      for (std::size_t c = 0; c < ch; ++c) out.values()[i * ch + c] += p * frame.values()[i * ch + c];
    }
  }
  return out;
}

double psnr(const Image& a, const Image& b, double peak) {
  if (!a.same_shape(b)) throw ValidationError("PSNR inputs differ in shape");
  double se = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.values().size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

DepthMetrics compute_metrics(const Image& pred, const Image& gt, const std::vector<unsigned char>& mask) {
  if (!pred.same_shape(gt) || pred.channels() != 1) throw ValidationError("depth maps differ in shape");
  if (!mask.empty() && mask.size() != gt.pixel_count()) throw ValidationError("mask size mismatch");
  DepthMetrics m;
  const double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double g = gt.values()[i];
    const double p = pred.values()[i];
    if (!(g > 0.0)) throw ValidationError("ground-truth depth must be positive inside the mask");
    const double d = p - g;
    m.mae += std::abs(d);
    m.mse += d * d;
    m.abs_rel += std::abs(d) / g;
    m.sqr_rel += d * d / g;
    const double ratio = std::max(p / g, g / p);
    m.delta1 += ratio < t1;
    m.delta2 += ratio < t2;
    m.delta3 += ratio < t3;
    ++m.count;
  }
  if (m.count == 0) throw ValidationError("metric mask selects no pixels");
  const auto n = static_cast<double>(m.count);
  m.mae /= n;
  m.mse /= n;
  m.rmse = std::sqrt(m.mse);
  m.abs_rel /= n;
  m.sqr_rel /= n;
  m.delta1 /= n;
  m.delta2 /= n;
  m.delta3 /= n;
  return m;
}

std::vector<unsigned char> valid_mask(const RgbdImage& image) {
  std::vector<unsigned char> mask(image.depth.pixel_count(), 1);
  for (std::size_t i = 0; i < mask.size() && i < image.clamped.size(); ++i) mask[i] = image.clamped[i] ? 0 : 1;
  return mask;
}

Image radial_error_map(const std::vector<Image>& maps) {
  if (maps.empty()) throw ValidationError("radial_error_map needs at least one error map");
  Image out(maps.front().width(), maps.front().height(), 1);
  for (const Image& m : maps) {
    if (!m.same_shape(out)) throw ValidationError("error maps differ in shape");
    for (std::size_t i = 0; i < out.pixel_count(); ++i) out.values()[i] += std::abs(m.values()[i]);
  }
  for (double& v : out.values()) v /= static_cast<double>(maps.size());
  return out;
}

double radial_mean(const Image& map, double r_lo, double r_hi) {
  const double cx = map.width() / 2.0;
  const double cy = map.height() / 2.0;
  const double half_diag = std::hypot(cx, cy);
  double sum = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) {
      const double rho = std::hypot(c + 0.5 - cx, r + 0.5 - cy) / half_diag;
      if (rho >= r_lo && rho <= r_hi) {
        sum += map.at(r, c);
        ++n;
      }
    }
  if (n == 0) throw ValidationError("radial band selects no pixels");
  return sum / static_cast<double>(n);
}

double annulus_center_ratio(const Image& map) {
  const double centre = radial_mean(map, 0.0, 0.1);
  const double outer = radial_mean(map, 0.9, 1.0);
  if (centre == 0.0) return outer == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return outer / centre;
}

}  // namespace aberray
