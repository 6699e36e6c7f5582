// SPDX-License-Identifier: Apache-2.0
#include "onedatum/core/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace onedatum::img {

namespace {
constexpr double kPi = 3.14159265358979323846;

inline float clamp255(float v) {
  return v < 0.0f ? 0.0f : (v > 255.0f ? 255.0f : v);
}

// reflect-101 index: ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}
}  // namespace

ImageF to_float(const ImageU8& in) {
  ImageF out(in.height, in.width, in.channels);
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    out.data[i] = static_cast<float>(in.data[i]);
  }
  return out;
}

ImageU8 to_u8_clamped(const ImageF& in) {
  ImageU8 out(in.height, in.width, in.channels);
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    out.data[i] = static_cast<std::uint8_t>(
        std::lround(clamp255(in.data[i])));
  }
  return out;
}

ImageF crop(const ImageF& in, int top, int left, int h, int w) {
  if (top < 0 || left < 0 || top + h > in.height || left + w > in.width) {
    throw ConfigError("crop out of bounds");
  }
  ImageF out(h, w, in.channels);
  std::size_t row_bytes = static_cast<std::size_t>(w) * in.channels;
  for (int y = 0; y < h; ++y) {
    const float* src = &in.data[(static_cast<std::size_t>(top + y) * in.width +
                                 left) * in.channels];
    std::memcpy(&out.data[static_cast<std::size_t>(y) * row_bytes], src,
                row_bytes * sizeof(float));
  }
  return out;
}

ImageF center_crop(const ImageF& in, int h, int w) {
  int top = (in.height - h) / 2;
  int left = (in.width - w) / 2;
  return crop(in, top, left, h, w);
}

ImageF flip_horizontal(const ImageF& in) {
  ImageF out(in.height, in.width, in.channels);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      for (int c = 0; c < in.channels; ++c) {
        out.at(y, x, c) = in.at(y, in.width - 1 - x, c);
      }
    }
  }
  return out;
}

ImageF flip_vertical(const ImageF& in) {
  ImageF out(in.height, in.width, in.channels);
  std::size_t row = static_cast<std::size_t>(in.width) * in.channels;
  for (int y = 0; y < in.height; ++y) {
    std::memcpy(&out.data[static_cast<std::size_t>(y) * row],
                &in.data[static_cast<std::size_t>(in.height - 1 - y) * row],
                row * sizeof(float));
  }
  return out;
}

ImageF resize_bilinear(const ImageF& in, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw ConfigError("resize to empty size");
  ImageF out(out_h, out_w, in.channels);
  double sy = static_cast<double>(in.height) / out_h;
  double sx = static_cast<double>(in.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y0c = std::clamp(y0, 0, in.height - 1);
    int y1c = std::clamp(y0 + 1, 0, in.height - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x0c = std::clamp(x0, 0, in.width - 1);
      int x1c = std::clamp(x0 + 1, 0, in.width - 1);
      for (int c = 0; c < in.channels; ++c) {
        double top = in.at(y0c, x0c, c) * (1.0 - wx) + in.at(y0c, x1c, c) * wx;
        double bot = in.at(y1c, x0c, c) * (1.0 - wx) + in.at(y1c, x1c, c) * wx;
        out.at(y, x, c) = static_cast<float>(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

ImageF crop_resize_bilinear(const ImageU8& in, int top, int left, int h,
                            int w, int out_h, int out_w) {
  if (top < 0 || left < 0 || top + h > in.height || left + w > in.width) {
    throw ConfigError("crop out of bounds");
  }
  if (out_h <= 0 || out_w <= 0) throw ConfigError("resize to empty size");
  ImageF out(out_h, out_w, in.channels);
  double sy = static_cast<double>(h) / out_h;
  double sx = static_cast<double>(w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y0c = top + std::clamp(y0, 0, h - 1);
    int y1c = top + std::clamp(y0 + 1, 0, h - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x0c = left + std::clamp(x0, 0, w - 1);
      int x1c = left + std::clamp(x0 + 1, 0, w - 1);
      for (int c = 0; c < in.channels; ++c) {
        double tl = in.at(y0c, x0c, c), tr = in.at(y0c, x1c, c);
        double bl = in.at(y1c, x0c, c), br = in.at(y1c, x1c, c);
        double t = tl * (1.0 - wx) + tr * wx;
        double b = bl * (1.0 - wx) + br * wx;
        out.at(y, x, c) = static_cast<float>(t * (1.0 - wy) + b * wy);
      }
    }
  }
  return out;
}

ImageF rotate_shear(const ImageF& in, double angle_deg, double shear_deg) {
  // Forward map: translate(center) * rotate(a) * shear_x(s) * translate(-center).
  // We sample through the inverse: shear_x(-s) * rotate(-a).
  double a = angle_deg * kPi / 180.0;
  double s = std::tan(shear_deg * kPi / 180.0);
  double ca = std::cos(a);
  double sa = std::sin(a);
  // inverse of [ca, -sa; sa, ca] * [1, s; 0, 1]
  // forward M = [ca, ca*s - sa; sa, sa*s + ca]
  double m00 = ca, m01 = ca * s - sa;
  double m10 = sa, m11 = sa * s + ca;
  double det = m00 * m11 - m01 * m10;
  double i00 = m11 / det, i01 = -m01 / det;
  double i10 = -m10 / det, i11 = m00 / det;
  double cy = (in.height - 1) / 2.0;
  double cx = (in.width - 1) / 2.0;

  ImageF out(in.height, in.width, in.channels);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double dx = x - cx;
      double dy = y - cy;
      double sxf = i00 * dx + i01 * dy + cx;
      double syf = i10 * dx + i11 * dy + cy;
      int x0 = static_cast<int>(std::floor(sxf));
      int y0 = static_cast<int>(std::floor(syf));
      double wx = sxf - x0;
      double wy = syf - y0;
      int x0r = reflect_index(x0, in.width);
      int x1r = reflect_index(x0 + 1, in.width);
      int y0r = reflect_index(y0, in.height);
      int y1r = reflect_index(y0 + 1, in.height);
      for (int c = 0; c < in.channels; ++c) {
        double top =
            in.at(y0r, x0r, c) * (1.0 - wx) + in.at(y0r, x1r, c) * wx;
        double bot =
            in.at(y1r, x0r, c) * (1.0 - wx) + in.at(y1r, x1r, c) * wx;
        out.at(y, x, c) = static_cast<float>(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

ImageF adjust_brightness(const ImageF& in, double factor) {
  ImageF out = in;
  for (auto& v : out.data) v = static_cast<float>(v * factor);
  return out;
}

ImageF adjust_contrast(const ImageF& in, double factor) {
  // Blend with the mean luminance of the whole image.
  double mean = 0.0;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      mean += 0.299 * in.at(y, x, 0) + 0.587 * in.at(y, x, 1) +
              0.114 * in.at(y, x, 2);
    }
  }
  mean /= static_cast<double>(in.height) * in.width;
  ImageF out = in;
  for (auto& v : out.data) {
    v = static_cast<float>(factor * v + (1.0 - factor) * mean);
  }
  return out;
}

ImageF adjust_saturation(const ImageF& in, double factor) {
  ImageF out = in;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double gray = 0.299 * in.at(y, x, 0) + 0.587 * in.at(y, x, 1) +
                    0.114 * in.at(y, x, 2);
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) =
            static_cast<float>(factor * in.at(y, x, c) + (1.0 - factor) * gray);
      }
    }
  }
  return out;
}

namespace {
void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  double mx = std::max({r, g, b});
  double mn = std::min({r, g, b});
  v = mx;
  double d = mx - mn;
  s = mx <= 0.0 ? 0.0 : d / mx;
  if (d <= 0.0) {
    h = 0.0;
    return;
  }
  if (mx == r) {
    h = (g - b) / d;
  } else if (mx == g) {
    h = 2.0 + (b - r) / d;
  } else {
    h = 4.0 + (r - g) / d;
  }
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  if (s <= 0.0) {
    r = g = b = v;
    return;
  }
  h = h - std::floor(h);
  double hh = h * 6.0;
  int i = static_cast<int>(hh) % 6;
  double f = hh - std::floor(hh);
  double p = v * (1.0 - s);
  double q = v * (1.0 - s * f);
  double t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}
}  // namespace

ImageF adjust_hue(const ImageF& in, double shift) {
  ImageF out = in;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      // hue rotation is defined on the clamped [0,1] cube
      double r = std::clamp(in.at(y, x, 0) / 255.0, 0.0, 1.0);
      double g = std::clamp(in.at(y, x, 1) / 255.0, 0.0, 1.0);
      double b = std::clamp(in.at(y, x, 2) / 255.0, 0.0, 1.0);
      double h, s, v;
      rgb_to_hsv(r, g, b, h, s, v);
      hsv_to_rgb(h + shift, s, v, r, g, b);
      out.at(y, x, 0) = static_cast<float>(r * 255.0);
      out.at(y, x, 1) = static_cast<float>(g * 255.0);
      out.at(y, x, 2) = static_cast<float>(b * 255.0);
    }
  }
  return out;
}

ImageF rgb_to_gray(const ImageF& in) {
  ImageF out(in.height, in.width, 1);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      out.at(y, x, 0) = static_cast<float>(0.299 * in.at(y, x, 0) +
                                           0.587 * in.at(y, x, 1) +
                                           0.114 * in.at(y, x, 2));
    }
  }
  return out;
}

ImageU8 force_rgb(const ImageU8& in) {
  if (in.channels == 3) return in;
  ImageU8 out(in.height, in.width, 3);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      if (in.channels == 1) {
        std::uint8_t v = in.at(y, x, 0);
        out.at(y, x, 0) = out.at(y, x, 1) = out.at(y, x, 2) = v;
      } else if (in.channels == 2) {  // gray + alpha
        std::uint8_t v = in.at(y, x, 0);
        out.at(y, x, 0) = out.at(y, x, 1) = out.at(y, x, 2) = v;
      } else {  // RGBA: drop alpha
        out.at(y, x, 0) = in.at(y, x, 0);
        out.at(y, x, 1) = in.at(y, x, 1);
        out.at(y, x, 2) = in.at(y, x, 2);
      }
    }
  }
  return out;
}

}  // namespace onedatum::img
