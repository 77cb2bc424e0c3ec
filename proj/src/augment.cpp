#include "fswc/augment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fswc/error.hpp"

namespace fswc {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDetFloor = 1e-12;
constexpr double kSnapEps = 1e-9;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw ArgumentError(std::string(what) + " must be finite");
  }
}

void require_image(const Tensor& img, const char* op) {
  if (img.rank() != 3) {
    throw ShapeError(std::string(op) + ": expected a rank-3 HxWxC image, got rank " +
                     std::to_string(img.rank()));
  }
}

// Snaps values that are within kSnapEps of an integer. Keeps axis-aligned
// warps free of spurious interpolation weights.
double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kSnapEps ? r : v;
}

double sample_bilinear(const Tensor& img, double sx, double sy, int channel,
                       double fill) {
  const int height = img.shape()[0];
  const int width = img.shape()[1];
  const double x0f = std::floor(sx);
  const double y0f = std::floor(sy);
  const int x0 = static_cast<int>(x0f);
  const int y0 = static_cast<int>(y0f);
  const double fx = sx - x0f;
  const double fy = sy - y0f;

  auto value_at = [&](int col, int row) {
    if (col < 0 || col >= width || row < 0 || row >= height) return fill;
    return img.at(row, col, channel);
  };

  const double v00 = value_at(x0, y0);
  const double v01 = value_at(x0 + 1, y0);
  const double v10 = value_at(x0, y0 + 1);
  const double v11 = value_at(x0 + 1, y0 + 1);
  const double top = (1.0 - fx) * v00 + fx * v01;
  const double bottom = (1.0 - fx) * v10 + fx * v11;
  return (1.0 - fy) * top + fy * bottom;
}

void validate_range(const std::array<double, 2>& range, const char* name,
                    bool strictly_positive) {
  require_finite(range[0], name);
  require_finite(range[1], name);
  if (range[0] > range[1]) {
    throw ArgumentError(std::string(name) + " range is not ordered");
  }
  if (strictly_positive && range[0] <= 0.0) {
    throw ArgumentError(std::string(name) + " range must be strictly positive");
  }
}

}  // namespace

bool AffineTransform::invertible() const {
  return std::abs(det()) > kDetFloor;
}

AffineTransform AffineTransform::inverse() const {
  const double d = det();
  if (std::abs(d) <= kDetFloor) {
    throw ArgumentError("transform is not invertible (|det| <= 1e-12)");
  }
  AffineTransform inv;
  inv.m = {m[3] / d, -m[1] / d, -m[2] / d, m[0] / d};
  // q = m p + t  =>  p = m^-1 q - m^-1 t
  inv.t = {-(inv.m[0] * t[0] + inv.m[1] * t[1]),
           -(inv.m[2] * t[0] + inv.m[3] * t[1])};
  return inv;
}

AffineTransform affine_rotation(double alpha) {
  require_finite(alpha, "rotation angle");
  AffineTransform xf;
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  xf.m = {c, -s, s, c};
  return xf;
}

AffineTransform affine_scale(double sx, double sy) {
  require_finite(sx, "scale factor");
  require_finite(sy, "scale factor");
  if (sx == 0.0 || sy == 0.0) {
    throw ArgumentError("scale factor must be nonzero");
  }
  AffineTransform xf;
  xf.m = {sx, 0.0, 0.0, sy};
  return xf;
}

AffineTransform affine_shear(double hx, double hy) {
  require_finite(hx, "shear coefficient");
  require_finite(hy, "shear coefficient");
  if (hx * hy == 1.0) {
    throw ArgumentError("shear with hx*hy = 1 is singular");
  }
  AffineTransform xf;
  xf.m = {1.0, hx, hy, 1.0};
  return xf;
}

AffineTransform affine_translate(double dx, double dy) {
  require_finite(dx, "translation");
  require_finite(dy, "translation");
  AffineTransform xf;
  xf.t = {dx, dy};
  return xf;
}

AffineTransform compose(const AffineTransform& a, const AffineTransform& b) {
  AffineTransform out;
  out.m = {a.m[0] * b.m[0] + a.m[1] * b.m[2],
           a.m[0] * b.m[1] + a.m[1] * b.m[3],
           a.m[2] * b.m[0] + a.m[3] * b.m[2],
           a.m[2] * b.m[1] + a.m[3] * b.m[3]};
  out.t = {a.m[0] * b.t[0] + a.m[1] * b.t[1] + a.t[0],
           a.m[2] * b.t[0] + a.m[3] * b.t[1] + a.t[1]};
  return out;
}

Tensor warp(const Tensor& img, const AffineTransform& xf, double fill) {
  require_image(img, "warp");
  const AffineTransform inv = xf.inverse();
  const int height = img.shape()[0];
  const int width = img.shape()[1];
  const int channels = img.shape()[2];
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;

  Tensor out = Tensor::zeros(img.shape());
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      // Pull the output pixel center back into source coordinates.
      const double qx = col - cx - xf.t[0];
      const double qy = row - cy - xf.t[1];
      const double sx = snap(inv.m[0] * qx + inv.m[1] * qy + cx);
      const double sy = snap(inv.m[2] * qx + inv.m[3] * qy + cy);
      for (int ch = 0; ch < channels; ++ch) {
        out.at(row, col, ch) = sample_bilinear(img, sx, sy, ch, fill);
      }
    }
  }
  return out;
}

Tensor flip_horizontal(const Tensor& img) {
  require_image(img, "flip_horizontal");
  const int height = img.shape()[0];
  const int width = img.shape()[1];
  const int channels = img.shape()[2];
  Tensor out = Tensor::zeros(img.shape());
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      for (int ch = 0; ch < channels; ++ch) {
        out.at(row, col, ch) = img.at(row, width - 1 - col, ch);
      }
    }
  }
  return out;
}

Tensor adjust_brightness(const Tensor& img, double factor) {
  if (!std::isfinite(factor) || factor <= 0.0) {
    throw ArgumentError("brightness factor must be positive");
  }
  return img.map([factor](double v) {
    return std::clamp(v * factor, 0.0, 1.0);
  });
}

void AugmentConfig::validate() const {
  validate_range(width_shift, "width_shift", false);
  validate_range(height_shift, "height_shift", false);
  validate_range(brightness, "brightness", true);
  validate_range(zoom, "zoom", true);
  require_finite(rotation_max_deg, "rotation_max_deg");
  if (rotation_max_deg < 0.0) {
    throw ArgumentError("rotation_max_deg must be nonnegative");
  }
  require_finite(fill_value, "fill_value");
}

Tensor random_augment(const Tensor& img, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  require_image(img, "random_augment");
  const double height = img.shape()[0];
  const double width = img.shape()[1];

  const double dx = std::clamp(rng.uniform(cfg.width_shift[0], cfg.width_shift[1]),
                               -width, width);
  const double dy = std::clamp(
      rng.uniform(cfg.height_shift[0], cfg.height_shift[1]) * height, -height,
      height);
  const bool flip = rng.next_double() < 0.5 && cfg.allow_hflip;
  const double angle =
      rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg) * kPi / 180.0;
  const double zoom_factor = rng.uniform(cfg.zoom[0], cfg.zoom[1]);
  const double brightness_factor =
      rng.uniform(cfg.brightness[0], cfg.brightness[1]);

  AffineTransform xf = affine_scale(zoom_factor, zoom_factor);
  xf = compose(affine_rotation(angle), xf);
  if (flip) xf = compose(affine_scale(-1.0, 1.0), xf);
  xf = compose(affine_translate(dx, dy), xf);

  return adjust_brightness(warp(img, xf, cfg.fill_value), brightness_factor);
}

}  // namespace fswc
