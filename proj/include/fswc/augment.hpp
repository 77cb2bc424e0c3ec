#ifndef FSWC_AUGMENT_HPP
#define FSWC_AUGMENT_HPP

#include <array>
#include <cstdint>

#include "fswc/rng.hpp"
#include "fswc/tensor.hpp"

namespace fswc {

// 2D affine map q = m * p + t, with the 2x2 linear part stored row-major.
// Transforms are center-agnostic: `warp` conjugates them around the image
// center pixel ((W-1)/2, (H-1)/2), so a rotation built here rotates about
// the center and a pure translation shifts by whole pixels. Conjugation
// distributes over composition, which keeps `compose` a plain group product.
struct AffineTransform {
  std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};
  std::array<double, 2> t{0.0, 0.0};

  static AffineTransform identity() { return AffineTransform{}; }

  double det() const { return m[0] * m[3] - m[1] * m[2]; }
  bool invertible() const;

  // Throws ArgumentError when |det| is below the invertibility floor.
  AffineTransform inverse() const;

  // Applies the map to a point (x, y).
  std::array<double, 2> apply(const std::array<double, 2>& p) const {
    return {m[0] * p[0] + m[1] * p[1] + t[0],
            m[2] * p[0] + m[3] * p[1] + t[1]};
  }
};

// Rotation by `alpha` radians, linear part [[cos,-sin],[sin,cos]].
AffineTransform affine_rotation(double alpha);

// Anisotropic scaling, linear part [[sx,0],[0,sy]]. Factors must be
// nonzero; negative factors give reflections (used for the flip recipe).
AffineTransform affine_scale(double sx, double sy);

// Shear with coefficients hx, hy, linear part [[1,hx],[hy,1]].
// Rejected when hx*hy == 1 (determinant vanishes).
AffineTransform affine_shear(double hx, double hy);

// Pure pixel translation.
AffineTransform affine_translate(double dx, double dy);

// Applying the result equals applying `b` first, then `a`.
AffineTransform compose(const AffineTransform& a, const AffineTransform& b);

// Inverse-mapped warp: each output pixel center is pulled back through
// xf^-1 (about the image center) and sampled bilinearly from the source.
// Source coordinates within 1e-9 of an integer are snapped, so axis-aligned
// transforms (identity, whole-pixel shifts, quarter-turn rotations of square
// images) reproduce pixels exactly. Samples falling outside the image
// contribute `fill`. Output shape equals input shape.
Tensor warp(const Tensor& img, const AffineTransform& xf, double fill = 0.0);

// Exact column reversal, no interpolation.
Tensor flip_horizontal(const Tensor& img);

// Multiplies every value by `factor` (> 0), clamping the result to [0, 1].
Tensor adjust_brightness(const Tensor& img, double factor);

// Parameter ranges for the six sampled recipes. The defaults are the
// recipe listings this pipeline reproduces: width shift in whole pixels,
// height shift as a fraction of image height, flips allowed, rotations up
// to 90 degrees, brightness in [0.2, 1.0], zoom in [0.5, 1.0].
struct AugmentConfig {
  std::array<double, 2> width_shift{-200.0, 200.0};  // pixels
  std::array<double, 2> height_shift{-0.5, 0.5};     // fraction of height
  bool allow_hflip = true;
  double rotation_max_deg = 90.0;
  std::array<double, 2> brightness{0.2, 1.0};
  std::array<double, 2> zoom{0.5, 1.0};
  double fill_value = 0.0;
  std::uint64_t seed = 0;

  // Ranges must be ordered, brightness and zoom strictly positive,
  // rotation_max_deg finite and nonnegative. Throws ArgumentError.
  void validate() const;
};

// Draws one augmented variant. Samples, in this order: horizontal shift,
// vertical shift, flip coin, rotation angle, zoom factor, brightness factor
// (all six are always drawn, so the stream layout is config-independent).
// Sampled pixel shifts are clamped to [-W, W] and [-H, H]. The affine
// pieces compose into a single transform, applied innermost-first as
// zoom, rotation, flip, shift, so the image is resampled exactly once;
// brightness is applied after the warp. Output shape equals input shape.
Tensor random_augment(const Tensor& img, const AugmentConfig& cfg, Rng& rng);

}  // namespace fswc

#endif
