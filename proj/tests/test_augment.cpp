#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fswc/augment.hpp"
#include "fswc/error.hpp"
#include "fswc/rng.hpp"
#include "support.hpp"

using fswc::AffineTransform;
using fswc::affine_rotation;
using fswc::affine_scale;
using fswc::affine_shear;
using fswc::affine_translate;
using fswc::AugmentConfig;
using fswc::ArgumentError;
using fswc::compose;
using fswc::Rng;
using fswc::Tensor;
using fswc::warp;
using testsupport::random_tensor;

namespace {

constexpr double kPi = 3.14159265358979323846;

bool matrices_close(const AffineTransform& a, const AffineTransform& b,
                    double tol) {
  for (int i = 0; i < 4; ++i) {
    if (std::abs(a.m[i] - b.m[i]) > tol) return false;
  }
  return std::abs(a.t[0] - b.t[0]) <= tol && std::abs(a.t[1] - b.t[1]) <= tol;
}

bool tensors_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.flat(i) != b.flat(i)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rotation matrix basics") {
  const AffineTransform zero = affine_rotation(0.0);
  CHECK(matrices_close(zero, AffineTransform::identity(), 0.0));

  // alpha = pi/2 maps the unit x vector to the unit y vector.
  const auto p = affine_rotation(kPi / 2).apply({1.0, 0.0});
  CHECK(std::abs(p[0]) < 1e-12);
  CHECK(std::abs(p[1] - 1.0) < 1e-12);

  CHECK_THROWS_AS(affine_rotation(std::nan("")), ArgumentError);
}

TEST_CASE("rotation matrices are orthogonal with determinant one") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = rng.uniform(-10.0, 10.0);
    const AffineTransform r = affine_rotation(a);
    // R^T R = I
    const double rtrx = r.m[0] * r.m[0] + r.m[2] * r.m[2];
    const double rtry = r.m[1] * r.m[1] + r.m[3] * r.m[3];
    const double cross = r.m[0] * r.m[1] + r.m[2] * r.m[3];
    CHECK(std::abs(rtrx - 1.0) < 1e-12);
    CHECK(std::abs(rtry - 1.0) < 1e-12);
    CHECK(std::abs(cross) < 1e-12);
    CHECK(std::abs(r.det() - 1.0) < 1e-12);

    const double b = rng.uniform(-10.0, 10.0);
    CHECK(matrices_close(compose(affine_rotation(a), affine_rotation(b)),
                         affine_rotation(a + b), 1e-12));
  }
  CHECK(matrices_close(
      compose(affine_rotation(1.25), affine_rotation(-1.25)),
      AffineTransform::identity(), 1e-12));
}

TEST_CASE("scale matrix basics") {
  CHECK(matrices_close(affine_scale(1.0, 1.0), AffineTransform::identity(),
                       0.0));
  const auto p = affine_scale(2.0, 1.0).apply({1.0, 1.0});
  CHECK(p[0] == 2.0);
  CHECK(p[1] == 1.0);
  CHECK_THROWS_AS(affine_scale(0.0, 1.0), ArgumentError);
  CHECK_THROWS_AS(affine_scale(1.0, 0.0), ArgumentError);
}

TEST_CASE("shear matrix basics") {
  CHECK(matrices_close(affine_shear(0.0, 0.0), AffineTransform::identity(),
                       0.0));
  const auto p = affine_shear(0.5, 0.0).apply({0.0, 1.0});
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 1.0);
  // det = 1 - hx*hy = 0 is not invertible.
  CHECK_THROWS_AS(affine_shear(2.0, 0.5), ArgumentError);
}

TEST_CASE("translation and composition") {
  CHECK(matrices_close(affine_translate(0.0, 0.0),
                       AffineTransform::identity(), 0.0));
  CHECK(matrices_close(
      compose(affine_translate(3.0, 0.0), affine_translate(-3.0, 0.0)),
      AffineTransform::identity(), 0.0));
  CHECK_THROWS_AS(affine_translate(std::nan(""), 0.0), ArgumentError);

  const AffineTransform x = affine_shear(0.25, -0.5);
  CHECK(matrices_close(compose(AffineTransform::identity(), x), x, 0.0));
  CHECK(matrices_close(compose(x, AffineTransform::identity()), x, 0.0));
  CHECK(matrices_close(
      compose(affine_scale(2.0, 2.0), affine_scale(0.5, 0.5)),
      AffineTransform::identity(), 1e-12));
}

TEST_CASE("inverse undoes arbitrary invertible transforms") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    AffineTransform t =
        compose(affine_rotation(rng.uniform(-3.0, 3.0)),
                compose(affine_scale(rng.uniform(0.2, 3.0),
                                     rng.uniform(0.2, 3.0)),
                        affine_translate(rng.uniform(-20.0, 20.0),
                                         rng.uniform(-20.0, 20.0))));
    CHECK(matrices_close(compose(t, t.inverse()),
                         AffineTransform::identity(), 1e-10));
    CHECK(matrices_close(compose(t.inverse(), t),
                         AffineTransform::identity(), 1e-10));
  }

  AffineTransform singular;
  singular.m = {1.0, 2.0, 2.0, 4.0};
  CHECK(!singular.invertible());
  CHECK_THROWS_AS(singular.inverse(), ArgumentError);
}

TEST_CASE("warp with the identity transform is bit-exact") {
  Rng rng(23);
  const Tensor img = random_tensor({9, 7, 3}, rng);
  CHECK(tensors_equal(warp(img, AffineTransform::identity(), 0.0), img));
}

TEST_CASE("warp by pi/2 multiples equals index-permutation oracles") {
  Rng rng(29);
  const int n = 11;
  const Tensor img = random_tensor({n, n, 2}, rng);

  // Inverse mapping with the centered convention gives, for output (r, c):
  //   +pi/2: source (row, col) = (n-1-c, r)
  //   -pi/2: source (row, col) = (c, n-1-r)
  //    pi  : source (row, col) = (n-1-r, n-1-c)
  const Tensor quarter = warp(img, affine_rotation(kPi / 2), 0.0);
  const Tensor back_quarter = warp(img, affine_rotation(-kPi / 2), 0.0);
  const Tensor half = warp(img, affine_rotation(kPi), 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      for (int ch = 0; ch < 2; ++ch) {
        CHECK(quarter.at(r, c, ch) == img.at(n - 1 - c, r, ch));
        CHECK(back_quarter.at(r, c, ch) == img.at(c, n - 1 - r, ch));
        CHECK(half.at(r, c, ch) == img.at(n - 1 - r, n - 1 - c, ch));
      }
    }
  }

  // A quarter turn and back is the identity.
  const Tensor round_trip =
      warp(quarter, affine_rotation(-kPi / 2), 0.0);
  CHECK(tensors_equal(round_trip, img));
}

TEST_CASE("warp translation moves pixels and fills vacated space") {
  Rng rng(31);
  const int h = 5, w = 6;
  const Tensor img = random_tensor({h, w, 1}, rng, 0.25, 1.0);

  // Full-width shift evicts everything.
  const Tensor gone = warp(img, affine_translate(w, 0.0), 0.0);
  for (std::size_t i = 0; i < gone.size(); ++i) CHECK(gone.flat(i) == 0.0);

  // Custom fill value appears in vacated pixels.
  const Tensor shifted = warp(img, affine_translate(2.0, 0.0), 0.125);
  for (int r = 0; r < h; ++r) {
    CHECK(shifted.at(r, 0, 0) == 0.125);
    CHECK(shifted.at(r, 1, 0) == 0.125);
    for (int c = 2; c < w; ++c) {
      CHECK(shifted.at(r, c, 0) == img.at(r, c - 2, 0));
    }
  }
}

TEST_CASE("warp preserves shape and the [0,1] range") {
  Rng rng(37);
  const Tensor img = random_tensor({8, 13, 3}, rng);
  for (int trial = 0; trial < 40; ++trial) {
    const AffineTransform t = compose(
        affine_rotation(rng.uniform(-3.0, 3.0)),
        compose(affine_scale(rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0)),
                affine_translate(rng.uniform(-4.0, 4.0),
                                 rng.uniform(-4.0, 4.0))));
    const Tensor out = warp(img, t, rng.uniform(0.0, 1.0));
    CHECK(out.shape() == img.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out.flat(i) >= 0.0);
      CHECK(out.flat(i) <= 1.0);
    }
  }
}

TEST_CASE("flip_horizontal is an exact involution") {
  Rng rng(41);
  const Tensor img = random_tensor({6, 9, 3}, rng);
  const Tensor flipped = fswc::flip_horizontal(img);
  CHECK(tensors_equal(fswc::flip_horizontal(flipped), img));

  Tensor point = Tensor::zeros({4, 5, 1});
  point.at(2, 0, 0) = 1.0;
  const Tensor moved = fswc::flip_horizontal(point);
  CHECK(moved.at(2, 4, 0) == 1.0);
  CHECK(moved.at(2, 0, 0) == 0.0);

  // A centered mirror scale does the same thing through the warp path.
  CHECK(tensors_equal(flipped, warp(img, affine_scale(-1.0, 1.0), 0.0)));

  Tensor symmetric = Tensor::zeros({2, 3, 1});
  symmetric.at(0, 0, 0) = symmetric.at(0, 2, 0) = 0.5;
  symmetric.at(1, 0, 0) = symmetric.at(1, 2, 0) = 0.25;
  CHECK(tensors_equal(fswc::flip_horizontal(symmetric), symmetric));
}

TEST_CASE("adjust_brightness scales then clamps") {
  const Tensor img = Tensor::from_data({1, 2, 1}, {0.8, 1.0});
  const Tensor same = fswc::adjust_brightness(img, 1.0);
  CHECK(tensors_equal(same, img));

  const Tensor dimmed = fswc::adjust_brightness(img, 0.5);
  CHECK(dimmed.flat(0) == doctest::Approx(0.4).epsilon(1e-15));

  Tensor bright = img;
  for (int i = 0; i < 5; ++i) bright = fswc::adjust_brightness(bright, 0.9);
  for (std::size_t i = 0; i < bright.size(); ++i) {
    CHECK(bright.flat(i) <= 1.0);
  }

  CHECK_THROWS_AS(fswc::adjust_brightness(img, 0.0), ArgumentError);
  CHECK_THROWS_AS(fswc::adjust_brightness(img, -2.0), ArgumentError);
}

TEST_CASE("AugmentConfig validation") {
  AugmentConfig ok;
  CHECK_NOTHROW(ok.validate());

  AugmentConfig unordered;
  unordered.width_shift = {5.0, -5.0};
  CHECK_THROWS_AS(unordered.validate(), ArgumentError);

  AugmentConfig zero_zoom;
  zero_zoom.zoom = {0.0, 1.0};
  CHECK_THROWS_AS(zero_zoom.validate(), ArgumentError);

  AugmentConfig negative_brightness;
  negative_brightness.brightness = {-0.5, 1.0};
  CHECK_THROWS_AS(negative_brightness.validate(), ArgumentError);

  AugmentConfig negative_rotation;
  negative_rotation.rotation_max_deg = -1.0;
  CHECK_THROWS_AS(negative_rotation.validate(), ArgumentError);
}

TEST_CASE("random_augment honors the degenerate-config identity") {
  AugmentConfig cfg;
  cfg.width_shift = {0.0, 0.0};
  cfg.height_shift = {0.0, 0.0};
  cfg.allow_hflip = false;
  cfg.rotation_max_deg = 0.0;
  cfg.brightness = {1.0, 1.0};
  cfg.zoom = {1.0, 1.0};

  Rng data_rng(43);
  const Tensor img = random_tensor({10, 10, 3}, data_rng);
  Rng rng(7);
  CHECK(tensors_equal(fswc::random_augment(img, cfg, rng), img));
}

TEST_CASE("random_augment is deterministic and shape/range preserving") {
  const AugmentConfig cfg;  // stock ranges
  Rng data_rng(47);
  const Tensor img = random_tensor({40, 40, 3}, data_rng);

  Rng a(99), b(99);
  for (int i = 0; i < 9; ++i) {
    const Tensor va = fswc::random_augment(img, cfg, a);
    const Tensor vb = fswc::random_augment(img, cfg, b);
    CHECK(tensors_equal(va, vb));
    CHECK(va.shape() == img.shape());
    for (std::size_t j = 0; j < va.size(); ++j) {
      CHECK(va.flat(j) >= 0.0);
      CHECK(va.flat(j) <= 1.0);
    }
  }
}
