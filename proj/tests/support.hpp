#ifndef FSWC_TESTS_SUPPORT_HPP
#define FSWC_TESTS_SUPPORT_HPP

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fswc/rng.hpp"
#include "fswc/tensor.hpp"

namespace testsupport {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    const auto base = std::filesystem::temp_directory_path();
    do {
      path_ = base / ("fswc_test_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    } while (std::filesystem::exists(path_));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline void write_bytes(const std::filesystem::path& path,
                        const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<std::uint8_t> read_bytes(
    const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  return std::vector<std::uint8_t>{std::istreambuf_iterator<char>(f),
                                   std::istreambuf_iterator<char>()};
}

inline void fill_uniform(fswc::Tensor& t, fswc::Rng& rng, double lo,
                         double hi) {
  for (std::size_t i = 0; i < t.size(); ++i) t.flat(i) = rng.uniform(lo, hi);
}

inline fswc::Tensor random_tensor(const std::vector<int>& shape,
                                  fswc::Rng& rng, double lo = 0.0,
                                  double hi = 1.0) {
  fswc::Tensor t = fswc::Tensor::zeros(shape);
  fill_uniform(t, rng, lo, hi);
  return t;
}

// Central finite difference of a scalar functional with respect to one
// element of `t`, leaving `t` unchanged.
template <typename F>
double central_diff(F f, fswc::Tensor& t, std::size_t i, double h = 1e-5) {
  const double orig = t.flat(i);
  t.flat(i) = orig + h;
  const double up = f();
  t.flat(i) = orig - h;
  const double down = f();
  t.flat(i) = orig;
  return (up - down) / (2.0 * h);
}

// Gradient-check metric: relative error with an absolute floor so that
// near-zero pairs compare sanely.
inline double grad_rel_err(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace testsupport

#endif
