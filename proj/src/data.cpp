#include "fswc/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "fswc/error.hpp"
#include "fswc/rng.hpp"

namespace fswc {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G',
                                           0x0D, 0x0A, 0x1A, 0x0A};

bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 &&
         std::memcmp(bytes.data(), kPngSignature, 8) == 0;
}

// --- PNM (P5 / P6) ---------------------------------------------------------

struct PnmReader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  bool eof() const { return pos >= bytes.size(); }

  std::uint8_t byte() {
    if (eof()) throw DecodeError("pnm: truncated header");
    return bytes[pos++];
  }

  // Reads the next whitespace-delimited token, skipping '#' comments.
  // The delimiter after the token is not consumed.
  std::string token() {
    for (;;) {
      if (eof()) throw DecodeError("pnm: truncated header");
      const std::uint8_t c = bytes[pos];
      if (c == '#') {
        while (!eof() && bytes[pos] != '\n') ++pos;
        continue;
      }
      if (std::isspace(c)) {
        ++pos;
        continue;
      }
      break;
    }
    std::string tok;
    while (!eof() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
      tok.push_back(static_cast<char>(bytes[pos]));
      ++pos;
    }
    return tok;
  }

  int int_token(const char* what) {
    const std::string tok = token();
    for (char c : tok) {
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        throw DecodeError(std::string("pnm: malformed ") + what);
      }
    }
    if (tok.size() > 9) throw DecodeError(std::string("pnm: oversized ") + what);
    return std::atoi(tok.c_str());
  }
};

Tensor decode_pnm(const std::vector<std::uint8_t>& bytes, bool color) {
  PnmReader r{bytes};
  const std::string magic = r.token();
  const std::string expected = color ? "P6" : "P5";
  if (magic != expected) {
    throw FormatError("pnm: expected " + expected + " magic, found '" +
                      magic + "'");
  }
  const int w = r.int_token("width");
  const int h = r.int_token("height");
  const int maxval = r.int_token("maxval");
  if (w < 1 || h < 1) throw DecodeError("pnm: empty image");
  if (maxval != 255) {
    throw FormatError("pnm: only maxval 255 supported, found " +
                      std::to_string(maxval));
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (r.eof() || !std::isspace(r.bytes[r.pos])) {
    throw DecodeError("pnm: missing raster delimiter");
  }
  ++r.pos;
  const int channels = color ? 3 : 1;
  const std::size_t need =
      static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - r.pos < need) throw DecodeError("pnm: truncated raster");

  Tensor img = Tensor::zeros({h, w, 3});
  const std::uint8_t* raster = bytes.data() + r.pos;
  std::size_t s = 0;
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (color) {
        for (int c = 0; c < 3; ++c) {
          img.at(row, col, c) = raster[s++] / 255.0;
        }
      } else {
        const double v = raster[s++] / 255.0;
        img.at(row, col, 0) = v;
        img.at(row, col, 1) = v;
        img.at(row, col, 2) = v;
      }
    }
  }
  return img;
}

// --- PNG (8-bit gray / RGB, non-interlaced) --------------------------------

std::uint32_t read_u32_be(const std::vector<std::uint8_t>& b,
                          std::size_t pos) {
  if (pos + 4 > b.size()) throw DecodeError("png: truncated");
  return (static_cast<std::uint32_t>(b[pos]) << 24) |
         (static_cast<std::uint32_t>(b[pos + 1]) << 16) |
         (static_cast<std::uint32_t>(b[pos + 2]) << 8) |
         static_cast<std::uint32_t>(b[pos + 3]);
}

int paeth_predict(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

Tensor decode_png(const std::vector<std::uint8_t>& bytes) {
  if (!has_png_signature(bytes)) throw DecodeError("png: bad signature");

  std::size_t pos = 8;
  bool have_header = false;
  bool have_end = false;
  std::uint32_t width = 0, height = 0;
  int channels = 0;
  std::vector<std::uint8_t> compressed;

  while (!have_end) {
    const std::uint32_t len = read_u32_be(bytes, pos);
    if (pos + 12 + static_cast<std::size_t>(len) > bytes.size()) {
      throw DecodeError("png: truncated chunk");
    }
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const std::uint8_t* payload = bytes.data() + pos + 8;

    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, bytes.data() + pos + 4, len + 4);
    if (static_cast<std::uint32_t>(crc) != read_u32_be(bytes, pos + 8 + len)) {
      throw DecodeError("png: chunk crc mismatch");
    }

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw DecodeError("png: malformed header chunk");
      width = read_u32_be(bytes, pos + 8);
      height = read_u32_be(bytes, pos + 12);
      const int bit_depth = payload[8];
      const int color_type = payload[9];
      const int compression = payload[10];
      const int filter = payload[11];
      const int interlace = payload[12];
      if (bit_depth != 8) {
        throw FormatError("png: only 8-bit depth supported, found " +
                          std::to_string(bit_depth));
      }
      if (color_type != 0 && color_type != 2) {
        throw FormatError("png: only grayscale and RGB supported, found "
                          "color type " +
                          std::to_string(color_type));
      }
      if (compression != 0 || filter != 0) {
        throw FormatError("png: unsupported compression/filter method");
      }
      if (interlace != 0) {
        throw FormatError("png: interlaced images not supported");
      }
      if (width == 0 || height == 0) throw DecodeError("png: empty image");
      if (static_cast<std::uint64_t>(width) * height > 100000000ULL) {
        throw DecodeError("png: unreasonable dimensions");
      }
      channels = color_type == 2 ? 3 : 1;
      have_header = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      if (!have_header) throw DecodeError("png: data before header");
      compressed.insert(compressed.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      have_end = true;
    }
    // Other chunks (tEXt, gAMA, suggested palettes, ...) are skipped.

    pos += 12 + static_cast<std::size_t>(len);
  }
  if (!have_header) throw DecodeError("png: missing header chunk");
  if (compressed.empty()) throw DecodeError("png: missing image data");

  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  const std::size_t raw_size = (stride + 1) * height;
  std::vector<std::uint8_t> raw(raw_size);
  uLongf dest_len = static_cast<uLongf>(raw_size);
  const int rc = uncompress(raw.data(), &dest_len, compressed.data(),
                            static_cast<uLong>(compressed.size()));
  if (rc != Z_OK || dest_len != raw_size) {
    throw DecodeError("png: corrupt compressed stream");
  }

  // Undo per-scanline filtering.
  std::vector<std::uint8_t> pixels(stride * height);
  const int bpp = channels;
  for (std::uint32_t row = 0; row < height; ++row) {
    const std::uint8_t* src = raw.data() + row * (stride + 1);
    const int filter = src[0];
    std::uint8_t* cur = pixels.data() + row * stride;
    const std::uint8_t* up = row > 0 ? cur - stride : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      const int x = src[1 + i];
      const int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
      const int b = up ? up[i] : 0;
      const int c = (up && i >= static_cast<std::size_t>(bpp))
                        ? up[i - bpp]
                        : 0;
      int v;
      switch (filter) {
        case 0: v = x; break;
        case 1: v = x + a; break;
        case 2: v = x + b; break;
        case 3: v = x + (a + b) / 2; break;
        case 4: v = x + paeth_predict(a, b, c); break;
        default: throw DecodeError("png: unknown scanline filter");
      }
      cur[i] = static_cast<std::uint8_t>(v & 0xFF);
    }
  }

  Tensor img = Tensor::zeros(
      {static_cast<int>(height), static_cast<int>(width), 3});
  std::size_t s = 0;
  for (std::uint32_t row = 0; row < height; ++row) {
    for (std::uint32_t col = 0; col < width; ++col) {
      if (channels == 3) {
        for (int c = 0; c < 3; ++c) {
          img.at(row, col, c) = pixels[s++] / 255.0;
        }
      } else {
        const double v = pixels[s++] / 255.0;
        img.at(row, col, 0) = v;
        img.at(row, col, 1) = v;
        img.at(row, col, 2) = v;
      }
    }
  }
  return img;
}

// --- shared helpers --------------------------------------------------------

void fisher_yates(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::uint64_t j = rng.next_below(i);
    std::swap(idx[i - 1], idx[j]);
  }
}

constexpr int kCanonicalH = 40;
constexpr int kCanonicalW = 40;

}  // namespace

ImageFormat detect_format(const std::vector<std::uint8_t>& bytes) {
  if (has_png_signature(bytes)) return ImageFormat::png8;
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    if (bytes[1] == '6') return ImageFormat::ppm_p6;
    if (bytes[1] == '5') return ImageFormat::pgm_p5;
  }
  throw FormatError("unrecognized image format");
}

Tensor decode_image(const std::vector<std::uint8_t>& bytes,
                    ImageFormat format) {
  switch (format) {
    case ImageFormat::png8: return decode_png(bytes);
    case ImageFormat::ppm_p6: return decode_pnm(bytes, true);
    case ImageFormat::pgm_p5: return decode_pnm(bytes, false);
  }
  throw ArgumentError("decode_image: unknown format");
}

Tensor load_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f),
                                  std::istreambuf_iterator<char>()};
  if (f.bad()) throw IoError("read failed for " + path);
  return decode_image(bytes, detect_format(bytes));
}

std::vector<std::uint8_t> encode_ppm(const Tensor& img) {
  if (img.rank() != 3 || img.shape()[2] != 3) {
    throw ShapeError("encode_ppm: image must be H x W x 3");
  }
  const int h = img.shape()[0];
  const int w = img.shape()[1];
  const std::string header =
      "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(h) * w * 3);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(row, col, c), 0.0, 1.0);
        out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
      }
    }
  }
  return out;
}

Tensor resize_bilinear(const Tensor& img, int out_h, int out_w) {
  if (img.rank() != 3) {
    throw ShapeError("resize_bilinear: input must be rank-3 HxWxC");
  }
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("resize_bilinear: target extents must be >= 1");
  }
  const int in_h = img.shape()[0];
  const int in_w = img.shape()[1];
  const int channels = img.shape()[2];
  if (in_h == out_h && in_w == out_w) return img;

  Tensor out = Tensor::zeros({out_h, out_w, channels});
  for (int r = 0; r < out_h; ++r) {
    const double sy = out_h > 1
                          ? static_cast<double>(r) * (in_h - 1) / (out_h - 1)
                          : 0.0;
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double fy = sy - y0;
    for (int c_out = 0; c_out < out_w; ++c_out) {
      const double sx =
          out_w > 1 ? static_cast<double>(c_out) * (in_w - 1) / (out_w - 1)
                    : 0.0;
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const double fx = sx - x0;
      for (int c = 0; c < channels; ++c) {
        const double top =
            (1.0 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c);
        const double bottom =
            (1.0 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c);
        out.at(r, c_out, c) = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return out;
}

Dataset load_dataset(const std::string& root,
                     std::vector<std::string>* warnings) {
  namespace fs = std::filesystem;
  static const char* kClassDirs[2] = {"lt80", "ge80"};

  Dataset d;
  for (int label = 0; label < 2; ++label) {
    const fs::path dir = fs::path(root) / kClassDirs[label];
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
      throw LayoutError("dataset root is missing subdirectory '" +
                        std::string(kClassDirs[label]) + "'");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (ext == ".png" || ext == ".ppm" || ext == ".pgm") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) {
                return a.filename().string() < b.filename().string();
              });
    for (const auto& file : files) {
      const std::string id =
          std::string(kClassDirs[label]) + "/" + file.filename().string();
      Tensor img;
      try {
        img = load_image(file.string());
      } catch (const Error& e) {
        if (warnings) warnings->push_back(id + ": " + e.what());
        continue;
      }
      img = resize_bilinear(img, kCanonicalH, kCanonicalW);
      // Bilinear weights can overshoot by an ulp; pin the invariant.
      img = img.map([](double v) { return std::clamp(v, 0.0, 1.0); });
      d.samples.push_back(Sample{std::move(img), label, id});
      ++d.class_counts[label];
    }
  }
  if (d.samples.empty()) {
    throw DatasetError("no decodable images under " + root);
  }
  return d;
}

Sample synth_generate(int label, std::uint64_t seed, int* cell_count) {
  if (label != 0 && label != 1) {
    throw ArgumentError("synth_generate: label must be 0 or 1");
  }
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(label)));
  const int k = label == 1 ? static_cast<int>(rng.uniform_int(30, 50))
                           : static_cast<int>(rng.uniform_int(5, 12));

  struct Cell {
    double x, y, gray;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(k));
  for (Cell& c : cells) {
    c.x = rng.uniform(0.0, kCanonicalW);
    c.y = rng.uniform(0.0, kCanonicalH);
    c.gray = rng.uniform(0.15, 0.95);
  }

  Tensor img = Tensor::zeros({kCanonicalH, kCanonicalW, 3});
  for (int r = 0; r < kCanonicalH; ++r) {
    for (int col = 0; col < kCanonicalW; ++col) {
      const double px = col + 0.5;
      const double py = r + 0.5;
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const double dx = px - cells[i].x;
        const double dy = py - cells[i].y;
        const double dist = dx * dx + dy * dy;
        if (dist < best_d) {
          best_d = dist;
          best = i;
        }
      }
      const double v = std::clamp(
          cells[best].gray + rng.uniform(-0.05, 0.05), 0.0, 1.0);
      img.at(r, col, 0) = v;
      img.at(r, col, 1) = v;
      img.at(r, col, 2) = v;
    }
  }
  if (cell_count) *cell_count = k;

  Sample s;
  s.image = std::move(img);
  s.label = label;
  s.source_id = std::string("synth:") + (label == 1 ? "ge80" : "lt80") + ":" +
                std::to_string(seed);
  return s;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction,
                                  std::uint64_t seed) {
  if (!std::isfinite(train_fraction) || train_fraction <= 0.0 ||
      train_fraction >= 1.0) {
    throw ArgumentError(
        "split: train_fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    by_class[d.samples[i].label].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < 2) {
      throw DatasetError("split: class " + std::to_string(c) +
                         " has fewer than 2 samples");
    }
  }

  Rng rng(seed);
  std::pair<Dataset, Dataset> halves;
  for (int c = 0; c < 2; ++c) {
    auto& idx = by_class[c];
    const std::size_t n = idx.size();
    auto want = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(n) + 0.5));
    const std::size_t take = std::clamp<std::size_t>(want, 1, n - 1);
    fisher_yates(idx, rng);
    for (std::size_t i = 0; i < n; ++i) {
      Dataset& target = i < take ? halves.first : halves.second;
      target.samples.push_back(d.samples[idx[i]]);
      ++target.class_counts[c];
    }
  }
  return halves;
}

std::vector<Batch> batches(const Dataset& d, int batch_size,
                           std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size < 1) throw ArgumentError("batches: batch_size must be >= 1");
  std::vector<Batch> out;
  if (d.samples.empty()) return out;

  const auto& shape = d.samples.front().image.shape();
  for (const Sample& s : d.samples) {
    if (s.image.shape() != shape) {
      throw ShapeError("batches: samples disagree on image shape");
    }
  }
  const std::size_t per_image = d.samples.front().image.size();

  std::vector<std::size_t> perm(d.samples.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(mix_seed(seed, epoch));
  fisher_yates(perm, rng);

  for (std::size_t start = 0; start < perm.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t count =
        std::min<std::size_t>(batch_size, perm.size() - start);
    Batch b;
    b.x = Tensor::zeros(
        {static_cast<int>(count), shape[0], shape[1], shape[2]});
    b.labels.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const Sample& s = d.samples[perm[start + i]];
      std::copy(s.image.data(), s.image.data() + per_image,
                b.x.data() + i * per_image);
      b.labels.push_back(s.label);
    }
    out.push_back(std::move(b));
  }
  return out;
}

Tensor batch_sample(const Tensor& x, int n) {
  if (x.rank() != 4) {
    throw ShapeError("batch_sample: batch tensor must be rank-4");
  }
  if (n < 0 || n >= x.shape()[0]) {
    throw IndexError("batch_sample: sample index out of range");
  }
  const auto& s = x.shape();
  const std::size_t per_image =
      static_cast<std::size_t>(s[1]) * s[2] * s[3];
  std::vector<double> data(per_image);
  std::copy(x.data() + n * per_image, x.data() + (n + 1) * per_image,
            data.begin());
  return Tensor::from_data({s[1], s[2], s[3]}, std::move(data));
}

}  // namespace fswc
