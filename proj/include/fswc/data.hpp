#ifndef FSWC_DATA_HPP
#define FSWC_DATA_HPP

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fswc/tensor.hpp"

namespace fswc {

// One labelled training image. Ingestion guarantees the canonical shape:
// 40 x 40 x 3, values in [0, 1]. Label 1 means welding efficiency >= 80%.
struct Sample {
  Tensor image;
  int label = 0;
  std::string source_id;
};

// class_counts[0] counts label-0 (lt80) samples, class_counts[1] label-1
// (ge80) samples; always consistent with `samples`.
struct Dataset {
  std::vector<Sample> samples;
  std::array<std::size_t, 2> class_counts{0, 0};
};

enum class ImageFormat { png8, ppm_p6, pgm_p5 };

// Identifies a supported container by its magic bytes. Throws FormatError
// for anything else.
ImageFormat detect_format(const std::vector<std::uint8_t>& bytes);

// Decodes an 8-bit image to an H x W x 3 tensor with values v/255.
// Grayscale sources replicate into all three channels. PNG support covers
// non-interlaced 8-bit gray and RGB only.
// Truncated or corrupt data throws DecodeError; unsupported bit depths,
// color types or maxvals throw FormatError.
Tensor decode_image(const std::vector<std::uint8_t>& bytes,
                    ImageFormat format);

// Reads and decodes a file, detecting the format from its contents.
// Unreadable paths throw IoError.
Tensor load_image(const std::string& path);

// Serializes an H x W x 3 tensor (values in [0, 1]) as binary PPM (P6),
// rounding each value to the nearest byte.
std::vector<std::uint8_t> encode_ppm(const Tensor& img);

// Corner-aligned bilinear resampling: output pixel r maps to source row
// r * (in_h - 1) / (out_h - 1) (and likewise for columns), so corners map
// to corners and a same-size resize returns the input bit-exactly.
// Target extents must be >= 1.
Tensor resize_bilinear(const Tensor& img, int out_h, int out_w);

// Loads `<root>/lt80/` (label 0) then `<root>/ge80/` (label 1). Every
// *.png / *.ppm / *.pgm file is decoded and resized to 40 x 40 x 3; samples
// are ordered by (label, filename). Files that fail to decode are skipped
// and reported through `warnings` (if given) as "path: reason" lines.
// A missing class directory throws LayoutError; zero decodable samples
// throws DatasetError.
Dataset load_dataset(const std::string& root,
                     std::vector<std::string>* warnings = nullptr);

// Deterministic synthetic grain texture standing in for a weld
// microstructure photo: a Voronoi tessellation of K seed cells, one gray
// level per cell, plus uniform noise in [-0.05, 0.05], clamped to [0, 1]
// and replicated across the three channels. Label 1 draws K in [30, 50]
// (fine grains), label 0 in [5, 12] (coarse grains). Identical
// (label, seed) pairs produce bit-identical samples. `cell_count`, when
// non-null, receives K.
Sample synth_generate(int label, std::uint64_t seed,
                      int* cell_count = nullptr);

// Stratified shuffle split: per class, floor(fraction * n + 0.5) samples
// (clamped to [1, n-1]) go to the first half, the rest to the second.
// Requires 0 < train_fraction < 1 (else ArgumentError) and at least two
// samples of each present class (else DatasetError).
std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction,
                                  std::uint64_t seed);

// One minibatch: x stacks N images as an N x 40 x 40 x 3 tensor, labels
// holds the N matching labels.
struct Batch {
  Tensor x;
  std::vector<int> labels;
};

// Splits the dataset into minibatches after a full reshuffle keyed by
// (seed, epoch); the final partial batch is emitted as-is. The
// concatenation of all batches is a permutation of the dataset.
std::vector<Batch> batches(const Dataset& d, int batch_size,
                           std::uint64_t seed, std::uint64_t epoch);

// Copies sample n of a stacked N x H x W x C batch back out as H x W x C.
Tensor batch_sample(const Tensor& x, int n);

}  // namespace fswc

#endif
