#ifndef FSWC_MODEL_IO_HPP
#define FSWC_MODEL_IO_HPP

#include <string>

#include "fswc/nn.hpp"

namespace fswc {

// Model file layout (all integers little-endian):
//   magic "FSWC" | version u16 (currently 1) | header length u32 |
//   UTF-8 JSON header (input shape + per-layer descriptors) |
//   per parameter tensor, in layer order, w before b:
//     rank u32 | extents u32[rank] | payload f64[count]
// Loading a round-tripped model reproduces predictions bit-exactly.
void save_model(const Model& m, const std::string& path);

// Throws FormatError for bad magic, truncation, malformed headers or
// descriptor/payload mismatches; VersionError for an unsupported version;
// IoError when the file cannot be read.
Model load_model(const std::string& path);

}  // namespace fswc

#endif
