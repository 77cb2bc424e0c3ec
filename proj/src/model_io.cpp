#include "fswc/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include <json.hpp>

#include "fswc/error.hpp"

namespace fswc {

namespace {

using json = nlohmann::json;

constexpr char kMagic[4] = {'F', 'S', 'W', 'C'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

struct Cursor {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (bytes.size() - pos < n) throw FormatError("model file truncated");
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(
        bytes[pos] | (static_cast<std::uint16_t>(bytes[pos + 1]) << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    }
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    }
    pos += 8;
    return std::bit_cast<double>(bits);
  }
};

bool has_params(const Layer& layer) {
  return layer.kind == LayerKind::conv || layer.kind == LayerKind::dense;
}

json describe_layer(const Layer& layer) {
  switch (layer.kind) {
    case LayerKind::conv:
      return {{"kind", "conv"},
              {"filter_size", layer.conv.filter_size},
              {"stride", layer.conv.stride},
              {"padding", layer.conv.padding},
              {"in_channels", layer.conv.in_channels},
              {"out_channels", layer.conv.out_channels}};
    case LayerKind::relu:
      return {{"kind", "relu"}};
    case LayerKind::maxpool:
      return {{"kind", "maxpool"}, {"window", layer.pool_window}};
    case LayerKind::flatten:
      return {{"kind", "flatten"}};
    case LayerKind::dense:
      return {{"kind", "dense"},
              {"in", layer.params.w.shape()[1]},
              {"out", layer.params.w.shape()[0]}};
    case LayerKind::sigmoid:
      return {{"kind", "sigmoid"}};
  }
  throw ArgumentError("save_model: unknown layer kind");
}

void write_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (int e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
  for (std::size_t i = 0; i < t.size(); ++i) put_f64(out, t.flat(i));
}

Tensor read_tensor(Cursor& c, const std::vector<int>& expected_shape) {
  const std::uint32_t rank = c.u32();
  if (rank < 1 || rank > 4) {
    throw FormatError("model file declares an unsupported tensor rank");
  }
  std::vector<int> shape(rank);
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t e = c.u32();
    if (e == 0 || e > 0x7FFFFFFF) {
      throw FormatError("model file declares an invalid tensor extent");
    }
    shape[i] = static_cast<int>(e);
    count *= e;
  }
  if (shape != expected_shape) {
    throw FormatError(
        "model file tensor shape disagrees with its layer descriptor");
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = c.f64();
  return Tensor::from_data(shape, std::move(data));
}

int require_int(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_number_integer()) {
    throw FormatError(std::string("model header is missing field '") + key +
                      "'");
  }
  return obj[key].get<int>();
}

}  // namespace

void save_model(const Model& m, const std::string& path) {
  json header;
  header["input_shape"] = {m.input_shape[0], m.input_shape[1],
                           m.input_shape[2]};
  header["layers"] = json::array();
  for (const Layer& layer : m.layers) {
    header["layers"].push_back(describe_layer(layer));
  }
  const std::string header_text = header.dump();

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out.insert(out.end(), header_text.begin(), header_text.end());
  for (const Layer& layer : m.layers) {
    if (!has_params(layer)) continue;
    write_tensor(out, layer.params.w);
    write_tensor(out, layer.params.b);
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  f.flush();
  if (!f) throw IoError("write failed for " + path);
}

Model load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f),
                                  std::istreambuf_iterator<char>()};
  if (f.bad()) throw IoError("read failed for " + path);

  Cursor c{bytes};
  c.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a model file (bad magic)");
  }
  c.pos = 4;
  const std::uint16_t version = c.u16();
  if (version != kVersion) {
    throw VersionError("unsupported model file version " +
                       std::to_string(version));
  }
  const std::uint32_t header_len = c.u32();
  c.need(header_len);
  json header;
  try {
    header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(c.pos),
                         bytes.begin() +
                             static_cast<std::ptrdiff_t>(c.pos + header_len));
  } catch (const json::parse_error&) {
    throw FormatError("model header is not valid JSON");
  }
  c.pos += header_len;

  if (!header.contains("input_shape") || !header["input_shape"].is_array() ||
      header["input_shape"].size() != 3 || !header.contains("layers") ||
      !header["layers"].is_array()) {
    throw FormatError("model header is missing required fields");
  }

  Model m;
  for (int i = 0; i < 3; ++i) {
    const auto& e = header["input_shape"][i];
    if (!e.is_number_integer() || e.get<int>() < 1) {
      throw FormatError("model header declares an invalid input shape");
    }
    m.input_shape[static_cast<std::size_t>(i)] = e.get<int>();
  }

  for (const json& desc : header["layers"]) {
    if (!desc.is_object() || !desc.contains("kind") ||
        !desc["kind"].is_string()) {
      throw FormatError("model header contains a malformed layer descriptor");
    }
    const std::string kind = desc["kind"].get<std::string>();
    Layer layer;
    if (kind == "conv") {
      layer.kind = LayerKind::conv;
      layer.conv.filter_size = require_int(desc, "filter_size");
      layer.conv.stride = require_int(desc, "stride");
      layer.conv.padding = require_int(desc, "padding");
      layer.conv.in_channels = require_int(desc, "in_channels");
      layer.conv.out_channels = require_int(desc, "out_channels");
      if (layer.conv.filter_size < 1 || layer.conv.stride < 1 ||
          layer.conv.padding < 0 || layer.conv.in_channels < 1 ||
          layer.conv.out_channels < 1) {
        throw FormatError("model header declares an invalid conv layer");
      }
      layer.params.w = read_tensor(
          c, {layer.conv.out_channels, layer.conv.filter_size,
              layer.conv.filter_size, layer.conv.in_channels});
      layer.params.b = read_tensor(c, {layer.conv.out_channels});
    } else if (kind == "relu") {
      layer.kind = LayerKind::relu;
    } else if (kind == "maxpool") {
      layer.kind = LayerKind::maxpool;
      layer.pool_window = require_int(desc, "window");
      if (layer.pool_window < 1) {
        throw FormatError("model header declares an invalid pool window");
      }
    } else if (kind == "flatten") {
      layer.kind = LayerKind::flatten;
    } else if (kind == "dense") {
      layer.kind = LayerKind::dense;
      const int in = require_int(desc, "in");
      const int out = require_int(desc, "out");
      if (in < 1 || out < 1) {
        throw FormatError("model header declares an invalid dense layer");
      }
      layer.params.w = read_tensor(c, {out, in});
      layer.params.b = read_tensor(c, {out});
    } else if (kind == "sigmoid") {
      layer.kind = LayerKind::sigmoid;
    } else {
      throw FormatError("model header names an unknown layer kind '" + kind +
                        "'");
    }
    m.layers.push_back(std::move(layer));
  }

  if (c.pos != bytes.size()) {
    throw FormatError("model file has trailing data");
  }
  return m;
}

}  // namespace fswc
