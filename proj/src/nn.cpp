#include "fswc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fswc/error.hpp"
#include "fswc/rng.hpp"

namespace fswc {

namespace {

// c[M x N] = a[M x K] * b[K x N], all row-major. Blocked over K so the
// touched slice of b stays cache-resident while every row of a passes over
// it; per output element the accumulation order is still ascending K.
void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
  constexpr int kBlock = 240;
  for (int l0 = 0; l0 < k; l0 += kBlock) {
    const int l1 = std::min(k, l0 + kBlock);
    for (int i = 0; i < m; ++i) {
      double* crow = c + static_cast<std::size_t>(i) * n;
      const double* arow = a + static_cast<std::size_t>(i) * k;
      for (int l = l0; l < l1; ++l) {
        const double aik = arow[l];
        const double* brow = b + static_cast<std::size_t>(l) * n;
        for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  }
}

struct ConvDims {
  int in_h, in_w, out_h, out_w;
};

ConvDims validate_conv(const Tensor& x, const ConvSpec& spec,
                       const LayerParams& params) {
  if (x.rank() != 3) {
    throw ShapeError("conv2d: input must be rank-3 HxWxC, got rank " +
                     std::to_string(x.rank()));
  }
  if (spec.filter_size < 1 || spec.stride < 1 || spec.padding < 0 ||
      spec.in_channels < 1 || spec.out_channels < 1) {
    throw ShapeError("conv2d: invalid spec");
  }
  if (x.shape()[2] != spec.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(x.shape()[2]) +
                     " channels, spec expects " +
                     std::to_string(spec.in_channels));
  }
  const std::vector<int> w_shape{spec.out_channels, spec.filter_size,
                                 spec.filter_size, spec.in_channels};
  if (params.w.shape() != w_shape) {
    throw ShapeError("conv2d: weight shape does not match spec");
  }
  if (params.b.shape() != std::vector<int>{spec.out_channels}) {
    throw ShapeError("conv2d: bias shape does not match spec");
  }
  ConvDims d;
  d.in_h = x.shape()[0];
  d.in_w = x.shape()[1];
  d.out_h = conv_out_size(d.in_h, spec.padding, spec.filter_size, spec.stride);
  d.out_w = conv_out_size(d.in_w, spec.padding, spec.filter_size, spec.stride);
  return d;
}

// Materializes the padded input patches as a [f*f*C, out_h*out_w] matrix.
// Row (i*f + j)*C + c matches the flat layout of the weight tensor, so the
// forward pass is a single matrix product.
std::vector<double> im2col(const Tensor& x, const ConvSpec& spec,
                           const ConvDims& d) {
  const int f = spec.filter_size;
  const int channels = spec.in_channels;
  const int cols = d.out_h * d.out_w;
  std::vector<double> patches(static_cast<std::size_t>(f) * f * channels *
                              cols);
  for (int i = 0; i < f; ++i) {
    for (int j = 0; j < f; ++j) {
      for (int c = 0; c < channels; ++c) {
        double* prow =
            patches.data() +
            static_cast<std::size_t>((i * f + j) * channels + c) * cols;
        int q = 0;
        for (int qr = 0; qr < d.out_h; ++qr) {
          const int row = qr * spec.stride + i - spec.padding;
          const bool row_ok = row >= 0 && row < d.in_h;
          for (int qc = 0; qc < d.out_w; ++qc, ++q) {
            const int col = qc * spec.stride + j - spec.padding;
            prow[q] = (row_ok && col >= 0 && col < d.in_w)
                          ? x.at(row, col, c)
                          : 0.0;
          }
        }
      }
    }
  }
  return patches;
}

// Transposed patch matrix, [out_h*out_w, f*f*C]: row q holds the receptive
// field under output position q, in the flat weight order. The backward
// pass walks it row by row, which turns every gradient product into a
// contiguous scaled-row accumulation.
std::vector<double> im2col_pos(const Tensor& x, const ConvSpec& spec,
                               const ConvDims& d) {
  const int f = spec.filter_size;
  const int channels = spec.in_channels;
  const std::size_t patch = static_cast<std::size_t>(f) * f * channels;
  std::vector<double> patches(patch * d.out_h * d.out_w);
  std::size_t q = 0;
  for (int qr = 0; qr < d.out_h; ++qr) {
    for (int qc = 0; qc < d.out_w; ++qc, ++q) {
      double* prow = patches.data() + q * patch;
      for (int i = 0; i < f; ++i) {
        const int row = qr * spec.stride + i - spec.padding;
        const bool row_ok = row >= 0 && row < d.in_h;
        for (int j = 0; j < f; ++j) {
          const int col = qc * spec.stride + j - spec.padding;
          double* dst = prow + static_cast<std::size_t>(i * f + j) * channels;
          if (row_ok && col >= 0 && col < d.in_w) {
            const double* src = x.data() +
                                (static_cast<std::size_t>(row) * d.in_w +
                                 col) *
                                    channels;
            std::copy(src, src + channels, dst);
          } else {
            std::fill(dst, dst + channels, 0.0);
          }
        }
      }
    }
  }
  return patches;
}

LayerParams he_init_conv(const ConvSpec& spec, Rng& rng) {
  LayerParams p;
  p.w = Tensor::zeros({spec.out_channels, spec.filter_size, spec.filter_size,
                       spec.in_channels});
  const double fan_in =
      static_cast<double>(spec.filter_size) * spec.filter_size *
      spec.in_channels;
  const double std_dev = std::sqrt(2.0 / fan_in);
  for (std::size_t i = 0; i < p.w.size(); ++i) {
    p.w.flat(i) = rng.normal() * std_dev;
  }
  p.b = Tensor::zeros({spec.out_channels});
  return p;
}

LayerParams he_init_dense(int out, int in, Rng& rng) {
  LayerParams p;
  p.w = Tensor::zeros({out, in});
  const double std_dev = std::sqrt(2.0 / static_cast<double>(in));
  for (std::size_t i = 0; i < p.w.size(); ++i) {
    p.w.flat(i) = rng.normal() * std_dev;
  }
  p.b = Tensor::zeros({out});
  return p;
}

std::vector<int> layer_output_shape(const Layer& layer,
                                    const std::vector<int>& in,
                                    std::size_t index) {
  const std::string where = "layer " + std::to_string(index) + ": ";
  switch (layer.kind) {
    case LayerKind::conv: {
      if (in.size() != 3 || in[2] != layer.conv.in_channels) {
        throw ShapeError(where + "conv expects HxWx" +
                         std::to_string(layer.conv.in_channels) + " input");
      }
      return {conv_out_size(in[0], layer.conv.padding, layer.conv.filter_size,
                            layer.conv.stride),
              conv_out_size(in[1], layer.conv.padding, layer.conv.filter_size,
                            layer.conv.stride),
              layer.conv.out_channels};
    }
    case LayerKind::relu:
      return in;
    case LayerKind::maxpool: {
      if (in.size() != 3) {
        throw ShapeError(where + "maxpool expects a rank-3 input");
      }
      if (layer.pool_window < 1 || in[0] < layer.pool_window ||
          in[1] < layer.pool_window) {
        throw ShapeError(where + "pool window larger than input");
      }
      return {in[0] / layer.pool_window, in[1] / layer.pool_window, in[2]};
    }
    case LayerKind::flatten: {
      std::size_t count = 1;
      for (int e : in) count *= static_cast<std::size_t>(e);
      return {static_cast<int>(count)};
    }
    case LayerKind::dense: {
      const auto& w_shape = layer.params.w.shape();
      if (w_shape.size() != 2) {
        throw ShapeError(where + "dense weights must be rank-2");
      }
      if (in.size() != 1 || in[0] != w_shape[1]) {
        throw ShapeError(where + "dense expects a length-" +
                         std::to_string(w_shape[1]) + " vector input");
      }
      return {w_shape[0]};
    }
    case LayerKind::sigmoid:
      if (in.size() != 1) {
        throw ShapeError(where + "sigmoid expects a rank-1 input");
      }
      return in;
  }
  throw ShapeError(where + "unknown layer kind");
}

}  // namespace

int conv_out_size(int n, int padding, int filter_size, int stride) {
  if (n < 1 || filter_size < 1 || stride < 1 || padding < 0) {
    throw ShapeError("conv_out_size: invalid arguments");
  }
  const int padded = n + 2 * padding;
  if (padded < filter_size) {
    throw ShapeError("conv_out_size: filter size " +
                     std::to_string(filter_size) + " exceeds padded extent " +
                     std::to_string(padded));
  }
  return (padded - filter_size) / stride + 1;
}

Tensor conv2d_forward(const Tensor& x, const ConvSpec& spec,
                      const LayerParams& params) {
  const ConvDims d = validate_conv(x, spec, params);
  const int f = spec.filter_size;
  Tensor out = Tensor::zeros({d.out_h, d.out_w, spec.out_channels});
  for (int qr = 0; qr < d.out_h; ++qr) {
    for (int qc = 0; qc < d.out_w; ++qc) {
      for (int k = 0; k < spec.out_channels; ++k) {
        double sum = params.b.at(k);
        for (int i = 0; i < f; ++i) {
          const int row = qr * spec.stride + i - spec.padding;
          if (row < 0 || row >= d.in_h) continue;
          for (int j = 0; j < f; ++j) {
            const int col = qc * spec.stride + j - spec.padding;
            if (col < 0 || col >= d.in_w) continue;
            for (int c = 0; c < spec.in_channels; ++c) {
              sum += params.w.at(k, i, j, c) * x.at(row, col, c);
            }
          }
        }
        out.at(qr, qc, k) = sum;
      }
    }
  }
  return out;
}

Tensor conv2d_forward_fast(const Tensor& x, const ConvSpec& spec,
                           const LayerParams& params) {
  const ConvDims d = validate_conv(x, spec, params);
  const int patch = spec.filter_size * spec.filter_size * spec.in_channels;
  const int cols = d.out_h * d.out_w;
  const std::vector<double> patches = im2col(x, spec, d);

  std::vector<double> out_mat(static_cast<std::size_t>(spec.out_channels) *
                              cols);
  matmul(params.w.data(), patches.data(), out_mat.data(), spec.out_channels,
         patch, cols);

  Tensor out = Tensor::zeros({d.out_h, d.out_w, spec.out_channels});
  for (int k = 0; k < spec.out_channels; ++k) {
    const double bias = params.b.at(k);
    const double* src = out_mat.data() + static_cast<std::size_t>(k) * cols;
    for (int q = 0; q < cols; ++q) {
      out.flat(static_cast<std::size_t>(q) * spec.out_channels + k) =
          src[q] + bias;
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& x, const ConvSpec& spec,
                          const LayerParams& params, const Tensor& grad_out) {
  const ConvDims d = validate_conv(x, spec, params);
  if (grad_out.shape() !=
      std::vector<int>{d.out_h, d.out_w, spec.out_channels}) {
    throw ShapeError("conv2d_backward: grad_out shape does not match output");
  }
  const int f = spec.filter_size;
  const std::size_t patch =
      static_cast<std::size_t>(f) * f * spec.in_channels;
  const int cols = d.out_h * d.out_w;
  const int m = spec.out_channels;
  const std::vector<double> patches = im2col_pos(x, spec, d);

  ConvGrads grads;
  grads.b = Tensor::zeros({m});
  grads.w = Tensor::zeros({m, f, f, spec.in_channels});
  std::vector<double> grad_patches(patch * cols, 0.0);

  // grad_out is channel-last, so the slice for one output position is
  // contiguous. One pass accumulates, per position q with upstream
  // gradients g_k: b_k += g_k, w_k += g_k * patch_q, patch-grad_q += g_k *
  // w_k. Both inner products are scaled-row updates over the patch length.
  const double* go = grad_out.data();
  for (int q = 0; q < cols; ++q) {
    const double* gq = go + static_cast<std::size_t>(q) * m;
    const double* prow = patches.data() + q * patch;
    double* gp_row = grad_patches.data() + q * patch;
    for (int k = 0; k < m; ++k) {
      const double g = gq[k];
      grads.b.flat(k) += g;
      const double* wrow = params.w.data() + k * patch;
      double* gw_row = grads.w.data() + k * patch;
      for (std::size_t l = 0; l < patch; ++l) {
        gw_row[l] += g * prow[l];
        gp_row[l] += g * wrow[l];
      }
    }
  }

  // Scatter the patch-space gradient back onto the input; padding cells
  // fall outside and are dropped.
  grads.x = Tensor::zeros(x.shape());
  std::size_t q = 0;
  for (int qr = 0; qr < d.out_h; ++qr) {
    for (int qc = 0; qc < d.out_w; ++qc, ++q) {
      const double* gp_row = grad_patches.data() + q * patch;
      for (int i = 0; i < f; ++i) {
        const int row = qr * spec.stride + i - spec.padding;
        if (row < 0 || row >= d.in_h) continue;
        for (int j = 0; j < f; ++j) {
          const int col = qc * spec.stride + j - spec.padding;
          if (col < 0 || col >= d.in_w) continue;
          const double* src =
              gp_row + static_cast<std::size_t>(i * f + j) * spec.in_channels;
          double* dst = grads.x.data() +
                        (static_cast<std::size_t>(row) * d.in_w + col) *
                            spec.in_channels;
          for (int c = 0; c < spec.in_channels; ++c) dst[c] += src[c];
        }
      }
    }
  }
  return grads;
}

Tensor relu_forward(const Tensor& x) {
  return x.map([](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  return Tensor::zip(x, grad_out,
                     [](double v, double g) { return v > 0.0 ? g : 0.0; });
}

PoolResult maxpool_forward(const Tensor& x, int window) {
  if (x.rank() != 3) {
    throw ShapeError("maxpool: input must be rank-3 HxWxC");
  }
  if (window < 1 || x.shape()[0] < window || x.shape()[1] < window) {
    throw ShapeError("maxpool: window larger than input");
  }
  const int out_h = x.shape()[0] / window;
  const int out_w = x.shape()[1] / window;
  const int channels = x.shape()[2];

  PoolResult result;
  result.out = Tensor::zeros({out_h, out_w, channels});
  result.argmax.resize(result.out.size());
  std::size_t e = 0;
  for (int qr = 0; qr < out_h; ++qr) {
    for (int qc = 0; qc < out_w; ++qc) {
      for (int c = 0; c < channels; ++c, ++e) {
        double best = x.at(qr * window, qc * window, c);
        std::size_t best_idx =
            (static_cast<std::size_t>(qr * window) * x.shape()[1] +
             qc * window) *
                channels +
            c;
        for (int i = 0; i < window; ++i) {
          for (int j = 0; j < window; ++j) {
            const int row = qr * window + i;
            const int col = qc * window + j;
            const double v = x.at(row, col, c);
            if (v > best) {
              best = v;
              best_idx =
                  (static_cast<std::size_t>(row) * x.shape()[1] + col) *
                      channels +
                  c;
            }
          }
        }
        result.out.at(qr, qc, c) = best;
        result.argmax[e] = best_idx;
      }
    }
  }
  return result;
}

Tensor maxpool_backward(const std::vector<int>& input_shape,
                        const PoolResult& forward, const Tensor& grad_out) {
  if (!grad_out.same_shape(forward.out)) {
    throw ShapeError("maxpool_backward: grad_out shape does not match output");
  }
  Tensor grad_x = Tensor::zeros(input_shape);
  for (std::size_t e = 0; e < forward.argmax.size(); ++e) {
    grad_x.flat(forward.argmax[e]) += grad_out.flat(e);
  }
  return grad_x;
}

Tensor dense_forward(const Tensor& x, const LayerParams& params) {
  if (x.rank() != 1 || params.w.rank() != 2 ||
      x.shape()[0] != params.w.shape()[1]) {
    throw ShapeError("dense: input width does not match weights");
  }
  const int out = params.w.shape()[0];
  const int in = params.w.shape()[1];
  if (params.b.shape() != std::vector<int>{out}) {
    throw ShapeError("dense: bias shape does not match weights");
  }
  Tensor y = Tensor::zeros({out});
  for (int o = 0; o < out; ++o) {
    const double* wrow = params.w.data() + static_cast<std::size_t>(o) * in;
    double sum = params.b.at(o);
    for (int i = 0; i < in; ++i) sum += wrow[i] * x.flat(i);
    y.at(o) = sum;
  }
  return y;
}

DenseGrads dense_backward(const Tensor& x, const LayerParams& params,
                          const Tensor& grad_out) {
  if (x.rank() != 1 || params.w.rank() != 2 ||
      x.shape()[0] != params.w.shape()[1]) {
    throw ShapeError("dense_backward: input width does not match weights");
  }
  const int out = params.w.shape()[0];
  const int in = params.w.shape()[1];
  if (grad_out.shape() != std::vector<int>{out}) {
    throw ShapeError("dense_backward: grad_out shape does not match output");
  }
  DenseGrads grads;
  grads.b = grad_out;
  grads.w = Tensor::zeros({out, in});
  grads.x = Tensor::zeros({in});
  for (int o = 0; o < out; ++o) {
    const double g = grad_out.flat(o);
    const double* wrow = params.w.data() + static_cast<std::size_t>(o) * in;
    double* gw_row = grads.w.data() + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) {
      gw_row[i] = g * x.flat(i);
      grads.x.flat(i) += wrow[i] * g;
    }
  }
  return grads;
}

double sigmoid(double z) {
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  // Keep strictly inside (0, 1) even where exp saturates.
  return std::clamp(p, 1e-300, 1.0 - 1e-16);
}

double bce_loss(double p, int label) {
  if (label != 0 && label != 1) {
    throw ArgumentError("bce_loss: label must be 0 or 1");
  }
  const double clamped = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return label == 1 ? -std::log(clamped) : -std::log(1.0 - clamped);
}

Model build_weld_classifier(std::uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.input_shape = {40, 40, 3};

  Layer conv1;
  conv1.kind = LayerKind::conv;
  conv1.conv = ConvSpec{3, 1, 0, 3, 10};
  conv1.params = he_init_conv(conv1.conv, rng);
  m.layers.push_back(std::move(conv1));

  m.layers.push_back(Layer{LayerKind::relu});

  Layer conv2;
  conv2.kind = LayerKind::conv;
  conv2.conv = ConvSpec{6, 2, 0, 10, 20};
  conv2.params = he_init_conv(conv2.conv, rng);
  m.layers.push_back(std::move(conv2));

  m.layers.push_back(Layer{LayerKind::relu});
  m.layers.push_back(Layer{LayerKind::flatten});

  Layer head;
  head.kind = LayerKind::dense;
  head.params = he_init_dense(1, 17 * 17 * 20, rng);
  m.layers.push_back(std::move(head));

  m.layers.push_back(Layer{LayerKind::sigmoid});
  return m;
}

std::vector<std::vector<int>> infer_shapes(const Model& m) {
  std::vector<std::vector<int>> chain;
  chain.push_back({m.input_shape[0], m.input_shape[1], m.input_shape[2]});
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    chain.push_back(layer_output_shape(m.layers[i], chain.back(), i));
  }
  return chain;
}

namespace {

Tensor apply_layer(const Layer& layer, const Tensor& in, std::size_t index,
                   PoolResult* pool_cache) {
  try {
    switch (layer.kind) {
      case LayerKind::conv:
        return conv2d_forward_fast(in, layer.conv, layer.params);
      case LayerKind::relu:
        return relu_forward(in);
      case LayerKind::maxpool: {
        PoolResult r = maxpool_forward(in, layer.pool_window);
        if (pool_cache) *pool_cache = r;
        return r.out;
      }
      case LayerKind::flatten:
        return in.reshape({static_cast<int>(in.size())});
      case LayerKind::dense:
        return dense_forward(in, layer.params);
      case LayerKind::sigmoid: {
        Tensor out = in;
        for (std::size_t i = 0; i < out.size(); ++i) {
          out.flat(i) = sigmoid(out.flat(i));
        }
        return out;
      }
    }
  } catch (const ShapeError& e) {
    throw ShapeError("layer " + std::to_string(index) + ": " + e.what());
  }
  throw ShapeError("layer " + std::to_string(index) + ": unknown kind");
}

void check_model_input(const Model& m, const Tensor& x) {
  const std::vector<int> expected{m.input_shape[0], m.input_shape[1],
                                  m.input_shape[2]};
  if (x.shape() != expected) {
    throw ShapeError("model input shape does not match the model");
  }
}

}  // namespace

double model_forward(const Model& m, const Tensor& x) {
  check_model_input(m, x);
  Tensor current = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    current = apply_layer(m.layers[i], current, i, nullptr);
  }
  if (current.size() != 1) {
    throw ShapeError("model output is not a single probability");
  }
  return current.flat(0);
}

BackpropResult model_backward(const Model& m, const Tensor& x, int label) {
  check_model_input(m, x);
  if (m.layers.empty() || m.layers.back().kind != LayerKind::sigmoid) {
    throw ArgumentError("model_backward: model must end with a sigmoid layer");
  }

  // Forward pass, caching each layer's input.
  std::vector<Tensor> inputs;
  inputs.reserve(m.layers.size());
  std::vector<PoolResult> pools(m.layers.size());
  Tensor current = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    inputs.push_back(current);
    current = apply_layer(m.layers[i], current, i, &pools[i]);
  }
  if (current.size() != 1) {
    throw ShapeError("model output is not a single probability");
  }

  BackpropResult result;
  result.probability = current.flat(0);
  result.loss = bce_loss(result.probability, label);
  result.grads.resize(m.layers.size());

  // d(bce(sigmoid(z), y))/dz = p - y handles the sigmoid head analytically.
  Tensor grad = Tensor::from_data(
      {1}, {result.probability - static_cast<double>(label)});

  for (std::size_t idx = m.layers.size() - 1; idx-- > 0;) {
    const Layer& layer = m.layers[idx];
    switch (layer.kind) {
      case LayerKind::conv: {
        ConvGrads g = conv2d_backward(inputs[idx], layer.conv, layer.params,
                                      grad);
        result.grads[idx] = LayerParams{std::move(g.w), std::move(g.b)};
        grad = std::move(g.x);
        break;
      }
      case LayerKind::relu:
        grad = relu_backward(inputs[idx], grad);
        break;
      case LayerKind::maxpool:
        grad = maxpool_backward(inputs[idx].shape(), pools[idx], grad);
        break;
      case LayerKind::flatten:
        grad = grad.reshape(inputs[idx].shape());
        break;
      case LayerKind::dense: {
        DenseGrads g = dense_backward(inputs[idx], layer.params, grad);
        result.grads[idx] = LayerParams{std::move(g.w), std::move(g.b)};
        grad = std::move(g.x);
        break;
      }
      case LayerKind::sigmoid:
        throw ArgumentError(
            "model_backward: sigmoid is only supported as the output layer");
    }
  }
  return result;
}

void sgd_step(Tensor& params, const Tensor& grads, double lr, double momentum,
              Tensor& velocity) {
  if (!std::isfinite(lr) || lr < 0.0) {
    throw ArgumentError("sgd_step: learning rate must be >= 0");
  }
  if (!std::isfinite(momentum) || momentum < 0.0 || momentum >= 1.0) {
    throw ArgumentError("sgd_step: momentum must be in [0, 1)");
  }
  if (!params.same_shape(grads) || !params.same_shape(velocity)) {
    throw ShapeError("sgd_step: parameter, gradient and velocity shapes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity.flat(i) = momentum * velocity.flat(i) + grads.flat(i);
    params.flat(i) -= lr * velocity.flat(i);
  }
}

}  // namespace fswc
