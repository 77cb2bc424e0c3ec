#ifndef FSWC_NN_HPP
#define FSWC_NN_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "fswc/tensor.hpp"

namespace fswc {

// Square-filter convolution hyperparameters.
struct ConvSpec {
  int filter_size = 1;   // f
  int stride = 1;        // s
  int padding = 0;       // p, zero padding on each spatial border
  int in_channels = 1;
  int out_channels = 1;  // number of filters
};

// Weights and bias of a conv or dense layer.
// Conv weights: [out_channels, f, f, in_channels]. Dense weights: [out, in].
// Bias: [out_channels] / [out].
struct LayerParams {
  Tensor w;
  Tensor b;
};

// Output extent of a convolution along one spatial axis:
// floor((n + 2p - f) / s) + 1. Throws ShapeError when the filter exceeds
// the padded input.
int conv_out_size(int n, int padding, int filter_size, int stride);

// Direct evaluation of the convolution as a weighted sum over each f x f x C
// input patch plus bias. Input H x W x C, output H' x W' x out_channels.
Tensor conv2d_forward(const Tensor& x, const ConvSpec& spec,
                      const LayerParams& params);

// Same contract as conv2d_forward, computed by lowering the input patches
// to a matrix (im2col) and performing one matrix multiply per layer.
Tensor conv2d_forward_fast(const Tensor& x, const ConvSpec& spec,
                           const LayerParams& params);

struct ConvGrads {
  Tensor x;  // gradient w.r.t. the input
  Tensor w;
  Tensor b;
};

// Exact partial derivatives of sum(grad_out * conv2d_forward(x)) with
// respect to x, w and b.
ConvGrads conv2d_backward(const Tensor& x, const ConvSpec& spec,
                          const LayerParams& params, const Tensor& grad_out);

// max(0, x) elementwise; the backward pass uses subgradient 0 at exactly 0.
Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

// Non-overlapping max pooling (stride = window) over the spatial axes of an
// H x W x C tensor; remainder rows/columns are truncated. `argmax` records,
// per output element in row-major order, the flat input index of the
// selected maximum (first occurrence in row-major scan on ties).
struct PoolResult {
  Tensor out;
  std::vector<std::size_t> argmax;
};
PoolResult maxpool_forward(const Tensor& x, int window);
Tensor maxpool_backward(const std::vector<int>& input_shape,
                        const PoolResult& forward, const Tensor& grad_out);

// out = W x + b on a rank-1 input.
Tensor dense_forward(const Tensor& x, const LayerParams& params);

struct DenseGrads {
  Tensor x;
  Tensor w;
  Tensor b;
};
DenseGrads dense_backward(const Tensor& x, const LayerParams& params,
                          const Tensor& grad_out);

// Logistic function, numerically stable for large |z|. The result is kept
// strictly inside (0, 1) even where the exponential saturates.
double sigmoid(double z);

// Binary cross-entropy -[y ln p + (1-y) ln(1-p)] with p clamped to
// [1e-12, 1 - 1e-12]. The label must be 0 or 1.
double bce_loss(double p, int label);

enum class LayerKind { conv, relu, maxpool, flatten, dense, sigmoid };

struct Layer {
  LayerKind kind = LayerKind::relu;
  ConvSpec conv{};        // conv layers only
  int pool_window = 0;    // maxpool layers only
  LayerParams params;     // conv and dense layers only
};

// Feed-forward stack over a fixed H x W x C input. Layer shapes must chain;
// the final layer must emit a single probability.
struct Model {
  std::array<int, 3> input_shape{0, 0, 0};
  std::vector<Layer> layers;
};

// The 40x40x3 binary weld-efficiency classifier: ten 3x3 stride-1 filters,
// ReLU, twenty 6x6 stride-2 filters, ReLU, flatten to 5780 features, one
// dense unit, sigmoid. Weights are He-normal (std = sqrt(2 / fan_in)) from
// the given seed, biases zero.
Model build_weld_classifier(std::uint64_t seed);

// Static shape chain: element 0 is the input shape, element i+1 the output
// shape of layer i. Throws ShapeError (naming the layer index) when layers
// do not chain.
std::vector<std::vector<int>> infer_shapes(const Model& m);

// Runs the stack and returns the output probability.
double model_forward(const Model& m, const Tensor& x);

// Gradients of bce_loss(model_forward(x), label) for every parameter
// tensor, plus the forward results that fall out of the same pass.
// `grads` is aligned with m.layers; entries for parameterless layers stay
// empty.
struct BackpropResult {
  double probability = 0.0;
  double loss = 0.0;
  std::vector<LayerParams> grads;
};
BackpropResult model_backward(const Model& m, const Tensor& x, int label);

// Momentum update: v <- momentum * v + grads; params <- params - lr * v.
void sgd_step(Tensor& params, const Tensor& grads, double lr, double momentum,
              Tensor& velocity);

}  // namespace fswc

#endif
