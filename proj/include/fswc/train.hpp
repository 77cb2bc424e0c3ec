#ifndef FSWC_TRAIN_HPP
#define FSWC_TRAIN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fswc/augment.hpp"
#include "fswc/data.hpp"
#include "fswc/nn.hpp"

namespace fswc {

// Hyperparameters of one training run. Every random choice in the run
// (validation carve-out, per-epoch shuffles, augmentation draws) derives
// from `seed`; `augment->seed` is ignored here and only used by the
// standalone corpus-augmentation path.
struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double lr = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  std::optional<AugmentConfig> augment;  // training batches only

  // Throws ArgumentError on out-of-range fields
  // (epochs/batch_size >= 1, lr >= 0, momentum in [0,1),
  // 0 < val_fraction < 1).
  void validate() const;
};

struct EpochMetrics {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

// One record per completed epoch, in order.
struct MetricsHistory {
  std::vector<EpochMetrics> epochs;
};

struct Confusion {
  std::size_t tp = 0;  // label 1 predicted 1
  std::size_t fp = 0;  // label 0 predicted 1
  std::size_t fn = 0;  // label 1 predicted 0
  std::size_t tn = 0;  // label 0 predicted 0
  std::size_t total() const { return tp + fp + fn + tn; }
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  Confusion confusion;
};

// Mini-batch SGD with momentum on the binary cross-entropy. A stratified
// validation split (val_fraction) is carved once before epoch 1 and frozen;
// per-epoch metrics report the running training mean and the frozen
// validation set. Training mutates `m` in place and is bit-reproducible
// given (m, data, cfg).
// Throws TrainingError when a class is absent and DivergenceError (naming
// the 1-based epoch) when a non-finite loss appears.
MetricsHistory train(Model& m, const Dataset& data, const TrainConfig& cfg);

// Mean loss, accuracy and confusion counts with threshold 0.5
// (p >= 0.5 predicts class 1). Empty dataset throws DatasetError.
EvalResult evaluate(const Model& m, const Dataset& data);

struct Prediction {
  int label = 0;
  double probability = 0.0;
};

// Single-image classification; p = 0.5 ties resolve to class 1.
Prediction predict(const Model& m, const Tensor& img);

// Writes `epoch,train_loss,train_acc,val_loss,val_acc` then one 1-based row
// per epoch, floats at 6 decimal places, trailing newline. Throws IoError
// on write failure.
void write_metrics_csv(const MetricsHistory& h, const std::string& path);

}  // namespace fswc

#endif
