#include "fswc/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fswc/error.hpp"
#include "fswc/rng.hpp"

namespace fswc {

namespace {

// Stream tags keeping the run's derived RNG streams disjoint.
constexpr std::uint64_t kSplitStream = 0x73706C6974ULL;
constexpr std::uint64_t kAugmentStream = 0x6175676DULL;

struct Accumulator {
  bool active = false;
  Tensor w;
  Tensor b;
};

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ArgumentError("train: epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("train: batch_size must be >= 1");
  if (!std::isfinite(lr) || lr < 0.0) {
    throw ArgumentError("train: lr must be a finite value >= 0");
  }
  if (!std::isfinite(momentum) || momentum < 0.0 || momentum >= 1.0) {
    throw ArgumentError("train: momentum must be in [0, 1)");
  }
  if (!std::isfinite(val_fraction) || val_fraction <= 0.0 ||
      val_fraction >= 1.0) {
    throw ArgumentError(
        "train: val_fraction must lie strictly between 0 and 1");
  }
  if (augment) augment->validate();
}

MetricsHistory train(Model& m, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.samples.empty()) throw TrainingError("train: empty dataset");
  if (data.class_counts[0] == 0 || data.class_counts[1] == 0) {
    throw TrainingError("train: both classes must be present");
  }

  auto [train_set, val_set] =
      split(data, 1.0 - cfg.val_fraction, mix_seed(cfg.seed, kSplitStream));

  // Momentum buffers, one per parameter tensor.
  std::vector<Accumulator> velocity(m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const Layer& layer = m.layers[i];
    if (layer.kind == LayerKind::conv || layer.kind == LayerKind::dense) {
      velocity[i].active = true;
      velocity[i].w = Tensor::zeros(layer.params.w.shape());
      velocity[i].b = Tensor::zeros(layer.params.b.shape());
    }
  }

  MetricsHistory history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng aug_rng(mix_seed(mix_seed(cfg.seed, kAugmentStream),
                         static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    std::size_t correct = 0;

    for (const Batch& batch : batches(train_set, cfg.batch_size, cfg.seed,
                                      static_cast<std::uint64_t>(epoch))) {
      const int n = static_cast<int>(batch.labels.size());
      std::vector<Accumulator> grad_sum(m.layers.size());

      for (int s = 0; s < n; ++s) {
        Tensor img = batch_sample(batch.x, s);
        if (cfg.augment) img = random_augment(img, *cfg.augment, aug_rng);

        const BackpropResult bp = model_backward(m, img, batch.labels[s]);
        loss_sum += bp.loss;
        const int pred = bp.probability >= 0.5 ? 1 : 0;
        if (pred == batch.labels[s]) ++correct;

        for (std::size_t i = 0; i < m.layers.size(); ++i) {
          if (!velocity[i].active) continue;
          if (!grad_sum[i].active) {
            grad_sum[i].active = true;
            grad_sum[i].w = bp.grads[i].w;
            grad_sum[i].b = bp.grads[i].b;
          } else {
            grad_sum[i].w = Tensor::zip(grad_sum[i].w, bp.grads[i].w,
                                        [](double a, double g) { return a + g; });
            grad_sum[i].b = Tensor::zip(grad_sum[i].b, bp.grads[i].b,
                                        [](double a, double g) { return a + g; });
          }
        }
      }

      const double scale = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < m.layers.size(); ++i) {
        if (!grad_sum[i].active) continue;
        grad_sum[i].w = grad_sum[i].w.map([scale](double g) { return g * scale; });
        grad_sum[i].b = grad_sum[i].b.map([scale](double g) { return g * scale; });
        sgd_step(m.layers[i].params.w, grad_sum[i].w, cfg.lr, cfg.momentum,
                 velocity[i].w);
        sgd_step(m.layers[i].params.b, grad_sum[i].b, cfg.lr, cfg.momentum,
                 velocity[i].b);
      }
    }

    EpochMetrics metrics;
    metrics.train_loss = loss_sum / static_cast<double>(train_set.samples.size());
    metrics.train_acc =
        static_cast<double>(correct) / static_cast<double>(train_set.samples.size());
    const EvalResult val = evaluate(m, val_set);
    metrics.val_loss = val.loss;
    metrics.val_acc = val.accuracy;

    if (!std::isfinite(metrics.train_loss) || !std::isfinite(metrics.val_loss)) {
      throw DivergenceError(epoch + 1, "train: non-finite loss at epoch " +
                                           std::to_string(epoch + 1));
    }
    history.epochs.push_back(metrics);
  }
  return history;
}

EvalResult evaluate(const Model& m, const Dataset& data) {
  if (data.samples.empty()) throw DatasetError("evaluate: empty dataset");
  EvalResult result;
  double loss_sum = 0.0;
  for (const Sample& s : data.samples) {
    const double p = model_forward(m, s.image);
    loss_sum += bce_loss(p, s.label);
    const int pred = p >= 0.5 ? 1 : 0;
    if (s.label == 1) {
      pred == 1 ? ++result.confusion.tp : ++result.confusion.fn;
    } else {
      pred == 1 ? ++result.confusion.fp : ++result.confusion.tn;
    }
  }
  const double n = static_cast<double>(data.samples.size());
  result.loss = loss_sum / n;
  result.accuracy =
      static_cast<double>(result.confusion.tp + result.confusion.tn) / n;
  return result;
}

Prediction predict(const Model& m, const Tensor& img) {
  Prediction p;
  p.probability = model_forward(m, img);
  p.label = p.probability >= 0.5 ? 1 : 0;
  return p;
}

void write_metrics_csv(const MetricsHistory& h, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char row[160];
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    const EpochMetrics& e = h.epochs[i];
    std::snprintf(row, sizeof(row), "%zu,%.6f,%.6f,%.6f,%.6f\n", i + 1,
                  e.train_loss, e.train_acc, e.val_loss, e.val_acc);
    f << row;
  }
  f.flush();
  if (!f) throw IoError("write failed for " + path);
}

}  // namespace fswc
