#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fswc/augment.hpp"
#include "fswc/data.hpp"
#include "fswc/error.hpp"
#include "fswc/model_io.hpp"
#include "fswc/nn.hpp"
#include "fswc/rng.hpp"
#include "fswc/train.hpp"

namespace fs = std::filesystem;

namespace {

// Bad flag values discovered after parsing; mapped to the usage exit code.
struct UsageFailure {
  std::string message;
};

void write_file(const fs::path& path,
                const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw fswc::IoError("cannot open " + path.string() + " for writing");
  }
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  f.flush();
  if (!f) throw fswc::IoError("write failed for " + path.string());
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw fswc::IoError("cannot create directory " + dir.string());
  }
}

std::string zero_padded(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

int run_synth(const std::string& out_dir, int per_class,
              std::uint64_t seed) {
  static const char* kClassNames[2] = {"lt80", "ge80"};
  for (int label = 0; label < 2; ++label) {
    const fs::path dir = fs::path(out_dir) / kClassNames[label];
    ensure_directory(dir);
    for (int i = 0; i < per_class; ++i) {
      const fswc::Sample s =
          fswc::synth_generate(label, fswc::mix_seed(seed, i));
      const std::string name = std::string("synth_") + kClassNames[label] +
                               "_" + zero_padded(i, 5) + ".ppm";
      write_file(dir / name, fswc::encode_ppm(s.image));
    }
  }
  std::printf("wrote %d images under %s\n", 2 * per_class, out_dir.c_str());
  return 0;
}

int run_augment(const std::string& in_path, const std::string& out_dir,
                int count, const fswc::AugmentConfig& cfg) {
  const fswc::Tensor img = fswc::load_image(in_path);
  ensure_directory(out_dir);
  fswc::Rng rng(cfg.seed);
  for (int k = 0; k < count; ++k) {
    const fswc::Tensor variant = fswc::random_augment(img, cfg, rng);
    const std::string name = "aug_" + zero_padded(k, 3) + ".ppm";
    write_file(fs::path(out_dir) / name, fswc::encode_ppm(variant));
  }
  std::printf("wrote %d augmented images under %s\n", count,
              out_dir.c_str());
  return 0;
}

int run_train(const std::string& data_dir, const std::string& model_path,
              const std::string& metrics_path,
              const fswc::TrainConfig& cfg) {
  std::vector<std::string> warnings;
  const fswc::Dataset dataset = fswc::load_dataset(data_dir, &warnings);
  for (const std::string& w : warnings) {
    std::cerr << "warning: skipped " << w << "\n";
  }

  fswc::Model model = fswc::build_weld_classifier(cfg.seed);
  const fswc::MetricsHistory history = fswc::train(model, dataset, cfg);
  fswc::save_model(model, model_path);
  fswc::write_metrics_csv(history, metrics_path);

  const fswc::EpochMetrics& last = history.epochs.back();
  std::printf(
      "epoch=%zu train_loss=%.6f train_acc=%.6f val_loss=%.6f "
      "val_acc=%.6f\n",
      history.epochs.size(), last.train_loss, last.train_acc, last.val_loss,
      last.val_acc);
  return 0;
}

int run_eval(const std::string& data_dir, const std::string& model_path) {
  const fswc::Model model = fswc::load_model(model_path);
  std::vector<std::string> warnings;
  const fswc::Dataset dataset = fswc::load_dataset(data_dir, &warnings);
  for (const std::string& w : warnings) {
    std::cerr << "warning: skipped " << w << "\n";
  }
  const fswc::EvalResult r = fswc::evaluate(model, dataset);
  std::printf("loss=%.6f accuracy=%.6f tp=%zu fp=%zu fn=%zu tn=%zu\n",
              r.loss, r.accuracy, r.confusion.tp, r.confusion.fp,
              r.confusion.fn, r.confusion.tn);
  return 0;
}

int run_predict(const std::string& model_path, const std::string& img_path) {
  const fswc::Model model = fswc::load_model(model_path);
  fswc::Tensor img = fswc::load_image(img_path);
  img = fswc::resize_bilinear(img, model.input_shape[0],
                              model.input_shape[1]);
  img = img.map([](double v) { return std::clamp(v, 0.0, 1.0); });
  const fswc::Prediction p = fswc::predict(model, img);
  std::printf("class=%s p=%.6f\n", p.label == 1 ? "ge80" : "lt80",
              p.probability);
  return 0;
}

template <typename F>
void validated(F&& check) {
  try {
    check();
  } catch (const fswc::ArgumentError& e) {
    throw UsageFailure{e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Weld microstructure classifier: synthetic data, augmentation, "
      "training, evaluation and prediction"};
  app.require_subcommand(1);
  int exit_code = 0;

  // synth
  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic two-class dataset of grain textures");
  std::string synth_out;
  int synth_per_class = 0;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "Output dataset directory")
      ->required();
  synth->add_option("--per-class", synth_per_class, "Images per class")
      ->required()
      ->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Base seed");
  synth->callback([&] {
    exit_code = run_synth(synth_out, synth_per_class, synth_seed);
  });

  // augment
  auto* augment = app.add_subcommand(
      "augment", "Write randomized affine variants of one image");
  std::string aug_in, aug_out;
  int aug_count = 9;
  fswc::AugmentConfig aug_cfg;
  double aug_width_shift = aug_cfg.width_shift[1];
  double aug_height_shift = aug_cfg.height_shift[1];
  bool aug_no_hflip = false;
  augment->add_option("--in", aug_in, "Input image (png/ppm/pgm)")
      ->required();
  augment->add_option("--out", aug_out, "Output directory")->required();
  augment->add_option("--count", aug_count, "Number of variants")
      ->check(CLI::PositiveNumber);
  augment->add_option("--seed", aug_cfg.seed, "Base seed");
  augment->add_option("--rotation-max", aug_cfg.rotation_max_deg,
                      "Max |rotation| in degrees");
  augment->add_option("--width-shift", aug_width_shift,
                      "Max |horizontal shift| in pixels");
  augment->add_option("--height-shift", aug_height_shift,
                      "Max |vertical shift| as a fraction of height");
  augment->add_option("--zoom-min", aug_cfg.zoom[0], "Zoom range lower end");
  augment->add_option("--zoom-max", aug_cfg.zoom[1], "Zoom range upper end");
  augment->add_option("--brightness-min", aug_cfg.brightness[0],
                      "Brightness range lower end");
  augment->add_option("--brightness-max", aug_cfg.brightness[1],
                      "Brightness range upper end");
  augment->add_option("--fill", aug_cfg.fill_value,
                      "Fill value for pixels mapped from outside");
  augment->add_flag("--no-hflip", aug_no_hflip,
                    "Disable random horizontal flips");
  augment->callback([&] {
    aug_cfg.width_shift = {-aug_width_shift, aug_width_shift};
    aug_cfg.height_shift = {-aug_height_shift, aug_height_shift};
    aug_cfg.allow_hflip = !aug_no_hflip;
    validated([&] { aug_cfg.validate(); });
    exit_code = run_augment(aug_in, aug_out, aug_count, aug_cfg);
  });

  // train
  auto* train = app.add_subcommand(
      "train", "Train the weld classifier on a two-class dataset");
  std::string train_data, train_model, train_metrics;
  fswc::TrainConfig train_cfg;
  bool train_augment = false;
  train->add_option("--data", train_data, "Dataset root (ge80/, lt80/)")
      ->required();
  train->add_option("--model", train_model, "Output model file")->required();
  train->add_option("--metrics", train_metrics, "Output metrics CSV")
      ->required();
  train->add_option("--epochs", train_cfg.epochs, "Training epochs");
  train->add_option("--batch", train_cfg.batch_size, "Mini-batch size");
  train->add_option("--lr", train_cfg.lr, "Learning rate");
  train->add_option("--momentum", train_cfg.momentum, "SGD momentum");
  train->add_option("--seed", train_cfg.seed,
                    "Seed for weights, splits and shuffles");
  train->add_option("--val-fraction", train_cfg.val_fraction,
                    "Fraction held out for validation");
  train->add_flag("--augment", train_augment,
                  "Augment training batches with default ranges");
  train->callback([&] {
    if (train_augment) train_cfg.augment = fswc::AugmentConfig{};
    validated([&] { train_cfg.validate(); });
    exit_code = run_train(train_data, train_model, train_metrics, train_cfg);
  });

  // eval
  auto* eval = app.add_subcommand(
      "eval", "Evaluate a saved model on a two-class dataset");
  std::string eval_data, eval_model;
  eval->add_option("--data", eval_data, "Dataset root (ge80/, lt80/)")
      ->required();
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->callback([&] { exit_code = run_eval(eval_data, eval_model); });

  // predict
  auto* predict = app.add_subcommand(
      "predict", "Classify a single microstructure image");
  std::string predict_model, predict_image;
  predict->add_option("--model", predict_model, "Model file")->required();
  predict->add_option("--image", predict_image, "Image to classify")
      ->required();
  predict->callback(
      [&] { exit_code = run_predict(predict_model, predict_image); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageFailure& e) {
    std::cerr << "usage error: " << e.message << "\n";
    return 2;
  } catch (const fswc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
