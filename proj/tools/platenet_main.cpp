// platenet: train and run the surface-quality classifier for plated
// abrasive part images.
//
// Exit codes: 0 success (or ok part), 1 operational error, 2 refused
// precondition, 3 bad-part gate from `predict`.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "platenet/augment.hpp"
#include "platenet/dataset.hpp"
#include "platenet/metrics.hpp"
#include "platenet/model.hpp"
#include "platenet/trainer.hpp"

namespace fs = std::filesystem;
using namespace platenet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitRefused = 2;
constexpr int kExitBadPart = 3;

struct AugmentFlags {
  AugmentConfig config;  // starts at the training defaults
  bool no_hflip = false;
  bool no_vflip = false;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--rotation-range", config.rotation_range,
                    "Rotation range in degrees (symmetric about 0)");
    cmd->add_option("--width-shift", config.width_shift_range,
                    "Horizontal shift range as a fraction of width");
    cmd->add_option("--height-shift", config.height_shift_range,
                    "Vertical shift range as a fraction of height");
    cmd->add_option("--shear-range", config.shear_range, "Shear range in degrees");
    cmd->add_option("--zoom-range", config.zoom_range, "Zoom range around 1.0");
    cmd->add_option("--brightness-min", config.brightness_lo, "Brightness factor minimum");
    cmd->add_option("--brightness-max", config.brightness_hi, "Brightness factor maximum");
    cmd->add_flag("--no-horizontal-flip", no_hflip, "Disable horizontal flips");
    cmd->add_flag("--no-vertical-flip", no_vflip, "Disable vertical flips");
  }

  AugmentConfig resolve() const {
    AugmentConfig cfg = config;
    cfg.horizontal_flip = !no_hflip;
    cfg.vertical_flip = !no_vflip;
    return cfg;
  }
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string loss_str(float v) {
  return std::isinf(v) ? "inf" : fmt("%.5f", v);
}

int cmd_synth(int n_ok, int n_bad, const std::string& out, uint64_t seed, int image_size,
              bool force) {
  const fs::path out_root(out);
  if (fs::exists(out_root) && !fs::is_empty(out_root) && !force) {
    std::cerr << "refusing to write into non-empty directory " << out_root
              << " (use --force to override)\n";
    return kExitRefused;
  }
  if (n_ok == 0 && n_bad == 0) {
    std::cerr << "warning: generating an empty dataset\n";
  }
  SynthConfig config{n_ok, n_bad, image_size, seed};
  const SynthCounts counts = synthesize(config, out_root);
  std::cout << "ok:  " << counts.train_ok << " train + " << counts.test_ok << " test\n";
  std::cout << "bad: " << counts.train_bad << " train + " << counts.test_bad << " test\n";
  std::cout << "wrote " << (out_root / "manifest.tsv").string() << "\n";
  return kExitOk;
}

int cmd_train(const std::string& data_root, const std::string& model_path,
              const std::string& history_path, int epochs, int batch_size, uint64_t seed,
              double val_fraction, float threshold, int image_size, float learning_rate,
              const AugmentConfig& augment) {
  DatasetIndex index = scan(fs::path(data_root) / "train");
  index = split(std::move(index), val_fraction, seed);
  if (index.skipped_files > 0) {
    std::cerr << "warning: skipped " << index.skipped_files << " unsupported file(s)\n";
  }

  LoaderOptions train_opts;
  train_opts.batch_size = batch_size;
  train_opts.image_height = image_size;
  train_opts.image_width = image_size;
  train_opts.shuffle = true;
  train_opts.augment = augment;
  train_opts.seed = seed;
  LoaderOptions val_opts = train_opts;
  val_opts.shuffle = false;
  val_opts.augment = std::nullopt;

  DirectoryLoader train_loader(index, Split::kTraining, train_opts);
  DirectoryLoader val_loader(index, Split::kValidation, val_opts);
  std::cout << "Found " << train_loader.example_count()
            << " images belonging to 2 classes.\n";
  std::cout << "Found " << val_loader.example_count()
            << " images belonging to 2 classes.\n";

  Model model = Model::build(ModelSpec::standard(image_size), seed);

  TrainConfig config;
  config.epochs = epochs;
  config.seed = seed;
  config.checkpoint_path = model_path;
  config.threshold = threshold;
  config.adam.learning_rate = learning_rate;

  const size_t steps = train_loader.batches_per_epoch();
  const auto log_epoch = [&](const EpochRecord& r, float previous_best) {
    std::cout << "Epoch " << r.epoch << "/" << epochs << "\n";
    if (r.checkpointed) {
      std::cout << "Epoch " << r.epoch << ": val_loss improved from "
                << loss_str(previous_best) << " to " << loss_str(r.val_loss)
                << ", saving model to " << model_path << "\n";
    } else {
      std::cout << "Epoch " << r.epoch << ": val_loss did not improve from "
                << loss_str(previous_best) << "\n";
    }
    std::cout << steps << "/" << steps << " - loss: " << fmt("%.4f", r.train_loss)
              << " - accuracy: " << fmt("%.4f", r.train_accuracy)
              << " - val_loss: " << fmt("%.4f", r.val_loss)
              << " - val_accuracy: " << fmt("%.4f", r.val_accuracy) << "\n";
  };

  TrainResult result = train(model, train_loader, val_loader, config, log_epoch);
  export_history(result.history, history_path);
  std::cout << "best checkpoint: " << model_path << "\n";
  std::cout << "history: " << history_path << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& data_root, const std::string& model_path,
                 float threshold, int batch_size, bool tsv) {
  Model model = Model::load(model_path);
  DatasetIndex index = scan(fs::path(data_root) / "test");

  LoaderOptions opts;
  opts.batch_size = batch_size;
  opts.image_height = model.spec().height;
  opts.image_width = model.spec().width;
  opts.shuffle = false;
  DirectoryLoader loader(index, std::nullopt, opts);
  std::cout << "Found " << loader.example_count() << " images belonging to 2 classes.\n";

  std::vector<int> y_true;
  std::vector<float> probs;
  loader.start_epoch(0);
  while (auto batch = loader.next()) {
    const Tensor out = model.forward(batch->inputs, Mode::kInference);
    for (size_t i = 0; i < out.size(); ++i) {
      probs.push_back(out[i]);
      y_true.push_back(static_cast<int>(batch->labels[i]));
    }
  }
  Tensor prob_tensor({static_cast<int>(probs.size()), 1}, std::vector<float>(probs));
  const std::vector<int> y_pred = threshold_predict(prob_tensor, threshold);
  const ConfusionMatrix cm = confusion(y_true, y_pred);
  const ClassificationReport rep = report(cm);
  std::cout << render_confusion(cm) << "\n";
  std::cout << (tsv ? render_report_tsv(rep) : render_report(rep));
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& image_path,
                float threshold) {
  Model model = Model::load(model_path);
  const Tensor raw = load_image(image_path, model.spec().height, model.spec().width);
  const Tensor scaled = passthrough(raw);
  const Tensor batch =
      scaled.reshaped({1, model.spec().height, model.spec().width, model.spec().channels});
  const Tensor out = model.forward(batch, Mode::kInference);
  const float p = out[0];
  const bool bad = p >= threshold;
  std::cout << "probability " << fmt("%.4f", p) << " -> " << (bad ? "bad" : "ok") << "\n";
  return bad ? kExitBadPart : kExitOk;
}

int cmd_summary(int image_size, uint64_t seed) {
  const Model model = Model::build(ModelSpec::standard(image_size), seed);
  std::cout << model.summary().to_string();
  return kExitOk;
}

int cmd_inspect(const std::string& image_path, int row, int col, int size, int image_size) {
  const Tensor raw = load_image(image_path, image_size, image_size);
  if (row < 0 || col < 0 || size < 1 || row + size > image_size || col + size > image_size) {
    std::cerr << "patch " << size << "x" << size << " at (" << row << "," << col
              << ") is out of bounds for a " << image_size << "x" << image_size
              << " image\n";
    return kExitError;
  }
  const Tensor scaled = passthrough(raw);
  for (int r = row; r < row + size; ++r) {
    for (int c = col; c < col + size; ++c) {
      if (c > col) std::cout << " ";
      std::cout << fmt("%.2f", scaled.at(r, c, 0));
    }
    std::cout << "\n";
  }
  return kExitOk;
}

int cmd_history_export(const std::string& history_path, const std::string& out_path) {
  const History history = parse_history(history_path);
  if (out_path.empty()) {
    char buf[160];
    std::cout << "epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc\tcheckpointed\n";
    for (const EpochRecord& r : history.records) {
      std::snprintf(buf, sizeof(buf), "%d\t%.6g\t%.6g\t%.6g\t%.6g\t%d\n", r.epoch,
                    r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy,
                    r.checkpointed ? 1 : 0);
      std::cout << buf;
    }
  } else {
    export_history(history, out_path);
    std::cout << "wrote " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surface-quality CNN for plated abrasive part images"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read defaults from a key=value file");

  // Shared defaults.
  uint64_t seed = 123;
  int image_size = 300;
  int batch_size = 64;
  float threshold = 0.5f;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  int synth_ok = 0, synth_bad = 0;
  std::string synth_out;
  bool synth_force = false;
  synth->add_option("--ok", synth_ok, "Number of ok images")->required();
  synth->add_option("--bad", synth_bad, "Number of bad images")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--image-size", image_size, "Square image size in pixels");
  synth->add_flag("--force", synth_force, "Write into a non-empty directory");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the classifier");
  std::string train_data, train_model = "model.pnw", train_history = "history.tsv";
  int epochs = 20;
  double val_fraction = 0.2;
  float learning_rate = 1e-3f;
  AugmentFlags augment_flags;
  train_cmd->add_option("--data", train_data, "Dataset root (contains train/)")->required();
  train_cmd->add_option("--model", train_model, "Checkpoint output path (.pnw)");
  train_cmd->add_option("--history", train_history, "History table output path");
  train_cmd->add_option("--epochs", epochs, "Training epochs");
  train_cmd->add_option("--batch-size", batch_size, "Batch size");
  train_cmd->add_option("--seed", seed, "Random seed");
  train_cmd->add_option("--val-fraction", val_fraction, "Validation fraction of train/");
  train_cmd->add_option("--threshold", threshold, "Accuracy threshold");
  train_cmd->add_option("--image-size", image_size, "Square model input size");
  train_cmd->add_option("--learning-rate", learning_rate, "Adam learning rate");
  augment_flags.add_options(train_cmd);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on test/");
  std::string eval_data, eval_model;
  bool eval_tsv = false;
  eval_cmd->add_option("--data", eval_data, "Dataset root (contains test/)")->required();
  eval_cmd->add_option("--model", eval_model, "Checkpoint path")->required();
  eval_cmd->add_option("--threshold", threshold, "Decision threshold");
  eval_cmd->add_option("--batch-size", batch_size, "Batch size");
  eval_cmd->add_flag("--tsv", eval_tsv, "Print the report as tab-separated values");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Classify a single image");
  std::string predict_model, predict_image;
  predict_cmd->add_option("--model", predict_model, "Checkpoint path")->required();
  predict_cmd->add_option("--image", predict_image, "Image path")->required();
  predict_cmd->add_option("--threshold", threshold, "Decision threshold");

  // summary
  auto* summary_cmd = app.add_subcommand("summary", "Print the architecture table");
  summary_cmd->add_option("--image-size", image_size, "Square model input size");
  summary_cmd->add_option("--seed", seed, "Random seed");

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "Print a patch of rescaled pixels");
  std::string inspect_image;
  int inspect_row = 75, inspect_col = 75, inspect_size = 25;
  inspect_cmd->add_option("--image", inspect_image, "Image path")->required();
  inspect_cmd->add_option("--row", inspect_row, "Patch top row");
  inspect_cmd->add_option("--col", inspect_col, "Patch left column");
  inspect_cmd->add_option("--size", inspect_size, "Patch size");
  inspect_cmd->add_option("--image-size", image_size, "Loaded image size");

  // history-export
  auto* hist_cmd = app.add_subcommand("history-export", "Re-emit a training history table");
  std::string hist_in, hist_out;
  hist_cmd->add_option("--history", hist_in, "History file written by train")->required();
  hist_cmd->add_option("--out", hist_out, "Output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Keep the documented exit-code contract: help/version exit 0, any
    // usage error exits 1.
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_ok, synth_bad, synth_out, seed, image_size, synth_force);
    }
    if (train_cmd->parsed()) {
      if (threshold < 0.0f || threshold > 1.0f) {
        std::cerr << "threshold must be in [0,1]\n";
        return kExitError;
      }
      return cmd_train(train_data, train_model, train_history, epochs, batch_size, seed,
                       val_fraction, threshold, image_size, learning_rate,
                       augment_flags.resolve());
    }
    if (eval_cmd->parsed()) {
      return cmd_evaluate(eval_data, eval_model, threshold, batch_size, eval_tsv);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(predict_model, predict_image, threshold);
    }
    if (summary_cmd->parsed()) {
      return cmd_summary(image_size, seed);
    }
    if (inspect_cmd->parsed()) {
      return cmd_inspect(inspect_image, inspect_row, inspect_col, inspect_size, image_size);
    }
    if (hist_cmd->parsed()) {
      return cmd_history_export(hist_in, hist_out);
    }
  } catch (const platenet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
